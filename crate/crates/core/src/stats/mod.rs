//! Seeded randomness, distribution fitting and the small estimators shared
//! by every experiment.

mod cdf;
mod fit;
mod rng;

pub use cdf::{empirical_cdf, ks_critical_value, ks_statistic, quantile, median_stderr, EmpiricalCdf};
pub use fit::{density_histogram, fit_lognormal, fit_lognormal_with_bins, lognormal_pdf, quadratic_scaling_fit, sturges_bins, LogNormalFit, ScalingFit};
pub use rng::{derive_seed, gaussian, standard_normal_quantile, RngStream, PRNG_ID};

/// `sqrt(p(1-p)/n)` for the observed frequency `p = successes / trials`.
pub fn binomial_stderr(successes: u64, trials: u64) -> f64 {
    assert!(trials >= 1 && successes <= trials, "need 0 <= successes <= trials, trials >= 1");
    let p = successes as f64 / trials as f64;
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
