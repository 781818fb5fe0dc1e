use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum-likelihood log-normal fit with a histogram goodness-of-fit score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalFit {
    /// Mean of the log-samples.
    pub mu_tilde: f64,
    /// Population standard deviation of the log-samples.
    pub sigma_tilde: f64,
    /// R^2 between the normalized histogram and the fitted density at bin
    /// centers. `NaN` when the fit is degenerate.
    pub r_squared: f64,
    pub bins: usize,
    /// All samples equal; `sigma_tilde` is zero and `r_squared` undefined.
    pub degenerate: bool,
}

impl LogNormalFit {
    pub fn median(&self) -> f64 {
        self.mu_tilde.exp()
    }
}

/// `ceil(log2 n) + 1`.
pub fn sturges_bins(n: usize) -> usize {
    (n as f64).log2().ceil() as usize + 1
}

pub fn lognormal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let z = (x.ln() - mu) / sigma;
    (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Log-normal MLE with Sturges binning for the R^2 score.
pub fn fit_lognormal(samples: &[f64]) -> Result<LogNormalFit> {
    fit_lognormal_with_bins(samples, sturges_bins(samples.len()))
}

pub fn fit_lognormal_with_bins(samples: &[f64], bins: usize) -> Result<LogNormalFit> {
    let n = samples.len();
    if n < 30 {
        return Err(Error::invalid("samples", format!("need at least 30, got {n}")));
    }
    if bins == 0 {
        return Err(Error::invalid("bins", "must be positive"));
    }
    if let Some(bad) = samples.iter().find(|x| **x <= 0.0 || !x.is_finite()) {
        return Err(Error::invalid("samples", format!("must be positive and finite, found {bad}")));
    }

    let nf = n as f64;
    let mu = samples.iter().map(|x| x.ln()).sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x.ln() - mu).powi(2)).sum::<f64>() / nf;
    let sigma = var.sqrt();

    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo || sigma == 0.0 {
        return Ok(LogNormalFit {
            mu_tilde: mu,
            sigma_tilde: 0.0,
            r_squared: f64::NAN,
            bins,
            degenerate: true,
        });
    }

    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let observed: Vec<f64> = counts.iter().map(|&c| c as f64 / (nf * width)).collect();
    let fitted: Vec<f64> = (0..bins)
        .map(|k| lognormal_pdf(lo + (k as f64 + 0.5) * width, mu, sigma))
        .collect();
    let r_squared = r_squared(&observed, &fitted);

    Ok(LogNormalFit {
        mu_tilde: mu,
        sigma_tilde: sigma,
        r_squared,
        bins,
        degenerate: false,
    })
}

/// Histogram of `samples` as `(bin_center, density)` with `bins` equal bins.
pub fn density_histogram(samples: &[f64], bins: usize) -> Vec<(f64, f64)> {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = samples.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (lo + (k as f64 + 0.5) * width, c as f64 / (n * width)))
        .collect()
}

fn r_squared(observed: &[f64], fitted: &[f64]) -> f64 {
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = observed.iter().zip(fitted).map(|(y, f)| (y - f).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// Least-squares fit of `median = c * sigma^2` through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub coefficient: f64,
    pub r_squared: f64,
}

pub fn quadratic_scaling_fit(sigmas: &[f64], medians: &[f64]) -> Result<ScalingFit> {
    if sigmas.len() != medians.len() {
        return Err(Error::invalid("medians", "length differs from sigmas"));
    }
    if sigmas.len() < 4 {
        return Err(Error::invalid("sigmas", format!("need at least 4 points, got {}", sigmas.len())));
    }
    let mut sorted = sigmas.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("sigmas", "values must be distinct"));
    }
    if sigmas.iter().chain(medians).any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::invalid("sigmas", "sigmas and medians must be positive and finite"));
    }
    let x2: Vec<f64> = sigmas.iter().map(|s| s * s).collect();
    let sxy: f64 = x2.iter().zip(medians).map(|(x, y)| x * y).sum();
    let sxx: f64 = x2.iter().map(|x| x * x).sum();
    let c = sxy / sxx;
    let fitted: Vec<f64> = x2.iter().map(|x| c * x).collect();
    let ss_tot: f64 = {
        let mean = medians.iter().sum::<f64>() / medians.len() as f64;
        medians.iter().map(|y| (y - mean).powi(2)).sum()
    };
    if ss_tot == 0.0 {
        return Err(Error::invalid("medians", "all medians equal; R^2 undefined"));
    }
    Ok(ScalingFit {
        coefficient: c,
        r_squared: r_squared(medians, &fitted),
    })
}
