//! Closed-form branch weights for the next reading given the readings so far.
//!
//! Three independent routes to the same number: the sufficient-statistic form
//! in `posterior_weight`, the positive-exponent mixture weights written out
//! for an equal-superposition start (`mixture_posterior`), and the ordinary
//! Bayesian likelihood ratio (`bayes_posterior`).

use super::PointerModel;
use crate::qubit::QubitState;

/// Probability that the next reading comes from the `N(+g, sigma^2)` branch
/// after readings summing to `sum`: `1 / (1 + (beta0^2/alpha0^2) e^{-2 g S / sigma^2})`.
pub fn posterior_weight(sum: f64, s0: &QubitState, pm: &PointerModel) -> f64 {
    let (a, b) = (s0.alpha().abs(), s0.beta().abs());
    if b == 0.0 {
        return 1.0;
    }
    if a == 0.0 {
        return 0.0;
    }
    let t = 2.0 * (b.ln() - a.ln()) - 2.0 * pm.g() * sum / (pm.sigma() * pm.sigma());
    logistic(-t)
}

/// Branch weight for an equal-superposition start written as
/// `e^{sum (q+1)^2 / 2 sigma^2} / (e^{sum (q+1)^2 / 2 sigma^2} + e^{sum (q-1)^2 / 2 sigma^2})`
/// with unit coupling.
pub fn mixture_posterior(readings: &[f64], sigma: f64) -> f64 {
    let two_var = 2.0 * sigma * sigma;
    let plus: f64 = readings.iter().map(|q| (q + 1.0).powi(2)).sum::<f64>() / two_var;
    let minus: f64 = readings.iter().map(|q| (q - 1.0).powi(2)).sum::<f64>() / two_var;
    logistic(plus - minus)
}

/// Likelihood-ratio posterior `alpha0^2 L+ / (alpha0^2 L+ + beta0^2 L-)` with
/// Gaussian likelihoods `L+- = prod N(q; +-g, sigma^2)`.
pub fn bayes_posterior(readings: &[f64], s0: &QubitState, pm: &PointerModel) -> f64 {
    let two_var = 2.0 * pm.sigma() * pm.sigma();
    let log_plus: f64 = -readings.iter().map(|q| (q - pm.g()).powi(2)).sum::<f64>() / two_var;
    let log_minus: f64 = -readings.iter().map(|q| (q + pm.g()).powi(2)).sum::<f64>() / two_var;
    let (a, b) = (s0.alpha().abs(), s0.beta().abs());
    if b == 0.0 {
        return 1.0;
    }
    if a == 0.0 {
        return 0.0;
    }
    logistic((2.0 * a.ln() + log_plus) - (2.0 * b.ln() + log_minus))
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
