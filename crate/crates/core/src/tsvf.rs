//! Post-selected pointer statistics for an imaginary weak value.
//!
//! A qubit pre-selected in `psi_in` is coupled to a Gaussian needle through
//! `exp(-i g A X)` with `A^2 = 1`, then post-selected on `psi_fin`. With
//! weak value `<A>_w = i b` and `b = cot(eta / 2)`, the surviving needle
//! density is proportional to `(cos gx + b sin gx)^2 exp(-x^2 / 2 sigma^2)`
//! and its first two moments have closed forms in `eta`, `g` and `sigma`.
//! Everything here is evaluated both in closed form and by quadrature of
//! that density.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_segments, QuadOptions};
use crate::qubit::{state_from_angle, QubitState};
use crate::stats::RngStream;

/// Half-width of the integration window in units of `sigma`.
pub const WINDOW_SIGMAS: f64 = 12.0;

/// `(eta, g, sigma)`, with `eta` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsvfSetup {
    eta: f64,
    g: f64,
    sigma: f64,
}

impl TsvfSetup {
    pub fn new(eta: f64, g: f64, sigma: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= PI) {
            return Err(Error::invalid(
                "eta",
                format!("must lie in (0, pi]; eta = 0 has zero post-selection probability (got {eta})"),
            ));
        }
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::invalid("g", format!("must be non-negative, got {g}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
        }
        Ok(TsvfSetup { eta, g, sigma })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Imaginary part of the weak value, `cot(eta / 2)`.
    pub fn b(&self) -> f64 {
        let (s, c) = (self.eta / 2.0).sin_cos();
        c / s
    }

    /// `(1 + b^2) / 2 = 1 / (2 sin^2(eta/2))`.
    pub fn a_plus(&self) -> f64 {
        0.5 * (1.0 + self.b().powi(2))
    }

    /// `(1 - b^2) / 2 = -cos(eta) / (2 sin^2(eta/2))`.
    pub fn a_minus(&self) -> f64 {
        0.5 * (1.0 - self.b().powi(2))
    }

    /// `exp(-2 (g sigma)^2)`, the needle average of `cos(2 g X)`.
    fn damping(&self) -> f64 {
        (-2.0 * (self.g * self.sigma).powi(2)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValue {
    pub re: f64,
    pub im: f64,
}

/// A 2x2 Hermitian observable squaring to the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observable {
    m: [[Complex64; 2]; 2],
}

impl Observable {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let herm = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| (m[i][j] - m[j][i].conj()).norm())
            .fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let mut dev: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let sq = m[i][0] * m[0][j] + m[i][1] * m[1][j];
                let id = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                dev = dev.max((sq - id).norm());
            }
        }
        if dev > 1e-10 {
            return Err(Error::NotInvolutory { deviation: dev });
        }
        Ok(Observable { m })
    }

    /// `[[0, -i], [i, 0]]`.
    pub fn pauli_y() -> Self {
        let z = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        Observable { m: [[z, -i], [i, z]] }
    }

    pub fn pauli_z() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        Observable { m: [[one, z], [z, -one]] }
    }

    fn apply(&self, s: &QubitState) -> [Complex64; 2] {
        let (a, b) = (s.alpha(), s.beta());
        [self.m[0][0] * a + self.m[0][1] * b, self.m[1][0] * a + self.m[1][1] * b]
    }
}

/// `<fin|A|in> / <fin|in>`; fails when the states are orthogonal.
pub fn weak_value(psi_in: &QubitState, psi_fin: &QubitState, a: &Observable) -> Result<WeakValue> {
    let overlap = psi_fin.alpha() * psi_in.alpha() + psi_fin.beta() * psi_in.beta();
    if overlap.abs() <= 1e-12 {
        return Err(Error::OrthogonalSelection { overlap });
    }
    let av = a.apply(psi_in);
    let num = av[0] * psi_fin.alpha() + av[1] * psi_fin.beta();
    let w = num / overlap;
    Ok(WeakValue { re: w.re, im: w.im })
}

/// The post-selected state `(|0> + |1>) / sqrt(2)`.
pub fn postselected_state() -> QubitState {
    state_from_angle(45.0)
}

/// Pre-selected state `alpha|0> - beta|1>` with
/// `alpha = (cos(eta/2) + sin(eta/2)) / sqrt(2)`, `beta = (cos(eta/2) - sin(eta/2)) / sqrt(2)`;
/// returned with the sign folded in, i.e. amplitudes `(alpha, -beta)`.
pub fn input_state_for_eta(eta: f64) -> Result<QubitState> {
    if !(eta > 0.0 && eta <= PI) {
        return Err(Error::invalid("eta", format!("must lie in (0, pi], got {eta}")));
    }
    let (s, c) = (eta / 2.0).sin_cos();
    QubitState::new(FRAC_1_SQRT_2 * (c + s), -FRAC_1_SQRT_2 * (c - s))
}

/// `|<fin|in>|^2 = sin^2(eta / 2)`, the pre-coupling post-selection probability.
pub fn postselect_probability(setup: &TsvfSetup) -> f64 {
    (setup.eta / 2.0).sin().powi(2)
}

/// Probability that post-selection succeeds after the coupling,
/// `(1 - cos(eta) exp(-2 (g sigma)^2)) / 2`.
pub fn acceptance_probability(setup: &TsvfSetup) -> f64 {
    0.5 * (1.0 - setup.eta.cos() * setup.damping())
}

/// Post-selected pointer mean, `sin(eta) 2 g sigma^2 / (exp(2 (g sigma)^2) - cos(eta))`.
pub fn mean_fin(setup: &TsvfSetup) -> f64 {
    let gs2 = (setup.g * setup.sigma).powi(2);
    setup.eta.sin() * 2.0 * setup.g * setup.sigma.powi(2) / ((2.0 * gs2).exp() - setup.eta.cos())
}

/// The same mean from the weak-value mixture
/// `b <X sin 2gX> / (a+ + a- <cos 2gX>)`.
pub fn mean_fin_mixture(setup: &TsvfSetup) -> f64 {
    let d = setup.damping();
    let x_sin = 2.0 * setup.g * setup.sigma.powi(2) * d;
    setup.b() * x_sin / (setup.a_plus() + setup.a_minus() * d)
}

/// `eta* = arccos(exp(-2 (g sigma)^2))` and the maximal mean
/// `2 g sigma^2 / sqrt(exp(4 (g sigma)^2) - 1)`.
pub fn optimal_eta(g: f64, sigma: f64) -> Result<(f64, f64)> {
    let gs = g * sigma;
    if !(gs > 0.0 && gs.is_finite()) || sigma <= 0.0 {
        return Err(Error::invalid("g*sigma", format!("must be positive, got {gs}")));
    }
    let eta = (-2.0 * gs * gs).exp().acos();
    // exp_m1 keeps precision when g sigma is small
    let mean_max = 2.0 * g * sigma * sigma / (4.0 * gs * gs).exp_m1().sqrt();
    Ok((eta, mean_max))
}

/// `sigma^2 [1 - cos(eta) e (1 - 4 g^2 sigma^2)] / [1 - cos(eta) e]` with `e = exp(-2 (g sigma)^2)`.
pub fn second_moment_fin(setup: &TsvfSetup) -> f64 {
    let ce = setup.eta.cos() * setup.damping();
    let gs2 = (setup.g * setup.sigma).powi(2);
    setup.sigma.powi(2) * (1.0 - ce * (1.0 - 4.0 * gs2)) / (1.0 - ce)
}

/// The same second moment from the a+/a- mixture.
pub fn second_moment_fin_mixture(setup: &TsvfSetup) -> f64 {
    let d = setup.damping();
    let s2 = setup.sigma.powi(2);
    let gs2 = (setup.g * setup.sigma).powi(2);
    let (ap, am) = (setup.a_plus(), setup.a_minus());
    s2 * (ap + am * d * (1.0 - 4.0 * gs2)) / (ap + am * d)
}

/// Unnormalized post-selected needle density `(cos gx + b sin gx)^2 exp(-x^2 / 2 sigma^2)`.
pub fn needle_density(x: f64, setup: &TsvfSetup) -> f64 {
    let (s, c) = (setup.g * x).sin_cos();
    (c + setup.b() * s).powi(2) * (-x * x / (2.0 * setup.sigma.powi(2))).exp()
}

/// Post-selection success probability for a needle at `x`:
/// `|<fin| exp(-i g A x) |in>|^2 = sin^2(eta/2) (cos gx + b sin gx)^2 = sin^2(gx + eta/2)`.
pub fn postselect_weight(x: f64, setup: &TsvfSetup) -> f64 {
    (setup.g * x + setup.eta / 2.0).sin().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    /// `sin^2(eta / 2)`.
    pub postselect_prob: f64,
    /// Post-selection success probability including the coupling.
    pub acceptance_prob: f64,
}

/// Closed-form moments.
pub fn analytic_moments(setup: &TsvfSetup) -> MomentReport {
    let mean = mean_fin(setup);
    let second = second_moment_fin(setup);
    MomentReport {
        mean,
        second_moment: second,
        variance: second - mean * mean,
        postselect_prob: postselect_probability(setup),
        acceptance_prob: acceptance_probability(setup),
    }
}

fn moment_quad_options(scale: f64) -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15 * scale,
        rel_tol: 1e-13,
        max_subdivisions: 20_000,
    }
}

/// Breakpoints splitting `[-L, L]` symmetrically.
fn window(sigma: f64) -> Vec<f64> {
    let l = WINDOW_SIGMAS * sigma;
    (-8..=8).map(|k| l * k as f64 / 8.0).collect()
}

/// Acceptance-weighted density: `sin^2(eta/2) * needle_density / (sigma sqrt(2 pi))`,
/// whose integral is the post-coupling acceptance probability.
fn acceptance_density(x: f64, setup: &TsvfSetup) -> f64 {
    postselect_probability(setup) * needle_density(x, setup) / (setup.sigma * (2.0 * PI).sqrt())
}

/// Moments of the normalized needle density by adaptive quadrature over
/// `[-12 sigma, 12 sigma]`.
pub fn quadrature_moments(setup: &TsvfSetup) -> Result<MomentReport> {
    let brk = window(setup.sigma);
    let s = setup.sigma;
    let mass = integrate_segments(&|x| acceptance_density(x, setup), &brk, moment_quad_options(1.0))?.value;
    let m1 = integrate_segments(&|x| x * acceptance_density(x, setup), &brk, moment_quad_options(mass * s))?.value;
    let m2 = integrate_segments(&|x| x * x * acceptance_density(x, setup), &brk, moment_quad_options(mass * s * s))?.value;
    let mean = m1 / mass;
    let second = m2 / mass;
    Ok(MomentReport {
        mean,
        second_moment: second,
        variance: second - mean * mean,
        postselect_prob: postselect_probability(setup),
        acceptance_prob: mass,
    })
}

/// `E[f(X)]` for `X ~ N(0, sigma^2)` by quadrature over `[-12 sigma, 12 sigma]`.
pub fn gaussian_expectation(f: impl Fn(f64) -> f64, sigma: f64) -> Result<f64> {
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let pdf = |x: f64| f(x) * norm * (-x * x / (2.0 * sigma * sigma)).exp();
    Ok(integrate_segments(&pdf, &window(sigma), moment_quad_options(1.0))?.value)
}

/// Cumulative distribution of the normalized density at sorted points,
/// integrating piecewise between consecutive points.
pub fn normalized_cdf_at_sorted(setup: &TsvfSetup, sorted: &[f64]) -> Result<Vec<f64>> {
    let report = quadrature_moments(setup)?;
    let lo = -WINDOW_SIGMAS * setup.sigma;
    let f = |x: f64| acceptance_density(x, setup) / report.acceptance_prob;
    let mut acc = 0.0;
    let mut prev = lo;
    let mut out = Vec::with_capacity(sorted.len());
    for &x in sorted {
        let x = x.max(lo);
        if x > prev {
            acc += integrate_segments(&f, &[prev, x], QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_subdivisions: 200 })?.value;
            prev = x;
        }
        out.push(acc.min(1.0));
    }
    Ok(out)
}

/// One post-selected run: draw a needle position `x ~ N(0, sigma^2)` and keep
/// it with probability `sin^2(eta/2) (cos gx + b sin gx)^2`, which never exceeds 1.
pub fn rejection_sample_run(setup: &TsvfSetup, rng: &mut RngStream) -> Option<f64> {
    let x = rng.gaussian(0.0, setup.sigma);
    if rng.uniform() < postselect_weight(x, setup) {
        Some(x)
    } else {
        None
    }
}

/// Both setups of a two-state separation and how distinguishable their
/// post-selected needles are.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub eta1: f64,
    pub eta2: f64,
    pub g: f64,
    pub sigma: f64,
    pub first: MomentReport,
    pub second: MomentReport,
    /// `mean(eta1) - mean(eta2)`.
    pub mean_gap: f64,
    /// One-sample Bayes error `(1/2) int min(p1, p2)` with equal priors.
    pub bayes_error: f64,
}

pub fn separation_report(eta1: f64, eta2: f64, g: f64, sigma: f64) -> Result<SeparationReport> {
    let s1 = TsvfSetup::new(eta1, g, sigma)?;
    let s2 = TsvfSetup::new(eta2, g, sigma)?;
    let q1 = quadrature_moments(&s1)?;
    let q2 = quadrature_moments(&s2)?;
    let p1 = |x: f64| acceptance_density(x, &s1) / q1.acceptance_prob;
    let p2 = |x: f64| acceptance_density(x, &s2) / q2.acceptance_prob;
    let overlap = integrate_segments(
        &|x| p1(x).min(p2(x)),
        &window(sigma),
        QuadOptions { abs_tol: 1e-11, rel_tol: 1e-10, max_subdivisions: 20_000 },
    )?
    .value;
    let first = analytic_moments(&s1);
    let second = analytic_moments(&s2);
    Ok(SeparationReport {
        eta1,
        eta2,
        g,
        sigma,
        first,
        second,
        mean_gap: first.mean - second.mean,
        bayes_error: 0.5 * overlap,
    })
}

/// One row of the `tsvf-report` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsvfReportRow {
    pub eta: f64,
    pub g: f64,
    pub sigma: f64,
    pub mean_analytic: f64,
    pub mean_quadrature: f64,
    pub second_moment_analytic: f64,
    pub second_moment_quadrature: f64,
    pub postselect_prob: f64,
}

pub fn report_row(setup: &TsvfSetup) -> Result<TsvfReportRow> {
    let q = quadrature_moments(setup)?;
    Ok(TsvfReportRow {
        eta: setup.eta,
        g: setup.g,
        sigma: setup.sigma,
        mean_analytic: mean_fin(setup),
        mean_quadrature: q.mean,
        second_moment_analytic: second_moment_fin(setup),
        second_moment_quadrature: q.second_moment,
        postselect_prob: postselect_probability(setup),
    })
}

#[cfg(test)]
mod tests;
