//! Two decision protocols for the symmetric state pair.
//!
//! *Iterative*: walk until a collapse boundary is crossed, then measure
//! `S_z` strongly and guess `Psi1` on outcome `One`.
//!
//! *Hypothesis test*: take exactly `m` weak readings (no boundaries), average
//! them and guess `Psi1` when the average is negative.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{helstrom_bound, make_discrimination_pair, QubitState};
use crate::stats::{binomial_stderr, derive_seed, empirical_cdf, EmpiricalCdf, RngStream};
use crate::walk::{self, CollapseLabel, Outcome, PointerModel, WalkBoundaries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    /// The state at `45 + theta/2` degrees, closer to `|1>`.
    Psi1,
    /// The state at `45 - theta/2` degrees, closer to `|0>`.
    Psi2,
}

impl Hypothesis {
    pub fn other(self) -> Self {
        match self {
            Hypothesis::Psi1 => Hypothesis::Psi2,
            Hypothesis::Psi2 => Hypothesis::Psi1,
        }
    }

    /// Equal priors, stratified: even trials send `Psi1`, odd trials `Psi2`.
    pub fn for_trial(trial: u64) -> Self {
        if trial.is_multiple_of(2) {
            Hypothesis::Psi1
        } else {
            Hypothesis::Psi2
        }
    }
}

/// The two candidate states separated by `theta` degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationPair {
    pub theta_deg: f64,
    pub psi1: QubitState,
    pub psi2: QubitState,
}

impl DiscriminationPair {
    pub fn new(theta_deg: f64) -> Result<Self> {
        let (psi1, psi2) = make_discrimination_pair(theta_deg)?;
        Ok(DiscriminationPair { theta_deg, psi1, psi2 })
    }

    pub fn state(&self, h: Hypothesis) -> QubitState {
        match h {
            Hypothesis::Psi1 => self.psi1,
            Hypothesis::Psi2 => self.psi2,
        }
    }

    pub fn helstrom(&self) -> f64 {
        helstrom_bound(self.theta_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub guess: Hypothesis,
    pub truth: Hypothesis,
    /// Mean reading; only set by the hypothesis test.
    pub statistic: Option<f64>,
    pub steps: u64,
    /// Walk label; only set by the iterative protocol.
    pub walk_label: Option<CollapseLabel>,
    /// The walk hit the step cap and was decided by the strong measurement anyway.
    pub maxed_out: bool,
    /// The final state sits on the far side of 45 degrees from the truth,
    /// i.e. the state drifted toward the other hypothesis.
    pub drifted: bool,
}

impl ProtocolResult {
    pub fn correct(&self) -> bool {
        self.guess == self.truth
    }
}

fn drifted(truth: Hypothesis, s: &QubitState) -> bool {
    let a = s.angle().degrees();
    match truth {
        Hypothesis::Psi1 => a < 45.0,
        Hypothesis::Psi2 => a > 45.0,
    }
}

/// Walk to a boundary, then measure strongly.
pub fn iterative_trial(
    pair: &DiscriminationPair,
    truth: Hypothesis,
    wb: &WalkBoundaries,
    pm: &PointerModel,
    max_steps: u64,
    rng: &mut RngStream,
) -> Result<ProtocolResult> {
    let start = pair.state(truth);
    let (steps, final_state, label) = walk::run_walk_with(&start, pm, wb, max_steps, rng, |_, _| {})?;
    let guess = match walk::strong_measure(&final_state, rng) {
        Outcome::One => Hypothesis::Psi1,
        Outcome::Zero => Hypothesis::Psi2,
    };
    Ok(ProtocolResult {
        guess,
        truth,
        statistic: None,
        steps,
        walk_label: Some(label),
        maxed_out: label == CollapseLabel::MaxedOut,
        drifted: drifted(truth, &final_state),
    })
}

/// Exactly `m` weak readings, decided by the sign of their mean.
/// A mean of exactly zero is broken by one extra fair coin.
pub fn hypothesis_trial(
    pair: &DiscriminationPair,
    truth: Hypothesis,
    m: u32,
    pm: &PointerModel,
    rng: &mut RngStream,
) -> Result<ProtocolResult> {
    if m < 1 {
        return Err(Error::invalid("m", "need at least one weak measurement"));
    }
    let mut state = pair.state(truth);
    let mut sum = 0.0;
    for _ in 0..m {
        let (next, x) = walk::step(&state, pm, rng);
        state = next;
        sum += x;
    }
    let mean = sum / m as f64;
    let guess = if mean < 0.0 {
        Hypothesis::Psi1
    } else if mean > 0.0 {
        Hypothesis::Psi2
    } else if rng.bernoulli(0.5) {
        Hypothesis::Psi1
    } else {
        Hypothesis::Psi2
    };
    Ok(ProtocolResult {
        guess,
        truth,
        statistic: Some(mean),
        steps: m as u64,
        walk_label: None,
        maxed_out: false,
        drifted: drifted(truth, &state),
    })
}

/// Success frequencies over a grid of separations, with the Helstrom optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessCurve {
    pub theta_grid: Vec<f64>,
    pub success: Vec<f64>,
    pub stderr: Vec<f64>,
    pub helstrom: Vec<f64>,
}

impl SuccessCurve {
    fn from_counts(theta_grid: &[f64], successes: &[u64], trials: u64) -> Self {
        SuccessCurve {
            theta_grid: theta_grid.to_vec(),
            success: successes.iter().map(|&k| k as f64 / trials as f64).collect(),
            stderr: successes.iter().map(|&k| binomial_stderr(k, trials)).collect(),
            helstrom: theta_grid.iter().map(|&t| helstrom_bound(t)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.theta_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_grid.is_empty()
    }
}

fn count_parallel<F>(trials: u64, seed: u64, f: F) -> Result<u64>
where
    F: Fn(u64, &mut RngStream) -> Result<bool> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i);
            f(i, &mut rng)
                .map(u64::from)
                .map_err(|e| Error::Trial { trial: i, source: Box::new(e) })
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Weak-process success `P(psi1 -> |1~>)`: the fraction of walks started at
/// `psi1` that cross the boundary near `|1>`. No strong measurement.
pub fn weak_process_curve(
    theta_grid: &[f64],
    wb: &WalkBoundaries,
    pm: &PointerModel,
    max_steps: u64,
    trials: u64,
    master_seed: u64,
) -> Result<SuccessCurve> {
    if trials < 1 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let mut successes = Vec::with_capacity(theta_grid.len());
    for (k, &theta) in theta_grid.iter().enumerate() {
        let pair = DiscriminationPair::new(theta)?;
        let seed = derive_seed(master_seed, k as u64);
        let hits = count_parallel(trials, seed, |_, rng| {
            let (_, _, label) = walk::run_walk_with(&pair.psi1, pm, wb, max_steps, rng, |_, _| {})?;
            Ok(label == CollapseLabel::One)
        })?;
        successes.push(hits);
    }
    Ok(SuccessCurve::from_counts(theta_grid, &successes, trials))
}

/// Full iterative protocol (walk plus strong measurement) with equal priors.
pub fn iterative_success_curve(
    theta_grid: &[f64],
    wb: &WalkBoundaries,
    pm: &PointerModel,
    max_steps: u64,
    trials: u64,
    master_seed: u64,
) -> Result<SuccessCurve> {
    if trials < 1 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let mut successes = Vec::with_capacity(theta_grid.len());
    for (k, &theta) in theta_grid.iter().enumerate() {
        let pair = DiscriminationPair::new(theta)?;
        let seed = derive_seed(master_seed, k as u64);
        successes.push(count_parallel(trials, seed, |i, rng| {
            iterative_trial(&pair, Hypothesis::for_trial(i), wb, pm, max_steps, rng).map(|r| r.correct())
        })?);
    }
    Ok(SuccessCurve::from_counts(theta_grid, &successes, trials))
}

/// Sign-test success over a grid of separations, `m` readings per trial.
pub fn hypothesis_success_curve(
    theta_grid: &[f64],
    m: u32,
    pm: &PointerModel,
    trials: u64,
    master_seed: u64,
) -> Result<SuccessCurve> {
    if trials < 100 {
        return Err(Error::invalid("trials", format!("need at least 100, got {trials}")));
    }
    let mut successes = Vec::with_capacity(theta_grid.len());
    for (k, &theta) in theta_grid.iter().enumerate() {
        let pair = DiscriminationPair::new(theta)?;
        let seed = derive_seed(master_seed, k as u64);
        successes.push(count_parallel(trials, seed, |i, rng| {
            hypothesis_trial(&pair, Hypothesis::for_trial(i), m, pm, rng).map(|r| r.correct())
        })?);
    }
    Ok(SuccessCurve::from_counts(theta_grid, &successes, trials))
}

/// Empirical CDF of the mean of `m` readings started from `start`.
pub fn average_cdf(
    start: &QubitState,
    m: u32,
    pm: &PointerModel,
    trials: u64,
    master_seed: u64,
) -> Result<EmpiricalCdf> {
    if trials < 1000 {
        return Err(Error::invalid("trials", format!("need at least 1000, got {trials}")));
    }
    if m < 1 {
        return Err(Error::invalid("m", "need at least one weak measurement"));
    }
    let means: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(master_seed, i);
            let mut s = *start;
            let mut sum = 0.0;
            for _ in 0..m {
                let (next, x) = walk::step(&s, pm, &mut rng);
                s = next;
                sum += x;
            }
            sum / m as f64
        })
        .collect();
    Ok(empirical_cdf(&means))
}

/// Split of the iterative protocol's error into weak-walk and strong-measurement factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub truth: Hypothesis,
    pub trials: u64,
    /// `P^w(start -> |0~>)`.
    pub weak_to_zero: f64,
    /// `P^w(start -> |1~>)`.
    pub weak_to_one: f64,
    /// Fraction of walks that hit the step cap.
    pub maxed_out: f64,
    /// `P^s(|0~> -> |0>) = cos^2(a0~)`.
    pub strong_zero_from_zero: f64,
    /// `P^s(|1~> -> |0>) = cos^2(a1~)`.
    pub strong_zero_from_one: f64,
    /// Mean `cos^2` of the final angle over capped walks (0 if none).
    pub strong_zero_from_maxed: f64,
    pub error: f64,
    pub success: f64,
    pub stderr: f64,
}

/// For `Psi1` the error is a strong `|0>`; for `Psi2` a strong `|1>`.
pub fn error_decomposition(
    pair: &DiscriminationPair,
    truth: Hypothesis,
    wb: &WalkBoundaries,
    pm: &PointerModel,
    max_steps: u64,
    trials: u64,
    master_seed: u64,
) -> Result<ErrorDecomposition> {
    let spec = walk::EnsembleSpec {
        start: pair.state(truth),
        pointer: *pm,
        boundaries: *wb,
        max_steps,
    };
    let runs = walk::run_ensemble(&spec, trials, master_seed)?;
    let n = trials as f64;
    let s0 = wb.a0_tilde().to_radians().cos().powi(2);
    let s1 = wb.a1_tilde().to_radians().cos().powi(2);

    // per-trial probability of a strong |0> given where the walk stopped
    let zero_prob: Vec<f64> = runs
        .iter()
        .map(|w| match w.label {
            CollapseLabel::Zero => s0,
            CollapseLabel::One => s1,
            CollapseLabel::MaxedOut => w.final_state.born_probabilities().0,
        })
        .collect();
    let count = |l: CollapseLabel| runs.iter().filter(|w| w.label == l).count() as f64;
    let (c0, c1, cm) = (count(CollapseLabel::Zero), count(CollapseLabel::One), count(CollapseLabel::MaxedOut));
    let maxed_mean = if cm > 0.0 {
        runs.iter()
            .filter(|w| w.label == CollapseLabel::MaxedOut)
            .map(|w| w.final_state.born_probabilities().0)
            .sum::<f64>()
            / cm
    } else {
        0.0
    };

    let (w0, w1, wm) = (c0 / n, c1 / n, cm / n);
    let p_zero = w0 * s0 + w1 * s1 + wm * maxed_mean;
    let p_one = w0 * (1.0 - s0) + w1 * (1.0 - s1) + wm * (1.0 - maxed_mean);
    let (error, success) = match truth {
        Hypothesis::Psi1 => (p_zero, p_one),
        Hypothesis::Psi2 => (p_one, p_zero),
    };
    let (_, stderr) = crate::stats::mean_and_stderr(&zero_prob);

    Ok(ErrorDecomposition {
        truth,
        trials,
        weak_to_zero: w0,
        weak_to_one: w1,
        maxed_out: wm,
        strong_zero_from_zero: s0,
        strong_zero_from_one: s1,
        strong_zero_from_maxed: maxed_mean,
        error,
        success,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn pm(sigma: f64) -> PointerModel {
        PointerModel::new(sigma).unwrap()
    }

    #[test]
    fn orthogonal_pair_is_always_resolved() {
        let pair = DiscriminationPair::new(90.0).unwrap();
        let wb = WalkBoundaries::new(0.1, 89.9).unwrap();
        let mut ok = 0;
        for i in 0..10_000u64 {
            let mut rng = RngStream::new(1, i);
            let r = iterative_trial(&pair, Hypothesis::for_trial(i), &wb, &pm(5.0), 5000, &mut rng).unwrap();
            assert_eq!(r.steps, 0);
            ok += r.correct() as u32;
        }
        assert!(ok as f64 / 10_000.0 >= 0.99);
    }

    #[test]
    fn indistinguishable_pair_is_a_coin_flip() {
        let pair = DiscriminationPair::new(1e-6).unwrap();
        let wb = WalkBoundaries::new(10.0, 80.0).unwrap();
        let n = 4000u64;
        let hits = count_parallel(n, 3, |i, rng| {
            iterative_trial(&pair, Hypothesis::for_trial(i), &wb, &pm(2.0), 800, rng).map(|r| r.correct())
        })
        .unwrap();
        let p = hits as f64 / n as f64;
        assert!((p - 0.5).abs() < 3.0 * binomial_stderr(hits, n).max(0.5 / (n as f64).sqrt()));

        let hits = count_parallel(n, 4, |i, rng| {
            hypothesis_trial(&pair, Hypothesis::for_trial(i), 5, &pm(3.0), rng).map(|r| r.correct())
        })
        .unwrap();
        let p = hits as f64 / n as f64;
        assert!((p - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn weak_process_beats_helstrom_at_fifty_degrees() {
        let wb = WalkBoundaries::new(1.0, 89.0).unwrap();
        let curve = weak_process_curve(&[50.0], &wb, &pm(5.0), 5000, 4000, 9).unwrap();
        assert!(curve.success[0] >= curve.helstrom[0] - 2.0 * curve.stderr[0], "{curve:?}");
    }

    #[test]
    fn single_reading_sign_probability() {
        // truth |1>: reading ~ N(-1, 9), success = Phi(1/3)
        let pair = DiscriminationPair::new(90.0).unwrap();
        let expected = Normal::new(0.0, 1.0).unwrap().cdf(1.0 / 3.0);
        assert!((expected - 0.6306).abs() < 1e-4);
        let n = 100_000u64;
        let hits = count_parallel(n, 5, |_, rng| {
            hypothesis_trial(&pair, Hypothesis::Psi1, 1, &pm(3.0), rng).map(|r| r.correct())
        })
        .unwrap();
        let p = hits as f64 / n as f64;
        assert!((p - expected).abs() < 3.0 * binomial_stderr(hits, n), "{p}");
    }

    #[test]
    fn more_readings_help() {
        let pm3 = pm(3.0);
        let c5 = hypothesis_success_curve(&[50.0], 5, &pm3, 5000, 1).unwrap();
        let c20 = hypothesis_success_curve(&[50.0], 20, &pm3, 5000, 1).unwrap();
        assert!(c20.success[0] > c5.success[0]);
        assert!(hypothesis_success_curve(&[50.0], 5, &pm3, 99, 1).is_err());
    }

    #[test]
    fn hypothesis_result_fields() {
        let pair = DiscriminationPair::new(40.0).unwrap();
        let mut rng = RngStream::new(0, 0);
        let r = hypothesis_trial(&pair, Hypothesis::Psi2, 7, &pm(3.0), &mut rng).unwrap();
        assert!(r.statistic.is_some() && r.walk_label.is_none());
        assert_eq!(r.steps, 7);
        assert!(hypothesis_trial(&pair, Hypothesis::Psi2, 0, &pm(3.0), &mut rng).is_err());
        let wb = WalkBoundaries::new(10.0, 80.0).unwrap();
        let r = iterative_trial(&pair, Hypothesis::Psi1, &wb, &pm(30.0), 1, &mut rng).unwrap();
        assert!(r.maxed_out && r.statistic.is_none());
    }

    #[test]
    fn hypothesis_curve_is_monotone_and_below_helstrom() {
        let grid = [10.0, 30.0, 50.0, 70.0, 90.0];
        let c = hypothesis_success_curve(&grid, 10, &pm(3.0), 4000, 77).unwrap();
        for k in 0..grid.len() {
            assert!(c.success[k] <= c.helstrom[k] + 3.0 * c.stderr[k]);
            if k > 0 {
                let slack = 3.0 * (c.stderr[k].powi(2) + c.stderr[k - 1].powi(2)).sqrt();
                assert!(c.success[k] + slack >= c.success[k - 1]);
            }
        }
        // large m at 90 degrees approaches 1
        let c = hypothesis_success_curve(&[90.0], 200, &pm(3.0), 1000, 2).unwrap();
        assert!(c.success[0] > 0.99 && c.success[0] <= 1.0);
    }

    #[test]
    fn mirrored_protocol_has_same_statistics() {
        let pair = DiscriminationPair::new(40.0).unwrap();
        let n = 20_000u64;
        let a = count_parallel(n, derive_seed(8, 0), |_, rng| {
            hypothesis_trial(&pair, Hypothesis::Psi1, 10, &pm(3.0), rng).map(|r| r.correct())
        })
        .unwrap();
        let b = count_parallel(n, derive_seed(8, 1), |_, rng| {
            hypothesis_trial(&pair, Hypothesis::Psi2, 10, &pm(3.0), rng).map(|r| r.correct())
        })
        .unwrap();
        let slack = 3.0 * (binomial_stderr(a, n).powi(2) + binomial_stderr(b, n).powi(2)).sqrt();
        assert!(((a as f64 - b as f64) / n as f64).abs() < slack);
    }

    #[test]
    fn eigenstate_average_is_gaussian() {
        let m = 5;
        let cdf = average_cdf(&QubitState::ZERO, m, &pm(3.0), 20_000, 3).unwrap();
        let n = Normal::new(1.0, 3.0 / (m as f64).sqrt()).unwrap();
        let d = crate::stats::ks_statistic(&cdf.values, |_, x| n.cdf(x));
        assert!(d < crate::stats::ks_critical_value(cdf.len(), 0.01));
        assert!(cdf.levels.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*cdf.levels.last().unwrap(), 1.0);
        assert!(average_cdf(&QubitState::ZERO, m, &pm(3.0), 999, 3).is_err());
    }

    #[test]
    fn decomposition_on_axes_and_near_axes() {
        let pair = DiscriminationPair::new(50.0).unwrap();
        let wb = WalkBoundaries::new(0.0, 90.0).unwrap();
        // axis boundaries are never reached exactly; cap keeps it finite
        let d = error_decomposition(&pair, Hypothesis::Psi1, &wb, &pm(0.05), 3, 200, 1).unwrap();
        assert_eq!(d.strong_zero_from_zero, 1.0);
        assert!(d.strong_zero_from_one < 1e-30);
        assert!((d.error + d.success - 1.0).abs() < 1e-12);

        let wb = WalkBoundaries::new(1.0, 89.0).unwrap();
        let d = error_decomposition(&pair, Hypothesis::Psi1, &wb, &pm(5.0), 5000, 2000, 2).unwrap();
        assert!((d.strong_zero_from_one - 89f64.to_radians().cos().powi(2)).abs() < 1e-15);
        assert!((d.strong_zero_from_one - 3.0459e-4).abs() < 1e-7);
        assert!((d.error + d.success - 1.0).abs() < 1e-12);
        assert!((d.weak_to_zero + d.weak_to_one + d.maxed_out - 1.0).abs() < 1e-12);
        let expected = d.weak_to_zero * d.strong_zero_from_zero + d.weak_to_one * d.strong_zero_from_one;
        assert!((d.error - expected).abs() < 1e-12);
    }

    #[test]
    fn exact_axis_boundaries_give_weak_error() {
        // with a0 = 0 and a1 = 90 the strong factors are exactly 1 and 0,
        // so Err equals the weak-process error; sharp needle collapses fully
        let pair = DiscriminationPair::new(50.0).unwrap();
        let wb = WalkBoundaries::new(0.0, 90.0).unwrap();
        let d = error_decomposition(&pair, Hypothesis::Psi1, &wb, &pm(0.001), 5, 2000, 4).unwrap();
        assert_eq!(d.maxed_out, 0.0);
        assert!((d.error - d.weak_to_zero).abs() < 1e-12);
    }
}
