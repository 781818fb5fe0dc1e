//! Sequential weak measurements of a qubit with a Gaussian pointer.
//!
//! Each step couples the state to a fresh needle displaced by `+g` for `|0>`
//! and `-g` for `|1>`, reads the needle, and reweights the amplitudes by the
//! needle's amplitude at the reading. The log-odds `ln(alpha^2 / beta^2)`
//! therefore moves by `2 g x / sigma^2` per reading, a random walk on the
//! quarter circle that is a martingale in the Born weights.

mod posterior;

pub use posterior::{mixture_posterior, bayes_posterior, posterior_weight};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::QubitState;
use crate::stats::RngStream;

/// Gaussian needle with spread `sigma` and displacements `+-g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerModel {
    sigma: f64,
    g: f64,
}

impl PointerModel {
    /// Unit coupling.
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_coupling(sigma, 1.0)
    }

    pub fn with_coupling(sigma: f64, g: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::invalid("g", format!("must be positive, got {g}")));
        }
        Ok(PointerModel { sigma, g })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// Default step cap: `200 sigma^2`.
    pub fn default_max_steps(&self) -> u64 {
        (200.0 * self.sigma * self.sigma).ceil().max(1.0) as u64
    }
}

/// Collapse thresholds in degrees, `0 <= a0_tilde < a1_tilde <= 90`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkBoundaries {
    a0_tilde: f64,
    a1_tilde: f64,
}

impl WalkBoundaries {
    pub fn new(a0_tilde: f64, a1_tilde: f64) -> Result<Self> {
        if !(0.0 <= a0_tilde && a0_tilde < a1_tilde && a1_tilde <= 90.0) {
            return Err(Error::invalid(
                "boundaries",
                format!("need 0 <= a0 < a1 <= 90 degrees, got ({a0_tilde}, {a1_tilde})"),
            ));
        }
        Ok(WalkBoundaries { a0_tilde, a1_tilde })
    }

    pub fn a0_tilde(&self) -> f64 {
        self.a0_tilde
    }

    pub fn a1_tilde(&self) -> f64 {
        self.a1_tilde
    }

    /// `Some(Zero)` at or below `a0`, `Some(One)` at or above `a1`.
    pub fn classify(&self, s: &QubitState) -> Option<CollapseLabel> {
        let a = s.angle().degrees();
        if a <= self.a0_tilde {
            Some(CollapseLabel::Zero)
        } else if a >= self.a1_tilde {
            Some(CollapseLabel::One)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CollapseLabel {
    Zero,
    One,
    MaxedOut,
}

/// Outcome of a strong `S_z` measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
}

/// A full trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkOutcome {
    pub steps: u64,
    pub readings: Vec<f64>,
    pub final_state: QubitState,
    pub label: CollapseLabel,
}

/// A trajectory without its readings, as kept by ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkSummary {
    pub trial: u64,
    pub steps: u64,
    pub final_state: QubitState,
    pub label: CollapseLabel,
}

/// One needle reading: a draw from `alpha^2 N(+g, sigma^2) + beta^2 N(-g, sigma^2)`.
/// Consumes two uniforms (branch, then Gaussian).
pub fn sample_reading(s: &QubitState, pm: &PointerModel, rng: &mut RngStream) -> f64 {
    let (p0, _) = s.born_probabilities();
    let shift = if rng.bernoulli(p0) { pm.g } else { -pm.g };
    rng.gaussian(shift, pm.sigma)
}

/// Reweights the amplitudes by the needle amplitudes at the reading `x0`:
/// `alpha' ~ exp(-(x0 - g)^2 / 4 sigma^2) alpha`, `beta' ~ exp(-(x0 + g)^2 / 4 sigma^2) beta`.
pub fn bias_update(s: &QubitState, x0: f64, pm: &PointerModel) -> QubitState {
    let (alpha, beta) = (s.alpha(), s.beta());
    if alpha == 0.0 || beta == 0.0 {
        return *s;
    }
    let four_var = 4.0 * pm.sigma * pm.sigma;
    if x0.abs() > 40.0 * pm.sigma * pm.sigma {
        return from_log_ratio(alpha, beta, pm.g * x0 / (pm.sigma * pm.sigma));
    }
    let la = -(x0 - pm.g).powi(2) / four_var;
    let lb = -(x0 + pm.g).powi(2) / four_var;
    let m = la.max(lb);
    let a = alpha * (la - m).exp();
    let b = beta * (lb - m).exp();
    let norm = a.hypot(b);
    if norm == 0.0 || !norm.is_finite() || a == 0.0 || b == 0.0 {
        return from_log_ratio(alpha, beta, la - lb);
    }
    QubitState::from_normalized(a / norm, b / norm)
}

/// State whose amplitude ratio is `alpha/beta * exp(shift)`.
fn from_log_ratio(alpha: f64, beta: f64, shift: f64) -> QubitState {
    let l = alpha.abs().ln() - beta.abs().ln() + shift;
    // |alpha'| = 1/sqrt(1 + e^{-2l}), |beta'| = e^{-l}/sqrt(1 + e^{-2l})
    let (a, b) = if l >= 0.0 {
        let t = (-l).exp();
        let n = (1.0 + t * t).sqrt();
        (1.0 / n, t / n)
    } else {
        let t = l.exp();
        let n = (1.0 + t * t).sqrt();
        (t / n, 1.0 / n)
    };
    QubitState::from_normalized(a.copysign(alpha), b.copysign(beta))
}

/// Reading followed by the bias it induces.
pub fn step(s: &QubitState, pm: &PointerModel, rng: &mut RngStream) -> (QubitState, f64) {
    let x = sample_reading(s, pm, rng);
    (bias_update(s, x, pm), x)
}

/// Strong `S_z` measurement: `Zero` with probability `alpha^2`.
pub fn strong_measure(s: &QubitState, rng: &mut RngStream) -> Outcome {
    if rng.bernoulli(s.born_probabilities().0) {
        Outcome::Zero
    } else {
        Outcome::One
    }
}

/// Walks until a boundary is crossed or `max_steps` readings were taken,
/// calling `on_step(reading, state_after)` after every update.
pub fn run_walk_with(
    s0: &QubitState,
    pm: &PointerModel,
    wb: &WalkBoundaries,
    max_steps: u64,
    rng: &mut RngStream,
    mut on_step: impl FnMut(f64, &QubitState),
) -> Result<(u64, QubitState, CollapseLabel)> {
    if max_steps < 1 {
        return Err(Error::invalid("max_steps", "must be at least 1"));
    }
    if let Some(label) = wb.classify(s0) {
        return Ok((0, *s0, label));
    }
    let mut state = *s0;
    for n in 1..=max_steps {
        let (next, x) = step(&state, pm, rng);
        state = next;
        on_step(x, &state);
        if let Some(label) = wb.classify(&state) {
            return Ok((n, state, label));
        }
    }
    Ok((max_steps, state, CollapseLabel::MaxedOut))
}

pub fn run_walk(
    s0: &QubitState,
    pm: &PointerModel,
    wb: &WalkBoundaries,
    max_steps: u64,
    rng: &mut RngStream,
) -> Result<WalkOutcome> {
    let mut readings = Vec::new();
    let (steps, final_state, label) =
        run_walk_with(s0, pm, wb, max_steps, rng, |x, _| readings.push(x))?;
    Ok(WalkOutcome {
        steps,
        readings,
        final_state,
        label,
    })
}

/// Everything but the trial count and seed of an ensemble run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub start: QubitState,
    pub pointer: PointerModel,
    pub boundaries: WalkBoundaries,
    pub max_steps: u64,
}

/// Runs `trials` independent walks in parallel; trial `i` uses
/// `RngStream::new(master_seed, i)`, so results do not depend on scheduling.
pub fn run_ensemble(spec: &EnsembleSpec, trials: u64, master_seed: u64) -> Result<Vec<WalkSummary>> {
    if trials < 1 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RngStream::new(master_seed, trial);
            run_walk_with(&spec.start, &spec.pointer, &spec.boundaries, spec.max_steps, &mut rng, |_, _| {})
                .map(|(steps, final_state, label)| WalkSummary {
                    trial,
                    steps,
                    final_state,
                    label,
                })
                .map_err(|e| Error::Trial {
                    trial,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// One row of the trajectory dump, `trial,step,reading,alpha,beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub trial: u64,
    pub step: u64,
    pub reading: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Replays trial `trial` of an ensemble and returns every step.
pub fn replay_trajectory(spec: &EnsembleSpec, trial: u64, master_seed: u64) -> Result<Vec<TrajectoryRow>> {
    let mut rng = RngStream::new(master_seed, trial);
    let mut rows = Vec::new();
    let mut n = 0;
    run_walk_with(&spec.start, &spec.pointer, &spec.boundaries, spec.max_steps, &mut rng, |x, s| {
        n += 1;
        rows.push(TrajectoryRow {
            trial,
            step: n,
            reading: x,
            alpha: s.alpha(),
            beta: s.beta(),
        });
    })?;
    Ok(rows)
}
