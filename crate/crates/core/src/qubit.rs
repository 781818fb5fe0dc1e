//! Real-amplitude qubit states, the symmetric discrimination pair and the
//! Helstrom optimum for two equiprobable pure states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization tolerance enforced on every constructed state.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// A normalized pure qubit state `alpha|0> + beta|1>` with real amplitudes.
///
/// States with a negative second amplitude (e.g. `alpha|0> - beta|1>`) are
/// stored with the sign folded into `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    alpha: f64,
    beta: f64,
}

impl QubitState {
    pub const ZERO: QubitState = QubitState {
        alpha: 1.0,
        beta: 0.0,
    };
    pub const ONE: QubitState = QubitState {
        alpha: 0.0,
        beta: 1.0,
    };

    /// Normalizes `(alpha, beta)`. Fails on the zero vector or non-finite input.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::invalid("amplitudes", "must be finite"));
        }
        let norm = alpha.hypot(beta);
        if norm == 0.0 {
            return Err(Error::invalid("amplitudes", "zero vector"));
        }
        Ok(QubitState {
            alpha: alpha / norm,
            beta: beta / norm,
        })
    }

    /// Constructs from amplitudes the caller guarantees are already normalized.
    pub(crate) fn from_normalized(alpha: f64, beta: f64) -> Self {
        debug_assert!((alpha * alpha + beta * beta - 1.0).abs() < 1e-9);
        QubitState { alpha, beta }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Angle in degrees such that the state equals `cos(a)|0> + sin(a)|1>`
    /// up to a global sign. Lies in `(-90, 90]`; walk states are in `[0, 90]`.
    pub fn angle(&self) -> StateAngle {
        let (a, b) = if self.alpha < 0.0 || (self.alpha == 0.0 && self.beta < 0.0) {
            (-self.alpha, -self.beta)
        } else {
            (self.alpha, self.beta)
        };
        StateAngle(b.atan2(a).to_degrees())
    }

    /// `(|alpha|^2, |beta|^2)`.
    pub fn born_probabilities(&self) -> (f64, f64) {
        let p0 = self.alpha * self.alpha;
        (p0, 1.0 - p0)
    }

    pub fn overlap(&self, other: &QubitState) -> f64 {
        overlap(self, other)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha * self.alpha + self.beta * self.beta
    }

    /// Reflection about the 45 degree vector, i.e. swapping the amplitudes.
    pub fn reflect_about_diagonal(&self) -> QubitState {
        QubitState {
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

/// An angle in degrees measured from `|0>` towards `|1>`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct StateAngle(pub f64);

impl StateAngle {
    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }
}

/// `cos(a)|0> + sin(a)|1>` for `a` in degrees. Any real angle is accepted.
pub fn state_from_angle(degrees: f64) -> QubitState {
    let (s, c) = degrees.to_radians().sin_cos();
    // sin_cos is not exactly normalized for every input; renormalize.
    let norm = c.hypot(s);
    QubitState::from_normalized(c / norm, s / norm)
}

/// The two states sent with equal probability: `psi1` at `45 + theta/2`
/// degrees and `psi2` at `45 - theta/2`, so that `<psi1|psi2> = cos(theta)`.
pub fn make_discrimination_pair(theta_deg: f64) -> Result<(QubitState, QubitState)> {
    if !(theta_deg > 0.0 && theta_deg <= 90.0) {
        return Err(Error::invalid(
            "theta",
            format!("must lie in (0, 90] degrees, got {theta_deg}"),
        ));
    }
    let half = theta_deg / 2.0;
    Ok((state_from_angle(45.0 + half), state_from_angle(45.0 - half)))
}

/// Real inner product of two states.
pub fn overlap(s1: &QubitState, s2: &QubitState) -> f64 {
    s1.alpha * s2.alpha + s1.beta * s2.beta
}

/// Optimal projective success probability `(1 + sin theta) / 2` for two
/// equiprobable pure states separated by `theta` degrees.
pub fn helstrom_bound(theta_deg: f64) -> f64 {
    0.5 * (1.0 + theta_deg.to_radians().sin())
}

/// Born probabilities of a strong `S_z` measurement.
pub fn born_probabilities(s: &QubitState) -> (f64, f64) {
    s.born_probabilities()
}
