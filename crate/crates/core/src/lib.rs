//! Quantum state discrimination with weak measurements.
//!
//! * [`qubit`]: real-amplitude states, the symmetric state pair and the
//!   Helstrom optimum.
//! * [`walk`]: the sequential weak-measurement random walk with collapse
//!   boundaries, plus closed-form posteriors for cross-checking.
//! * [`discriminate`]: the collapse-then-measure protocol and the few-shot
//!   averaging sign test.
//! * [`tsvf`]: post-selected pointer moments for an imaginary weak value,
//!   with a quadrature oracle and a rejection sampler.
//! * [`stats`]: seeded streams, fits, empirical CDFs.
//! * [`experiment`]: declarative experiment runs that emit CSV and JSON.
//!
//! Every random quantity is drawn from an [`stats::RngStream`] addressed by
//! `(master_seed, index)`, so ensembles are reproducible bit for bit.

pub mod discriminate;
pub mod error;
pub mod experiment;
pub mod quadrature;
pub mod qubit;
pub mod stats;
pub mod tsvf;
pub mod walk;

pub use error::{Error, Result};
pub use qubit::{
    born_probabilities, helstrom_bound, make_discrimination_pair, overlap, state_from_angle,
    QubitState, StateAngle,
};
