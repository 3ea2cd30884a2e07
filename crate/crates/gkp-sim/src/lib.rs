//! Exact sum-of-Gaussians phase-space simulation of GKP resource states, the linear-optics
//! circuits that entangle them, and postselected homodyne stabilizer measurements.
//!
//! States are [`GaussianSumState`]s; circuits are [`SymplecticCircuit`]s; measurements are
//! evaluated lazily by [`measurement::evaluate`] so that product inputs never need to be
//! materialized.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuits;
pub mod error;
pub mod fock;
pub mod grn;
mod linalg;
pub mod logsum;
pub mod measurement;
pub mod phase_space;
pub mod pipelines;
pub mod runner;
pub mod states;

pub use circuits::{CircuitDescription, SymplecticCircuit};
pub use error::{Result, SimError};
pub use measurement::{EvalOptions, MeasurementPlan, ProductState, ReductionMode, StabilizerSpec};
pub use phase_space::{GaussianSumState, GaussianTerm, LossSpec};
pub use states::{BreedingParams, GrnParams};

/// Bumped whenever a sign or ordering convention visible in outputs changes.
pub const CONVENTION_VERSION: &str = "1";
