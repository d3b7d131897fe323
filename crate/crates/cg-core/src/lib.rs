//! Coarse-grained detection of multi-qubit states.
//!
//! A detector that resolves only one particle of an `N`-qubit system, and
//! confuses particle labels with probabilities `p = (p_1, ..., p_N)`, acts on
//! a pure state as the channel `C[|psi><psi|] = sum_i p_i rho_i`, where
//! `rho_i` is the reduced state of qubit `i`. This crate implements
//!
//! - the channel itself, for arbitrary permutation mixtures and for the
//!   general `N -> m` reduction ([`channel`]);
//! - closed-form laws for the radial distribution of the observed Bloch
//!   vector, its preimage volumes, and the diagonal-element density that
//!   generates them ([`laws`]);
//! - samplers for Haar-random states, product states, and exact preimages of
//!   a given target state ([`sampling`]);
//! - closed-form and Monte-Carlo average preimage states ([`avg`]);
//! - the shell-count volume estimator, binned radial densities, and
//!   least-squares recovery of the mixing probability ([`stats`]).
//!
//! All samplers are seeded and chunked over independent RNG substreams, so
//! results are bit-for-bit reproducible regardless of thread count. The
//! `parallel` feature (on by default) runs chunks on rayon; disabling it
//! gives a sequential build with identical output.

#![forbid(unsafe_code)]

pub mod avg;
pub mod channel;
mod error;
pub mod exec;
pub mod laws;
pub mod qstate;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};

/// Which fine-grained ensemble a preimage is drawn from: all pure states
/// with the unitarily invariant measure, or product states only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    Full,
    Separable,
}

impl std::fmt::Display for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ensemble::Full => write!(f, "full"),
            Ensemble::Separable => write!(f, "separable"),
        }
    }
}

/// Validation tolerances used by the domain types.
pub mod tol {
    /// Unit-norm check on state vectors.
    pub const NORM: f64 = 1e-12;
    /// Elementwise Hermiticity check on density matrices.
    pub const HERMITICITY: f64 = 1e-12;
    /// Unit-trace check on density matrices.
    pub const TRACE: f64 = 1e-12;
    /// Density-matrix eigenvalues may undershoot zero by this much.
    pub const PSD_FLOOR: f64 = 1e-10;
    /// Unitarity check on operators.
    pub const UNITARITY: f64 = 1e-12;
    /// Probability vectors must sum to 1 within this.
    pub const PROB_SUM: f64 = 1e-12;
    /// Two probabilities closer than this are treated as degenerate.
    pub const DEGENERACY: f64 = 1e-9;
}
