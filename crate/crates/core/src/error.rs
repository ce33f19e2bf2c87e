//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong in the library, coarse enough that callers
/// (in particular the command-line front end) can map variants to outcomes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violated a documented precondition (bad dimension, index
    /// out of range, mismatched grids, malformed parameters).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The request is well-formed but mathematically unsatisfiable
    /// (no admissible exponent sequences, resolution too small for the
    /// requested filter, and so on).
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// A fixed-point map whose estimated operator norm is at least one was
    /// refused before iterating.
    #[error("operator is not a contraction (norm estimate {estimate})")]
    NotContractive { estimate: f64 },

    /// An iteration ran out of steps before reaching its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }
}
