use thiserror::Error;

/// Errors raised by the simulation backends and analytic routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A density matrix that should be diagonal picked up coherences.
    #[error("coherence leak: off-diagonal magnitude {magnitude:e} exceeds {tolerance:e}")]
    CoherenceLeak { magnitude: f64, tolerance: f64 },

    #[error("degenerate measurement branch selected (probability {probability:e})")]
    DegenerateBranch { probability: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("integration failure in trajectory {trajectory} at step {step}: non-finite state")]
    IntegrationFailure { trajectory: usize, step: usize },

    #[error("quadrature did not converge on [{lower}, {upper}]: error estimate {error:e} after {intervals} intervals")]
    Quadrature {
        lower: f64,
        upper: f64,
        error: f64,
        intervals: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
