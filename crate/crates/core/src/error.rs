use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The request exceeds the configured size limits.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An iterative procedure did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The state is not an eigenstate of J^2 within tolerance.
    #[error("spin impurity: <J^2> = {expectation} is not close to J(J+1)")]
    SpinImpurity { expectation: f64 },

    /// Not enough samples for a statistical estimate.
    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
