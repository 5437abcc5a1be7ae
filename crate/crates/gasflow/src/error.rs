use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("missing data: {0}")]
    Missing(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("subproblem failed at iteration {iteration}: {reason}")]
    SubproblemFailed { iteration: usize, reason: String },
    #[error("problem infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("oracle error: {0}")]
    Oracle(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
