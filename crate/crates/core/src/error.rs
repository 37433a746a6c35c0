use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid timing: {0}")]
    InvalidTiming(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix not verifiably positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("singular triangular matrix (diagonal entry {index} contains zero)")]
    Singular { index: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
