use thiserror::Error;

pub type Result<T, E = OracleError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("density matrix check failed: {0}")]
    NotAState(String),

    #[error(transparent)]
    Core(#[from] noisebound_core::Error),
}
