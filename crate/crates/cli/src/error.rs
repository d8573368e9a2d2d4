use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] noisebound_core::Error),
    #[error(transparent)]
    Oracle(#[from] noisebound_oracle::OracleError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PHYSICS: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) if e.is_physics_rejection() => EXIT_PHYSICS,
            CliError::Oracle(noisebound_oracle::OracleError::Core(e)) if e.is_physics_rejection() => EXIT_PHYSICS,
            _ => EXIT_FAILURE,
        }
    }
}
