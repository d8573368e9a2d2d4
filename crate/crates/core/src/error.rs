use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Entry pair is reported with 1-based indices, matching the usual
    /// matrix notation γ_ij.
    #[error("matrix is not symmetric: entries ({row},{col}) and ({col},{row}) differ by {diff:.3e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("covariance matrix violates the uncertainty relation (min eigenvalue of γ + iΔ is {min_eigenvalue:.3e})")]
    Unphysical { min_eigenvalue: f64 },

    #[error("screen violates the Ehrenfest constraint (xi = {xi:.3e})")]
    EhrenfestViolation { xi: f64 },

    #[error("screen noise matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NonPositiveNoise { min_eigenvalue: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by a physically inadmissible model rather than
    /// by malformed input.
    pub fn is_physics_rejection(&self) -> bool {
        matches!(
            self,
            Error::Unphysical { .. } | Error::EhrenfestViolation { .. } | Error::NonPositiveNoise { .. }
        )
    }
}
