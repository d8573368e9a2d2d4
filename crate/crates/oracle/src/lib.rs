//! Truncated Fock-space oracle for the screened exchange circuit.
//!
//! Everything here is brute force: dense density matrices, explicit carrier
//! gates and Kraus sums. It exists to check the Gaussian-level formulas in
//! `noisebound-core` from the microscopic circuit.

pub mod channel;
pub mod circuit;
pub mod dense;
pub mod error;
pub mod fit;
pub mod gate;
pub mod linalg;
pub mod mode;
pub mod moments;
pub mod state;

pub use channel::OracleScreen;
pub use circuit::{Circuit, ExchangeKernel, StepOutcome};
pub use error::{OracleError, Result};
pub use fit::{extract_generator, fit_identity_coupling, CouplingFit, CouplingFitOptions, GeneratorFit};
pub use gate::{gate_identity_check, GateCheck};
pub use mode::TruncatedMode;
pub use moments::{moments_numeric, scale_moments, NumericMoments};
pub use state::{covariance_of, FockState};
