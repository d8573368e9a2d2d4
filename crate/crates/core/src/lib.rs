//! Two-mode Gaussian covariance dynamics for classically mediated interactions.
//!
//! Two oscillators A and B talk to each other only through a third mode that is
//! measured and re-prepared ("screened") after every short interaction. In the
//! continuum limit the pair follows a Gaussian Markov generator: a quadratic
//! Hamiltonian with an x_a x_b coupling g plus momentum diffusion Y. This crate
//! builds that generator from screen moments, propagates covariance matrices,
//! tests separability and evaluates the noise bound Y ⪰ 2|g|-type inequality that
//! any entanglement-incapable channel must satisfy.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod kv;
pub mod noise;
pub mod quadrature;
pub mod sampling;
pub mod screen;

pub use dynamics::{build_dynamics, propagate, propagate_reversible, GaussianDynamics, Propagator, QuadraticHamiltonian};
pub use error::{Error, Result};
pub use gaussian::{validate_covariance, CovarianceMatrix, PhaseVector, PsdReport, SymplecticForm, Tolerances};
pub use screen::{
    check_constraints, classicality_matrix, is_classical, ClassicalityReport, ConstraintReport, CouplingConvention,
    DisplacementScreen, KrausScreen, ScreenMoments, ScreenSpec,
};
