//! Two-mode Gaussian generator and exact covariance propagation.
//!
//! The covariance obeys dγ/dt = xᵀγ + γx + y with drift x = −HΔ₂ and diffusion
//! y = −Δ₂ χ Y χᵀ Δ₂, where χ routes the force-carrier quadratures (x, p) onto
//! the system operators A = x_a and B = x_b. The solution is
//! γ(t) = Y_t + X_tᵀ γ(0) X_t with X_t = e^{xt} and Y_t = ∫₀ᵗ X_uᵀ y X_u du.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Matrix2, Matrix4, Matrix4x2};

use crate::error::{Error, Result};
use crate::gaussian::{check_symmetric4, delta2, hermitian_min_eigenvalue2, CovarianceMatrix, Tolerances, C64};
use crate::quadrature::gauss_legendre;
use crate::screen::{check_constraints, ScreenMoments};

const GL_NODES: usize = 32;

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_NODES))
}

/// χ: ones at (1,1) and (3,2).
pub fn selector() -> Matrix4x2<f64> {
    let mut chi = Matrix4x2::zeros();
    chi[(0, 0)] = 1.0;
    chi[(2, 1)] = 1.0;
    chi
}

/// ½ Σ H_ij M_i M_j for two unit oscillators with level shifts and an x_a x_b coupling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticHamiltonian {
    matrix: Matrix4<f64>,
}

impl QuadraticHamiltonian {
    pub fn new(nu_a: f64, nu_b: f64, g: f64) -> Self {
        let mut matrix = Matrix4::identity();
        matrix[(0, 0)] += nu_a;
        matrix[(2, 2)] += nu_b;
        matrix[(0, 2)] = g;
        matrix[(2, 0)] = g;
        QuadraticHamiltonian { matrix }
    }

    pub fn from_matrix(matrix: Matrix4<f64>) -> Result<Self> {
        check_symmetric4(&matrix, Tolerances::default().sym)?;
        Ok(QuadraticHamiltonian { matrix: (matrix + matrix.transpose()) * 0.5 })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    /// Coefficient g of x_a x_b.
    pub fn coupling(&self) -> f64 {
        self.matrix[(0, 2)]
    }

    /// Drop every term that couples the two modes.
    pub fn local_part(&self) -> Self {
        let mut matrix = self.matrix;
        for i in 0..2 {
            for j in 2..4 {
                matrix[(i, j)] = 0.0;
                matrix[(j, i)] = 0.0;
            }
        }
        QuadraticHamiltonian { matrix }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianDynamics {
    drift: Matrix4<f64>,
    diffusion: Matrix4<f64>,
    hamiltonian: QuadraticHamiltonian,
    noise: Matrix2<f64>,
}

impl GaussianDynamics {
    /// Rejects noise matrices that are not PSD, since those would not
    /// describe a valid dissipator.
    pub fn new(hamiltonian: QuadraticHamiltonian, noise: Matrix2<f64>) -> Result<Self> {
        let noise = (noise + noise.transpose()) * 0.5;
        let min_eigenvalue = hermitian_min_eigenvalue2(&noise.map(|v| C64::new(v, 0.0)));
        if min_eigenvalue < -Tolerances::default().psd * (1.0 + noise.abs().max()) {
            return Err(Error::NonPositiveNoise { min_eigenvalue });
        }
        let d = delta2();
        let chi = selector();
        Ok(GaussianDynamics {
            drift: -hamiltonian.matrix() * d,
            diffusion: -d * chi * noise * chi.transpose() * d,
            hamiltonian,
            noise,
        })
    }

    pub fn drift(&self) -> &Matrix4<f64> {
        &self.drift
    }

    pub fn diffusion(&self) -> &Matrix4<f64> {
        &self.diffusion
    }

    pub fn hamiltonian(&self) -> &QuadraticHamiltonian {
        &self.hamiltonian
    }

    pub fn noise(&self) -> &Matrix2<f64> {
        &self.noise
    }

    pub fn coupling(&self) -> f64 {
        self.hamiltonian.coupling()
    }

    /// Same Hamiltonian, no diffusion.
    pub fn reversible(&self) -> Self {
        GaussianDynamics { diffusion: Matrix4::zeros(), noise: Matrix2::zeros(), ..*self }
    }

    /// Add a thermal bath at rate κ and occupation n̄ to both modes:
    /// drift −κ/2·I, diffusion κ(2n̄ + 1)·I. This bath model is an assumption
    /// layered on top of the screened dynamics.
    pub fn with_thermal_damping(&self, kappa: f64, nbar: f64) -> Result<Self> {
        if !(kappa >= 0.0 && nbar >= 0.0 && kappa.is_finite() && nbar.is_finite()) {
            return Err(Error::invalid(format!("damping needs κ ≥ 0 and n̄ ≥ 0, got κ = {kappa}, n̄ = {nbar}")));
        }
        Ok(GaussianDynamics {
            drift: self.drift - Matrix4::identity() * (0.5 * kappa),
            diffusion: self.diffusion + Matrix4::identity() * (kappa * (2.0 * nbar + 1.0)),
            ..*self
        })
    }

    /// Right-hand side xᵀγ + γx + y.
    pub fn rhs(&self, gamma: &Matrix4<f64>) -> Matrix4<f64> {
        self.drift.transpose() * gamma + gamma * self.drift + self.diffusion
    }

    /// Precompute X_t and Y_t for repeated application.
    pub fn propagator(&self, t: f64) -> Result<Propagator> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::invalid(format!("propagation time must be finite and non-negative, got {t}")));
        }
        Ok(Propagator { transfer: (self.drift * t).exp(), noise: self.accumulated_noise(t), time: t })
    }

    /// Y_t by 32-node Gauss–Legendre on panels no longer than one oscillation period.
    fn accumulated_noise(&self, t: f64) -> Matrix4<f64> {
        if t == 0.0 || self.diffusion.iter().all(|v| *v == 0.0) {
            return Matrix4::zeros();
        }
        let rate = self.drift.norm().max(1.0);
        let panels = ((t * rate) / (2.0 * PI)).ceil().max(1.0) as usize;
        let h = t / panels as f64;
        let (nodes, weights) = gl_rule();
        let mut panel = Matrix4::zeros();
        for (z, w) in nodes.iter().zip(weights) {
            let u = 0.5 * h * (z + 1.0);
            let x_u = (self.drift * u).exp();
            panel += x_u.transpose() * self.diffusion * x_u * (0.5 * h * w);
        }
        // Y_t = Σ_k X_{kh}ᵀ Y_h X_{kh}
        let step = (self.drift * h).exp();
        let mut shift = Matrix4::<f64>::identity();
        let mut total = Matrix4::<f64>::zeros();
        for _ in 0..panels {
            total += shift.transpose() * panel * shift;
            shift *= step;
        }
        (total + total.transpose()) * 0.5
    }
}

/// Build the generator from screen moments, with g = η.
pub fn build_dynamics(moments: &ScreenMoments, include_shifts: bool) -> Result<GaussianDynamics> {
    build_dynamics_with(moments, include_shifts, &Tolerances::default())
}

pub fn build_dynamics_with(moments: &ScreenMoments, include_shifts: bool, tol: &Tolerances) -> Result<GaussianDynamics> {
    let report = check_constraints(moments, tol);
    if !report.ehrenfest {
        return Err(Error::EhrenfestViolation { xi: moments.xi });
    }
    let (nu_a, nu_b) = if include_shifts { (moments.nu_a, moments.nu_b) } else { (0.0, 0.0) };
    GaussianDynamics::new(QuadraticHamiltonian::new(nu_a, nu_b, moments.eta), moments.y)
}

/// Precomputed (X_t, Y_t) pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Propagator {
    pub transfer: Matrix4<f64>,
    pub noise: Matrix4<f64>,
    pub time: f64,
}

impl Propagator {
    pub fn apply(&self, gamma: &CovarianceMatrix) -> CovarianceMatrix {
        CovarianceMatrix::from_symmetric(self.noise + self.transfer.transpose() * gamma.matrix() * self.transfer)
    }

    pub fn apply_reversible(&self, gamma: &CovarianceMatrix) -> CovarianceMatrix {
        gamma.congruence(&self.transfer)
    }
}

/// γ(t) = Y_t + X_tᵀ γ0 X_t. Negative times are rejected: the diffusive part
/// has no inverse.
pub fn propagate(gamma0: &CovarianceMatrix, dynamics: &GaussianDynamics, t: f64) -> Result<CovarianceMatrix> {
    Ok(dynamics.propagator(t)?.apply(gamma0))
}

/// e^{xᵀt} γ0 e^{xt}; any real t.
pub fn propagate_reversible(gamma0: &CovarianceMatrix, dynamics: &GaussianDynamics, t: f64) -> CovarianceMatrix {
    gamma0.congruence(&(dynamics.drift * t).exp())
}
