//! Screens acting on the force carrier and the generator coefficients they induce.
//!
//! A screen is a CPTP map on the force-carrier oscillator applied in the middle
//! of each exchange step. Its Heisenberg-picture action on x, p and their
//! second moments fixes the level shifts ν_a, ν_b, the effective coupling η,
//! the Ehrenfest defect ξ and the 2×2 noise matrix Y of the two-mode generator.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{delta1, hermitian_min_eigenvalue2, Tolerances, C64};
use crate::kv::{parse_key_values, KeyValues};

/// Largest |⟨S†(q) − q⟩| accepted as first-moment preservation.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// Largest ‖Σ K†K − I‖ accepted for a truncated Kraus screen.
pub const TOL_CP: f64 = 1e-8;

/// Sign convention for the exchange circuit.
///
/// The two force-carrier gates can be ordered so that an unscreened exchange
/// produces either +AB or −AB. `Appendix` (the default) is the ordering whose
/// identity-screen limit is H_ab = +AB; `MainText` is the reverse ordering,
/// whose identity-screen coupling is η = −1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CouplingConvention {
    #[default]
    Appendix,
    MainText,
}

impl CouplingConvention {
    /// η of the identity screen under this convention.
    pub fn identity_eta(self) -> f64 {
        match self {
            CouplingConvention::Appendix => 1.0,
            CouplingConvention::MainText => -1.0,
        }
    }
}

/// Generator coefficients extracted from a screen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScreenMoments {
    pub nu_a: f64,
    pub nu_b: f64,
    pub eta: f64,
    /// Ehrenfest defect, stored as the real number −iξ (ξ itself is imaginary).
    pub xi: f64,
    /// [[Y_xx, Y_xp], [Y_xp, Y_pp]].
    pub y: Matrix2<f64>,
    /// ⟨S†(x) − x⟩_f and ⟨S†(p) − p⟩_f, when they have been evaluated.
    pub mean_shift: Option<[f64; 2]>,
}

impl ScreenMoments {
    pub fn identity(convention: CouplingConvention) -> Self {
        ScreenMoments {
            nu_a: 0.0,
            nu_b: 0.0,
            eta: convention.identity_eta(),
            xi: 0.0,
            y: Matrix2::zeros(),
            mean_shift: Some([0.0, 0.0]),
        }
    }

    /// Moments for a given noise matrix and coupling, with no level shifts.
    pub fn from_noise(y: Matrix2<f64>, g: f64) -> Self {
        ScreenMoments { nu_a: 0.0, nu_b: 0.0, eta: g, xi: 0.0, y, mean_shift: Some([0.0, 0.0]) }
    }

    /// Rescale the exchange so the system coupling is `g` while Y stays fixed.
    ///
    /// Physically this is A = c_a x_a, B = c_b x_b with c_a c_b η = g and the
    /// screen strength rescaled by 1/(c_a c_b), which leaves the noise on the
    /// system quadratures unchanged.
    pub fn with_coupling(mut self, g: f64) -> Self {
        self.eta = g;
        self
    }

    pub fn y_xx(&self) -> f64 {
        self.y[(0, 0)]
    }

    pub fn y_pp(&self) -> f64 {
        self.y[(1, 1)]
    }

    pub fn y_xp(&self) -> f64 {
        self.y[(0, 1)]
    }
}

/// Classical random phase-space kick of the force carrier: x → x + u, p → p + v
/// with zero-mean (u, v) of covariance [[σ_uu, σ_uv], [σ_uv, σ_vv]].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisplacementScreen {
    pub sigma_uu: f64,
    pub sigma_vv: f64,
    pub sigma_uv: f64,
}

impl DisplacementScreen {
    pub fn new(sigma_uu: f64, sigma_vv: f64, sigma_uv: f64) -> Result<Self> {
        let s = DisplacementScreen { sigma_uu, sigma_vv, sigma_uv };
        if ![sigma_uu, sigma_vv, sigma_uv].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("displacement moments must be finite"));
        }
        let tol = Tolerances::default().psd;
        let det = sigma_uu * sigma_vv - sigma_uv * sigma_uv;
        if sigma_uu < -tol || sigma_vv < -tol || det < -tol * (1.0 + sigma_uu.abs() + sigma_vv.abs()) {
            return Err(Error::invalid(format!(
                "displacement covariance [[{sigma_uu}, {sigma_uv}], [{sigma_uv}, {sigma_vv}]] is not positive semidefinite"
            )));
        }
        Ok(s)
    }

    /// Isotropic kicks of variance `s` in both quadratures.
    pub fn symmetric(s: f64) -> Result<Self> {
        Self::new(s, s, 0.0)
    }

    pub fn covariance(&self) -> Matrix2<f64> {
        Matrix2::new(self.sigma_uu, self.sigma_uv, self.sigma_uv, self.sigma_vv)
    }

    pub fn moments(&self, convention: CouplingConvention) -> ScreenMoments {
        ScreenMoments {
            nu_a: 0.0,
            nu_b: 0.0,
            eta: convention.identity_eta(),
            xi: 0.0,
            y: self.covariance() * 2.0,
            mean_shift: Some([0.0, 0.0]),
        }
    }

    /// The displacement screen whose noise matrix is `y` (Y = 2Σ).
    pub fn from_noise(y: &Matrix2<f64>) -> Result<Self> {
        Self::new(y[(0, 0)] / 2.0, y[(1, 1)] / 2.0, 0.5 * (y[(0, 1)] + y[(1, 0)]) / 2.0)
    }
}

/// Closed-form moments of a displacement screen.
///
/// S†(x) = x + u and S†(p) = p + v averaged over the kick distribution give
/// ν_a = ν_b = ξ = 0, η = η_id and Y = 2Σ.
pub fn moments_from_displacement(screen: &DisplacementScreen, convention: CouplingConvention) -> ScreenMoments {
    screen.moments(convention)
}

/// A screen given by Kraus operators on a truncated force-carrier space.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausScreen {
    ops: Vec<DMatrix<C64>>,
    dim: usize,
}

impl KrausScreen {
    pub fn new(ops: Vec<DMatrix<C64>>) -> Result<Self> {
        let dim = ops.first().map(|k| k.nrows()).ok_or_else(|| Error::invalid("Kraus screen needs at least one operator"))?;
        if ops.iter().any(|k| k.nrows() != dim || k.ncols() != dim) {
            return Err(Error::invalid(format!("all Kraus operators must be {dim}×{dim}")));
        }
        Ok(KrausScreen { ops, dim })
    }

    pub fn identity(dim: usize) -> Self {
        KrausScreen { ops: vec![DMatrix::identity(dim, dim)], dim }
    }

    /// Pure-loss channel with the given transmissivity, truncated at `dim`.
    pub fn amplitude_damping(transmissivity: f64, dim: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(Error::invalid(format!("transmissivity {transmissivity} outside [0, 1]")));
        }
        if dim == 0 {
            return Err(Error::invalid("truncation dimension must be positive"));
        }
        let t = transmissivity;
        let ops = (0..dim)
            .map(|k| {
                let mut op = DMatrix::zeros(dim, dim);
                for n in k..dim {
                    let amp = binomial(n, k).sqrt() * t.powf((n - k) as f64 / 2.0) * (1.0 - t).powf(k as f64 / 2.0);
                    op[(n - k, n)] = Complex64::new(amp, 0.0);
                }
                op
            })
            .collect();
        Ok(KrausScreen { ops, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[DMatrix<C64>] {
        &self.ops
    }

    /// max |Σ K†K − I|.
    pub fn completeness_defect(&self) -> f64 {
        let sum = self.ops.iter().fold(DMatrix::<C64>::zeros(self.dim, self.dim), |acc, k| acc + k.adjoint() * k);
        (sum - DMatrix::<C64>::identity(self.dim, self.dim)).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Flags (does not reject) truncation-induced failure of Σ K†K = I.
    pub fn is_trace_preserving(&self) -> bool {
        self.completeness_defect() <= TOL_CP
    }

    /// Schrödinger picture S(ρ) = Σ K ρ K†.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        self.ops.iter().fold(DMatrix::zeros(self.dim, self.dim), |acc, k| acc + k * rho * k.adjoint())
    }

    /// Heisenberg picture S†(O) = Σ K† O K.
    pub fn apply_adjoint(&self, op: &DMatrix<C64>) -> DMatrix<C64> {
        self.ops.iter().fold(DMatrix::zeros(self.dim, self.dim), |acc, k| acc + k.adjoint() * op * k)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Diagnostic for the two physical constraints on a screen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintReport {
    /// First moments of the force carrier preserved (Trotter limit exists).
    pub convergence: bool,
    /// Whether `convergence` was measured or assumed because the mean shift is unknown.
    pub convergence_checked: bool,
    pub mean_shift: [f64; 2],
    /// Both systems follow the same classical Hamiltonian (ξ = 0).
    pub ehrenfest: bool,
    pub xi: f64,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.convergence && self.ehrenfest
    }
}

pub fn check_constraints(moments: &ScreenMoments, tol: &Tolerances) -> ConstraintReport {
    let (convergence, convergence_checked, mean_shift) = match moments.mean_shift {
        Some(shift) => (shift.iter().all(|s| s.abs() <= CONVERGENCE_TOL), true, shift),
        None => (true, false, [0.0, 0.0]),
    };
    ConstraintReport { convergence, convergence_checked, mean_shift, ehrenfest: moments.xi.abs() <= tol.sym, xi: moments.xi }
}

/// Verdict of the classicality test Y − 2igΔ₁ ⪰ 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalityReport {
    pub classical: bool,
    pub min_eigenvalue: f64,
}

/// Y − 2i|g|Δ₁ as a Hermitian matrix. For g < 0 the test matrix is the
/// transpose (complex conjugate) of Y − 2igΔ₁, which has the same spectrum.
pub fn classicality_matrix(y: &Matrix2<f64>, g: f64) -> Matrix2<C64> {
    let d = delta1();
    Matrix2::from_fn(|i, j| C64::new(y[(i, j)], -2.0 * g.abs() * d[(i, j)]))
}

/// Decide whether a screen with noise `y` forbids entanglement at coupling `g`.
pub fn is_classical(y: &Matrix2<f64>, g: f64, tol: &Tolerances) -> ClassicalityReport {
    let min_eigenvalue = hermitian_min_eigenvalue2(&classicality_matrix(y, g));
    ClassicalityReport { classical: min_eigenvalue >= -tol.psd, min_eigenvalue }
}

/// Same decision through Y ⪰ 0 and det Y ≥ 4g², kept as an independent route.
pub fn is_classical_by_determinant(y: &Matrix2<f64>, g: f64, tol: &Tolerances) -> bool {
    let (a, b, c) = (y[(0, 0)], y[(1, 1)], y[(0, 1)]);
    let scale = 1.0 + a.abs() + b.abs();
    a >= -tol.psd && b >= -tol.psd && a * b - c * c - 4.0 * g * g >= -tol.psd * scale
}

/// Textual screen description used by configuration files and the CLI.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScreenSpec {
    Identity,
    Displacement(DisplacementScreen),
    AmplitudeDamping { transmissivity: f64, dim: usize },
}

impl ScreenSpec {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(&parse_key_values(text)?)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let family = kv
            .get_str("family")
            .ok_or_else(|| Error::Parse { line: 1, message: "screen block needs a `family` key".into() })?;
        let line = kv.line_of("family").unwrap_or(1);
        match family {
            "identity" => {
                kv.reject_unknown(&["family"])?;
                Ok(ScreenSpec::Identity)
            }
            "displacement" => {
                kv.reject_unknown(&["family", "sigma_uu", "sigma_vv", "sigma_uv"])?;
                let uu = kv.get_f64("sigma_uu")?.unwrap_or(0.0);
                let vv = kv.get_f64("sigma_vv")?.unwrap_or(0.0);
                let uv = kv.get_f64("sigma_uv")?.unwrap_or(0.0);
                DisplacementScreen::new(uu, vv, uv)
                    .map(ScreenSpec::Displacement)
                    .map_err(|e| Error::Parse { line, message: e.to_string() })
            }
            "amplitude_damping" => {
                kv.reject_unknown(&["family", "transmissivity", "dim"])?;
                let transmissivity = kv.require_f64("transmissivity")?;
                let dim = kv.get_usize("dim")?.unwrap_or(20);
                KrausScreen::amplitude_damping(transmissivity, dim).map_err(|e| Error::Parse { line, message: e.to_string() })?;
                Ok(ScreenSpec::AmplitudeDamping { transmissivity, dim })
            }
            other => Err(Error::Parse { line, message: format!("unknown screen family `{other}`") }),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            ScreenSpec::Identity => "family = identity\n".to_string(),
            ScreenSpec::Displacement(s) => format!(
                "family = displacement\nsigma_uu = {}\nsigma_vv = {}\nsigma_uv = {}\n",
                s.sigma_uu, s.sigma_vv, s.sigma_uv
            ),
            ScreenSpec::AmplitudeDamping { transmissivity, dim } => {
                format!("family = amplitude_damping\ntransmissivity = {transmissivity}\ndim = {dim}\n")
            }
        }
    }

    /// Closed-form moments, available for the Gaussian families only.
    pub fn closed_form_moments(&self, convention: CouplingConvention) -> Option<ScreenMoments> {
        match self {
            ScreenSpec::Identity => Some(ScreenMoments::identity(convention)),
            ScreenSpec::Displacement(s) => Some(s.moments(convention)),
            ScreenSpec::AmplitudeDamping { .. } => None,
        }
    }
}
