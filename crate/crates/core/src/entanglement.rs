//! PPT separability, onset scans and the small-time certificates behind the
//! classicality criterion.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use crate::dynamics::{selector, GaussianDynamics, Propagator, QuadraticHamiltonian};
use crate::error::{Error, Result};
use crate::gaussian::{
    complexify4, delta1, delta2, delta2_reversed, hermitian_min_eigenvalue4, uncertainty_margin, CovarianceMatrix,
    Tolerances, C64,
};
use crate::screen::classicality_matrix;

/// Default margin below which a partial reversal counts as entangled in scans.
pub const PPT_MARGIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparabilityReport {
    pub separable: bool,
    /// Smallest eigenvalue of KγK + iΔ₂.
    pub min_eigenvalue: f64,
}

/// Smallest eigenvalue of KγK + iΔ₂ without any physicality check.
pub fn ppt_margin(gamma: &Matrix4<f64>) -> f64 {
    let h = complexify4(gamma) + delta2_reversed().map(|v| C64::new(0.0, v));
    hermitian_min_eigenvalue4(&h).0
}

pub fn is_separable(gamma: &CovarianceMatrix, tol: &Tolerances) -> Result<SeparabilityReport> {
    let phys = gamma.validate(tol);
    if !phys.passed {
        return Err(Error::Unphysical { min_eigenvalue: phys.min_eigenvalue });
    }
    let min_eigenvalue = uncertainty_margin(gamma.partial_reverse().matrix(), tol).min_eigenvalue;
    Ok(SeparabilityReport { separable: min_eigenvalue >= -tol.psd, min_eigenvalue })
}

/// Σ max(0, −ln ν̃) over the symplectic eigenvalues of the partial reversal.
pub fn log_negativity(gamma: &CovarianceMatrix) -> f64 {
    gamma.partial_reverse().symplectic_eigenvalues().iter().map(|nu| (-nu.ln()).max(0.0)).sum()
}

/// Scan settings for [`entanglement_onset_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnsetOptions {
    /// A grid time counts as entangled when the PPT margin drops below −margin.
    pub margin: f64,
    /// Geometric sub-grid inserted below the first uniform step.
    pub prefix_points: usize,
    pub rel_precision: f64,
}

impl Default for OnsetOptions {
    fn default() -> Self {
        OnsetOptions { margin: PPT_MARGIN, prefix_points: 12, rel_precision: 1e-6 }
    }
}

/// Earliest time in (0, t_max] at which γ(t) stops being PPT, or `None`.
pub fn entanglement_onset(dynamics: &GaussianDynamics, gamma0: &CovarianceMatrix, t_max: f64, grid: usize) -> Result<Option<f64>> {
    entanglement_onset_with(dynamics, gamma0, t_max, grid, &OnsetOptions::default())
}

pub fn entanglement_onset_with(
    dynamics: &GaussianDynamics,
    gamma0: &CovarianceMatrix,
    t_max: f64,
    grid: usize,
    opts: &OnsetOptions,
) -> Result<Option<f64>> {
    if grid < 100 {
        return Err(Error::invalid(format!("onset grid needs at least 100 points, got {grid}")));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::invalid(format!("t_max must be positive, got {t_max}")));
    }
    let tol = Tolerances::with_psd(opts.margin);
    let start = is_separable(gamma0, &tol)?;
    if !start.separable {
        return Err(Error::invalid(format!("initial state is entangled (PPT margin {:.3e})", start.min_eigenvalue)));
    }
    let entangled = |g: &Matrix4<f64>| ppt_margin(g) < -opts.margin;
    let h = t_max / grid as f64;

    // Product states that saturate the uncertainty relation can entangle at
    // O(t) depth, so probe a few decades below the first grid step.
    let mut last_safe = 0.0;
    for k in (1..=opts.prefix_points).rev() {
        let t = h * 10f64.powf(-(k as f64) / 2.0);
        if entangled(dynamics.propagator(t)?.apply(gamma0).matrix()) {
            return Ok(Some(bisect(dynamics, gamma0, last_safe, t, opts)?));
        }
        last_safe = t;
    }

    let step = dynamics.propagator(h)?;
    let mut gamma = *gamma0.matrix();
    for k in 1..=grid {
        gamma = step.noise + step.transfer.transpose() * gamma * step.transfer;
        if entangled(&gamma) {
            let lo = if k == 1 { last_safe } else { (k - 1) as f64 * h };
            return Ok(Some(bisect(dynamics, gamma0, lo, k as f64 * h, opts)?));
        }
    }
    Ok(None)
}

fn bisect(dynamics: &GaussianDynamics, gamma0: &CovarianceMatrix, mut lo: f64, mut hi: f64, opts: &OnsetOptions) -> Result<f64> {
    while hi - lo > opts.rel_precision * hi {
        let mid = 0.5 * (lo + hi);
        let g: Propagator = dynamics.propagator(mid)?;
        if ppt_margin(g.apply(gamma0).matrix()) < -opts.margin {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// F′(0) for noise `y` and coupling `g`, computed two ways.
///
/// Returns (iΔ₂)χ(Y − 2igΔ₁)χᵀ(iΔ₂) after checking it against
/// y − i xᵀΔ̃₂ − iΔ̃₂x entrywise to 1e-10.
pub fn fprime_zero(y: &Matrix2<f64>, g: f64) -> Result<Matrix4<C64>> {
    let (direct, factored) = fprime_zero_routes(y, g)?;
    let scale = 1.0 + y.abs().max() + g.abs();
    let diff = (direct - factored).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if diff > 1e-10 * scale {
        return Err(Error::Consistency(format!("F'(0) routes disagree by {diff:.3e}")));
    }
    Ok(factored)
}

/// Both F′(0) expressions, unchecked: (y − i xᵀΔ̃₂ − iΔ̃₂x, (iΔ₂)χ(Y − 2igΔ₁)χᵀ(iΔ₂)).
pub fn fprime_zero_routes(y: &Matrix2<f64>, g: f64) -> Result<(Matrix4<C64>, Matrix4<C64>)> {
    let dynamics = GaussianDynamics::new(QuadraticHamiltonian::new(0.0, 0.0, g), *y)?;
    let x = complexify4(dynamics.drift());
    let dt = delta2_reversed().map(|v| C64::new(0.0, v));
    let direct = complexify4(dynamics.diffusion()) - x.transpose() * dt - dt * x;

    let i_delta = delta2().map(|v| C64::new(0.0, v));
    let chi = selector().map(|v| C64::new(v, 0.0));
    let inner = Matrix2::from_fn(|r, c| C64::new(y[(r, c)], -2.0 * g * delta1()[(r, c)]));
    let factored = i_delta * chi * inner * chi.transpose() * i_delta;
    Ok((direct, factored))
}

/// Smallest eigenvalue of F′(0).
pub fn fprime_zero_min_eigenvalue(y: &Matrix2<f64>, g: f64) -> Result<f64> {
    Ok(hermitian_min_eigenvalue4(&fprime_zero(y, g)?).0)
}

/// Witness vectors for a non-classical (Y, g).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConverseWitness {
    pub z_f: Vector2<C64>,
    pub z_ab: Vector4<C64>,
    /// z_f†(Y − 2igΔ₁)z_f.
    pub eigenvalue: f64,
}

/// Build z_f and z_ab for parameters violating the classicality condition.
///
/// z_ab = [−z₁, −iz₁, z₂, −iz₂] so that χᵀiΔ₂z_ab = z_f and iΔ̃₂z_ab = −z_ab;
/// the first-order term of z_ab†(γ(t) + iΔ̃₂)z_ab from vacuum is then
/// z_f†(Y − 2igΔ₁)z_f < 0.
pub fn converse_witness(y: &Matrix2<f64>, g: f64) -> Result<ConverseWitness> {
    let inner = Matrix2::from_fn(|r, c| C64::new(y[(r, c)], -2.0 * g * delta1()[(r, c)]));
    let eig = inner.symmetric_eigen();
    let k = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
    let eigenvalue = eig.eigenvalues[k];
    let tol = Tolerances::default();
    if eigenvalue >= -tol.psd {
        return Err(Error::invalid(format!(
            "parameters are classical (min eigenvalue {eigenvalue:.3e}); no converse witness exists"
        )));
    }
    let z_f: Vector2<C64> = eig.eigenvectors.column(k).into_owned();
    let (z1, z2) = (z_f[0], z_f[1]);
    let i = C64::i();
    let z_ab = Vector4::new(-z1, -i * z1, z2, -i * z2);

    let i_delta = delta2().map(|v| C64::new(0.0, v));
    let projected = selector().map(|v| C64::new(v, 0.0)).transpose() * i_delta * z_ab;
    let fixed = delta2_reversed().map(|v| C64::new(0.0, v)) * z_ab + z_ab;
    let dynamics = GaussianDynamics::new(QuadraticHamiltonian::new(0.0, 0.0, g), *y)?;
    let first_order = complexify4(&(dynamics.diffusion() + dynamics.drift().transpose() + dynamics.drift()));
    let big = (z_ab.adjoint() * first_order * z_ab)[(0, 0)];
    let small = (z_f.adjoint() * inner * z_f)[(0, 0)];
    let scale = 1.0 + y.abs().max() + g.abs();
    if (projected - z_f).norm() > 1e-10 || fixed.norm() > 1e-10 || (big - small).norm() > 1e-10 * scale {
        return Err(Error::Consistency(format!(
            "converse witness postconditions failed: |χᵀiΔz − z_f| = {:.3e}, |iΔ̃z + z| = {:.3e}, |quadratic forms| = {:.3e}",
            (projected - z_f).norm(),
            fixed.norm(),
            (big - small).norm()
        )));
    }
    Ok(ConverseWitness { z_f, z_ab, eigenvalue })
}

/// min eigenvalue of Y − 2i|g|Δ₁, re-exported for scan tables.
pub fn classicality_margin(y: &Matrix2<f64>, g: f64) -> f64 {
    crate::gaussian::hermitian_min_eigenvalue2(&classicality_matrix(y, g))
}
