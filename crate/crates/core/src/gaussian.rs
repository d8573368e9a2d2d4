//! Phase-space primitives for two bosonic modes.
//!
//! Quadratures are ordered `(x_a, p_a, x_b, p_b)` and covariance matrices use
//! the symmetrized convention γ_ij = ⟨{M_i, M_j}⟩ − 2⟨M_i⟩⟨M_j⟩, so the vacuum
//! is the identity and the uncertainty relation reads γ + iΔ₂ ⪰ 0.

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Numerical thresholds shared by every positivity and symmetry decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Largest accepted |m_ij − m_ji|.
    pub sym: f64,
    /// A Hermitian matrix counts as PSD when its smallest eigenvalue is ≥ −psd.
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { sym: 1e-12, psd: 1e-10 }
    }
}

impl Tolerances {
    pub fn with_psd(psd: f64) -> Self {
        Tolerances { psd, ..Default::default() }
    }
}

/// First moments `(x_a, p_a, x_b, p_b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseVector(pub Vector4<f64>);

impl PhaseVector {
    pub fn new(x_a: f64, p_a: f64, x_b: f64, p_b: f64) -> Self {
        PhaseVector(Vector4::new(x_a, p_a, x_b, p_b))
    }
}

/// Outcome of a positivity test: the decision plus the eigenvalue it was based on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdReport {
    pub passed: bool,
    pub min_eigenvalue: f64,
    /// max |H − H†| of the Hermitian matrix that was diagonalized.
    pub hermiticity_residual: f64,
}

/// Symplectic form Δ_n = ⊕ [[0, 1], [−1, 0]].
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm {
    pub n: usize,
    pub matrix: DMatrix<f64>,
}

pub fn symplectic_form(n: usize) -> Result<SymplecticForm> {
    if n == 0 {
        return Err(Error::invalid("symplectic form needs at least one mode"));
    }
    let mut matrix = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        matrix[(2 * k, 2 * k + 1)] = 1.0;
        matrix[(2 * k + 1, 2 * k)] = -1.0;
    }
    Ok(SymplecticForm { n, matrix })
}

/// Δ₁.
pub fn delta1() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

/// Δ₂.
pub fn delta2() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    )
}

/// K = diag(1, 1, 1, −1), the partial momentum reversal p_b → −p_b.
pub fn reversal() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 1.0, -1.0))
}

/// Δ̃₂ = KΔ₂K.
pub fn delta2_reversed() -> Matrix4<f64> {
    let k = reversal();
    k * delta2() * k
}

pub(crate) fn complexify4(m: &Matrix4<f64>) -> Matrix4<C64> {
    m.map(|v| C64::new(v, 0.0))
}

/// Smallest eigenvalue of a 4×4 Hermitian matrix.
///
/// Every PSD decision on two-mode matrices goes through here.
pub fn hermitian_min_eigenvalue4(h: &Matrix4<C64>) -> (f64, f64) {
    let residual = (h - h.adjoint()).iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let min = h.symmetric_eigenvalues().min();
    (min, residual)
}

/// Smallest eigenvalue of a 2×2 Hermitian matrix.
pub fn hermitian_min_eigenvalue2(h: &Matrix2<C64>) -> f64 {
    h.symmetric_eigenvalues().min()
}

/// Minimum eigenvalue of m + iΔ₂ against the tolerance.
pub(crate) fn uncertainty_margin(m: &Matrix4<f64>, tol: &Tolerances) -> PsdReport {
    let h = complexify4(m) + delta2().map(|v| C64::new(0.0, v));
    let (min_eigenvalue, hermiticity_residual) = hermitian_min_eigenvalue4(&h);
    PsdReport { passed: min_eigenvalue >= -tol.psd, min_eigenvalue, hermiticity_residual }
}

/// Locate the worst asymmetric entry pair, if any exceeds `tol`.
pub(crate) fn check_symmetric4(m: &Matrix4<f64>, tol: f64) -> Result<()> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let diff = (m[(i, j)] - m[(j, i)]).abs();
            if diff > tol && worst.map_or(true, |(_, _, w)| diff > w) {
                worst = Some((i, j, diff));
            }
        }
    }
    match worst {
        Some((i, j, diff)) => Err(Error::NotSymmetric { row: i + 1, col: j + 1, diff }),
        None if m.iter().any(|v| !v.is_finite()) => Err(Error::invalid("matrix has non-finite entries")),
        None => Ok(()),
    }
}

/// Physicality test γ + iΔ₂ ⪰ 0 on a raw matrix.
pub fn validate_covariance(m: &Matrix4<f64>, tol: &Tolerances) -> Result<PsdReport> {
    check_symmetric4(m, tol.sym)?;
    Ok(uncertainty_margin(&symmetrize(m), tol))
}

fn symmetrize(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

/// Real symmetric 4×4 second-moment matrix of `(x_a, p_a, x_b, p_b)`.
///
/// Construction only checks symmetry; physicality is a separate question
/// answered by [`CovarianceMatrix::validate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceMatrix(Matrix4<f64>);

impl CovarianceMatrix {
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        Self::new_with(m, &Tolerances::default())
    }

    pub fn new_with(m: Matrix4<f64>, tol: &Tolerances) -> Result<Self> {
        check_symmetric4(&m, tol.sym)?;
        Ok(CovarianceMatrix(symmetrize(&m)))
    }

    /// Skips the symmetry check; the caller guarantees symmetry up to roundoff.
    pub(crate) fn from_symmetric(m: Matrix4<f64>) -> Self {
        CovarianceMatrix(symmetrize(&m))
    }

    pub fn vacuum() -> Self {
        CovarianceMatrix(Matrix4::identity())
    }

    /// Assemble [[A, C], [Cᵀ, B]] from the local blocks and the correlation block.
    pub fn from_blocks(a: &Matrix2<f64>, b: &Matrix2<f64>, c: &Matrix2<f64>) -> Result<Self> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(a);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(b);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(c);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&c.transpose());
        Self::new(m)
    }

    /// Two-mode squeezed vacuum with squeezing parameter `r`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let mut m = Matrix4::identity() * c;
        m[(0, 2)] = s;
        m[(2, 0)] = s;
        m[(1, 3)] = -s;
        m[(3, 1)] = -s;
        CovarianceMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix4<f64> {
        self.0
    }

    pub fn block_a(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn block_b(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn block_c(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 2).into_owned()
    }

    pub fn validate(&self, tol: &Tolerances) -> PsdReport {
        uncertainty_margin(&self.0, tol)
    }

    pub fn is_physical(&self) -> bool {
        self.validate(&Tolerances::default()).passed
    }

    /// KγK with K = diag(1, 1, 1, −1).
    pub fn partial_reverse(&self) -> Self {
        let k = reversal();
        CovarianceMatrix(k * self.0 * k)
    }

    /// Congruence SᵀγS, the same transformation rule as γ(t) = Xᵀγ(0)X.
    pub fn congruence(&self, s: &Matrix4<f64>) -> Self {
        CovarianceMatrix::from_symmetric(s.transpose() * self.0 * s)
    }

    /// Symplectic eigenvalues ν₁ ≤ ν₂, i.e. the moduli of the eigenvalues of
    /// iΔ₂γ. Vacuum gives (1, 1); γ is physical iff ν₁ ≥ 1.
    pub fn symplectic_eigenvalues(&self) -> [f64; 2] {
        let eig = self.0.symmetric_eigen();
        let sqrt_diag = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let root = &eig.eigenvectors * Matrix4::from_diagonal(&sqrt_diag) * eig.eigenvectors.transpose();
        let h = complexify4(&root) * delta2().map(|v| C64::new(0.0, v)) * complexify4(&root);
        let mut values: Vec<f64> = h.symmetric_eigenvalues().iter().copied().filter(|v| *v >= 0.0).collect();
        // Spectrum is ±ν₁, ±ν₂; roundoff can push a zero mode slightly negative.
        if values.len() < 2 {
            let mut all: Vec<f64> = h.symmetric_eigenvalues().iter().map(|v| v.abs()).collect();
            all.sort_by(f64::total_cmp);
            values = vec![all[0], all[2]];
        }
        values.sort_by(f64::total_cmp);
        [values[0], values[values.len() - 1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symplectic_form_blocks() {
        let d1 = symplectic_form(1).unwrap();
        assert_eq!(d1.matrix, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let d2 = symplectic_form(2).unwrap();
        assert_eq!(d2.matrix.fixed_view::<4, 4>(0, 0).into_owned(), delta2());
        let sq = &d2.matrix * &d2.matrix;
        assert_eq!(sq, -DMatrix::<f64>::identity(4, 4));
        assert_eq!(d2.matrix.transpose(), -d2.matrix.clone());
        assert!(symplectic_form(0).is_err());
        let d5 = symplectic_form(5).unwrap();
        assert_eq!(&d5.matrix * &d5.matrix, -DMatrix::<f64>::identity(10, 10));
    }

    #[test]
    fn vacuum_saturates_uncertainty() {
        let r = validate_covariance(&Matrix4::identity(), &Tolerances::default()).unwrap();
        assert!(r.passed);
        assert!(r.min_eigenvalue.abs() < 1e-14);
        assert!(r.hermiticity_residual < 1e-12);
    }

    #[test]
    fn zero_matrix_is_unphysical() {
        let r = validate_covariance(&Matrix4::zeros(), &Tolerances::default()).unwrap();
        assert!(!r.passed);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_mode_squeezed_is_physical() {
        let r = 0.5_f64;
        let m = Matrix4::from_diagonal(&Vector4::new((2.0 * r).exp(), (-2.0 * r).exp(), 1.0, 1.0));
        let rep = validate_covariance(&m, &Tolerances::default()).unwrap();
        assert!(rep.passed);
        // Eigenvalues of [[e^{2r}, i], [−i, e^{−2r}]]: the smaller one is
        // cosh 2r − sqrt(sinh² 2r + 1) = 0 for a pure state.
        assert!(rep.min_eigenvalue.abs() < 1e-12, "{}", rep.min_eigenvalue);
    }

    #[test]
    fn asymmetric_input_names_entry_pair() {
        let mut m = Matrix4::identity();
        m[(1, 3)] = 0.5;
        match validate_covariance(&m, &Tolerances::default()) {
            Err(Error::NotSymmetric { row: 2, col: 4, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn partial_reverse_flips_pb_row_and_column() {
        let mut m = Matrix4::identity() * 2.0;
        m[(1, 3)] = 0.3;
        m[(3, 1)] = 0.3;
        m[(0, 3)] = -0.2;
        m[(3, 0)] = -0.2;
        let g = CovarianceMatrix::new(m).unwrap();
        let r = g.partial_reverse();
        assert_eq!(r.matrix()[(1, 3)], -0.3);
        assert_eq!(r.matrix()[(3, 1)], -0.3);
        assert_eq!(r.matrix()[(0, 3)], 0.2);
        assert_eq!(r.matrix()[(3, 3)], 2.0);
        assert_eq!(r.partial_reverse(), g);
        assert_eq!(CovarianceMatrix::vacuum().partial_reverse(), CovarianceMatrix::vacuum());
    }

    #[test]
    fn symplectic_spectrum_of_thermal_product() {
        let m = Matrix4::from_diagonal(&Vector4::new(3.0, 3.0, 1.5, 1.5));
        let nu = CovarianceMatrix::new(m).unwrap().symplectic_eigenvalues();
        assert!((nu[0] - 1.5).abs() < 1e-12);
        assert!((nu[1] - 3.0).abs() < 1e-12);
    }
}
