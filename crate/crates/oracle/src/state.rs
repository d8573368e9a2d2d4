//! Dense density matrices on truncated products of modes.

use nalgebra::{DMatrix, DVector, Matrix4};
use noisebound_core::gaussian::C64;
use noisebound_core::CovarianceMatrix;

use crate::error::{OracleError, Result};
use crate::linalg::{conjugate_mode, left_apply, max_abs, trace, HermitianEigen};
use crate::mode::TruncatedMode;

pub const TOL_HERMITIAN: f64 = 1e-10;
pub const TOL_TRACE: f64 = 1e-8;
pub const TOL_POSITIVE: f64 = 1e-8;

/// Density matrix on modes ordered (a, b, f); the last mode varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    rho: DMatrix<C64>,
    dims: Vec<usize>,
}

impl FockState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(rho: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        let s = Self::unchecked(rho, dims)?;
        s.validate()?;
        Ok(s)
    }

    pub(crate) fn unchecked(rho: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.len() > 3 {
            return Err(OracleError::Invalid(format!("{} modes; expected 1 to 3", dims.len())));
        }
        if rho.nrows() != total || rho.ncols() != total {
            return Err(OracleError::Invalid(format!("density matrix is {}×{}, dims give {total}", rho.nrows(), rho.ncols())));
        }
        Ok(FockState { rho, dims })
    }

    pub fn validate(&self) -> Result<()> {
        let herm = max_abs(&(&self.rho - self.rho.adjoint()));
        if herm > TOL_HERMITIAN {
            return Err(OracleError::NotAState(format!("Hermiticity defect {herm:.3e}")));
        }
        let tr = trace(&self.rho);
        if (tr - C64::new(1.0, 0.0)).norm() > TOL_TRACE {
            return Err(OracleError::NotAState(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -TOL_POSITIVE {
            return Err(OracleError::NotAState(format!("min eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn pure(psi: &DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        let n = psi.norm();
        let psi = psi / C64::new(n, 0.0);
        Self::unchecked(&psi * psi.adjoint(), dims)
    }

    pub fn vacuum(dims: &[usize]) -> Self {
        let total: usize = dims.iter().product();
        let mut rho = DMatrix::zeros(total, total);
        rho[(0, 0)] = C64::new(1.0, 0.0);
        FockState { rho, dims: dims.to_vec() }
    }

    /// Product of single-mode coherent states.
    pub fn coherent(dims: &[usize], alphas: &[C64]) -> Result<Self> {
        if dims.len() != alphas.len() {
            return Err(OracleError::Invalid("one amplitude per mode".into()));
        }
        let mut psi = DVector::from_element(1, C64::new(1.0, 0.0));
        for (&d, &a) in dims.iter().zip(alphas) {
            psi = psi.kronecker(&TruncatedMode::new(d)?.coherent(a));
        }
        Self::pure(&psi, dims.to_vec())
    }

    pub fn thermal(dim: usize, nbar: f64) -> Result<Self> {
        if nbar < 0.0 {
            return Err(OracleError::Invalid(format!("negative occupation {nbar}")));
        }
        let p = TruncatedMode::new(dim)?.thermal_populations(nbar);
        Self::unchecked(DMatrix::from_diagonal(&p.map(|v| C64::new(v, 0.0))), vec![dim])
    }

    pub fn tensor(&self, other: &FockState) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::unchecked(self.rho.kronecker(&other.rho), dims)
    }

    pub fn rho(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn into_rho(self) -> DMatrix<C64> {
        self.rho
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn trace(&self) -> C64 {
        trace(&self.rho)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        HermitianEigen::new(&self.rho).min()
    }

    /// Tr(ρ O).
    pub fn expect(&self, op: &DMatrix<C64>) -> C64 {
        self.rho.iter().zip(op.transpose().iter()).map(|(a, b)| a * b).sum()
    }

    /// Tr(ρ O) for O acting on a single mode.
    pub fn expect_mode(&self, op: &DMatrix<C64>, mode: usize) -> C64 {
        trace(&left_apply(op, mode, &self.dims, &self.rho))
    }

    /// U ρ U† with U on one mode.
    pub fn evolve_mode(&self, u: &DMatrix<C64>, mode: usize) -> Self {
        FockState { rho: conjugate_mode(u, mode, &self.dims, &self.rho), dims: self.dims.clone() }
    }

    /// Population of the top `levels` Fock states of `mode`.
    pub fn edge_population(&self, mode: usize, levels: usize) -> f64 {
        let d = self.dims[mode];
        let inner: usize = self.dims[mode + 1..].iter().product();
        let mut pop = 0.0;
        for i in 0..self.rho.nrows() {
            let level = (i / inner) % d;
            if level + levels >= d {
                pop += self.rho[(i, i)].re;
            }
        }
        pop
    }

    /// Trace over the last mode.
    pub fn trace_last(&self) -> Result<Self> {
        let k = self.dims.len();
        if k < 2 {
            return Err(OracleError::Invalid("cannot trace out the only mode".into()));
        }
        let df = self.dims[k - 1];
        let rest = self.rho.nrows() / df;
        let rho = DMatrix::from_fn(rest, rest, |r, c| (0..df).map(|f| self.rho[(r * df + f, c * df + f)]).sum());
        Self::unchecked(rho, self.dims[..k - 1].to_vec())
    }

    /// ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &FockState) -> f64 {
        crate::linalg::trace_norm(&(&self.rho - &other.rho)) / 2.0
    }
}

/// γ_ij = ⟨{M_i, M_j}⟩ − 2⟨M_i⟩⟨M_j⟩ for M = (x_a, p_a, x_b, p_b).
pub fn covariance_of(state: &FockState) -> Result<CovarianceMatrix> {
    Ok(CovarianceMatrix::new(covariance_matrix_of(state)?)?)
}

/// The moment matrix without the physicality check.
pub fn covariance_matrix_of(state: &FockState) -> Result<Matrix4<f64>> {
    if state.dims.len() != 2 {
        return Err(OracleError::Invalid(format!("covariance_of needs a two-mode state, got {} modes", state.dims.len())));
    }
    let modes = [TruncatedMode::new(state.dims[0])?, TruncatedMode::new(state.dims[1])?];
    let ops: Vec<(DMatrix<C64>, usize)> = vec![
        (modes[0].x_op().clone(), 0),
        (modes[0].p_op().clone(), 0),
        (modes[1].x_op().clone(), 1),
        (modes[1].p_op().clone(), 1),
    ];
    // M_j ρ for each j, then ⟨M_i M_j⟩ = Tr(M_i M_j ρ).
    let applied: Vec<DMatrix<C64>> = ops.iter().map(|(o, m)| left_apply(o, *m, &state.dims, &state.rho)).collect();
    let means: Vec<f64> = applied.iter().map(|m| trace(m).re).collect();
    let mut g = Matrix4::zeros();
    for i in 0..4 {
        for j in i..4 {
            let mij = trace(&left_apply(&ops[i].0, ops[i].1, &state.dims, &applied[j]));
            let v = 2.0 * mij.re - 2.0 * means[i] * means[j];
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_identity_covariance() {
        let g = covariance_of(&FockState::vacuum(&[8, 8])).unwrap();
        assert!((g.matrix() - Matrix4::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn trace_last_of_product() {
        let a = FockState::coherent(&[6, 5], &[C64::new(0.3, 0.1), C64::new(0.0, 0.0)]).unwrap();
        let f = FockState::thermal(4, 0.3).unwrap();
        let back = a.tensor(&f).unwrap().trace_last().unwrap();
        assert!(max_abs(&(back.rho() - a.rho())) < 1e-14);
    }

    #[test]
    fn rejects_non_states() {
        let mut rho = DMatrix::<C64>::identity(4, 4) * C64::new(0.25, 0.0);
        rho[(0, 1)] = C64::new(0.1, 0.0);
        assert!(FockState::new(rho, vec![2, 2]).is_err());
        assert!(FockState::new(DMatrix::identity(4, 4), vec![2, 2]).is_err());
    }
}
