//! Kraus realizations of screens on the truncated force-carrier space.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use noisebound_core::gaussian::C64;
use noisebound_core::screen::{DisplacementScreen, KrausScreen, ScreenSpec};

use crate::error::{OracleError, Result};
use crate::linalg::HermitianEigen;
use crate::mode::TruncatedMode;

/// Gauss–Hermite nodes per axis for displacement mixtures.
pub const GH_NODES: usize = 21;

/// A screen the oracle can realize.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleScreen {
    Identity,
    /// Random kick x → x + u, p → p + v with (u, v) ~ N(0, Σ).
    Displacement(DisplacementScreen),
    Kraus(KrausScreen),
}

impl OracleScreen {
    pub fn from_spec(spec: &ScreenSpec) -> Result<Self> {
        Ok(match spec {
            ScreenSpec::Identity => OracleScreen::Identity,
            ScreenSpec::Displacement(d) => OracleScreen::Displacement(*d),
            ScreenSpec::AmplitudeDamping { transmissivity, dim } => {
                OracleScreen::Kraus(KrausScreen::amplitude_damping(*transmissivity, *dim)?)
            }
        })
    }

    /// Kraus operators on a `dim`-level carrier, weights folded in.
    pub fn kraus(&self, dim: usize) -> Result<Vec<DMatrix<C64>>> {
        self.kraus_with_nodes(dim, GH_NODES)
    }

    pub fn kraus_with_nodes(&self, dim: usize, nodes: usize) -> Result<Vec<DMatrix<C64>>> {
        match self {
            OracleScreen::Identity => Ok(vec![DMatrix::identity(dim, dim)]),
            OracleScreen::Displacement(s) => displacement_mixture(&s.covariance(), dim, nodes),
            OracleScreen::Kraus(k) => {
                if k.dim() != dim {
                    return Err(OracleError::Invalid(format!("Kraus screen acts on {} levels, carrier has {dim}", k.dim())));
                }
                Ok(k.ops().to_vec())
            }
        }
    }
}

/// D(u, v) = exp(i(v x − u p)), so that D†xD = x + u and D†pD = p + v.
pub fn displacement(mode: &TruncatedMode, u: f64, v: f64) -> DMatrix<C64> {
    let g = mode.x_op() * C64::new(v, 0.0) - mode.p_op() * C64::new(u, 0.0);
    HermitianEigen::new(&g).propagator(-1.0)
}

/// Nodes and weights for E[f(z)], z ~ N(0, 1) (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let j = DMatrix::from_fn(n, n, |i, k| if i + 1 == k || k + 1 == i { (i.max(k) as f64).sqrt() } else { 0.0 });
    let e = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|k| (e.eigenvalues[k], e.eigenvectors[(0, k)] * e.eigenvectors[(0, k)])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Σ_k w_k D(u_k, v_k) · D(u_k, v_k)† with Gauss–Hermite nodes along the
/// principal axes of Σ; degenerate axes get a single node.
pub fn displacement_mixture(sigma: &Matrix2<f64>, dim: usize, nodes: usize) -> Result<Vec<DMatrix<C64>>> {
    let mode = TruncatedMode::new(dim)?;
    let e = SymmetricEigen::new(*sigma);
    if e.eigenvalues.min() < -1e-14 {
        return Err(OracleError::Invalid("kick covariance is not positive semidefinite".into()));
    }
    let axes: Vec<(DVector<f64>, Vec<f64>, Vec<f64>)> = (0..2)
        .map(|k| {
            let s = e.eigenvalues[k].max(0.0).sqrt();
            let (z, w) = if s > 1e-12 { gauss_hermite(nodes) } else { (vec![0.0], vec![1.0]) };
            (DVector::from_column_slice(e.eigenvectors.column(k).as_slice()) * s, z, w)
        })
        .collect();
    let mut ops = Vec::with_capacity(axes[0].1.len() * axes[1].1.len());
    for (z1, w1) in axes[0].1.iter().zip(&axes[0].2) {
        for (z2, w2) in axes[1].1.iter().zip(&axes[1].2) {
            let kick = &axes[0].0 * *z1 + &axes[1].0 * *z2;
            let d = displacement(&mode, kick[0], kick[1]);
            ops.push(d * C64::new((w1 * w2).sqrt(), 0.0));
        }
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_hermite_moments() {
        let (z, w) = gauss_hermite(GH_NODES);
        let m = |k: i32| z.iter().zip(&w).map(|(z, w)| w * z.powi(k)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-13);
        assert!(m(1).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(10) - 945.0).abs() < 1e-8);
    }

    #[test]
    fn displacement_shifts_quadratures() {
        let mode = TruncatedMode::new(40).unwrap();
        let d = displacement(&mode, 0.3, -0.2);
        let x = d.adjoint() * mode.x_op() * &d;
        let p = d.adjoint() * mode.p_op() * &d;
        assert!((x[(0, 0)].re - 0.3).abs() < 1e-12);
        assert!((p[(0, 0)].re + 0.2).abs() < 1e-12);
    }

    #[test]
    fn mixture_is_complete() {
        let ops = displacement_mixture(&Matrix2::new(0.3, 0.1, 0.1, 0.2), 20, GH_NODES).unwrap();
        let sum = ops.iter().fold(DMatrix::<C64>::zeros(20, 20), |acc, k| acc + k.adjoint() * k);
        assert!(crate::linalg::max_abs(&(sum - DMatrix::identity(20, 20))) < 1e-12);
        assert_eq!(ops.len(), GH_NODES * GH_NODES);
    }
}
