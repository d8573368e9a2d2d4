//! A single bosonic mode truncated to its lowest `dim` Fock states.

use nalgebra::{DMatrix, DVector};
use noisebound_core::gaussian::C64;

use crate::error::{OracleError, Result};
use crate::linalg::HermitianEigen;

#[derive(Clone, Debug)]
pub struct TruncatedMode {
    dim: usize,
    lowering: DMatrix<C64>,
    x: DMatrix<C64>,
    p: DMatrix<C64>,
}

impl TruncatedMode {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(OracleError::Truncation(format!("mode dimension {dim} < 2")));
        }
        let mut a = DMatrix::<C64>::zeros(dim, dim);
        for n in 1..dim {
            a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        let ad = a.adjoint();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = (&a + &ad) * C64::new(s, 0.0);
        let p = (&ad - &a) * C64::new(0.0, s);
        Ok(TruncatedMode { dim, lowering: a, x, p })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lowering(&self) -> &DMatrix<C64> {
        &self.lowering
    }

    pub fn x_op(&self) -> &DMatrix<C64> {
        &self.x
    }

    pub fn p_op(&self) -> &DMatrix<C64> {
        &self.p
    }

    pub fn number(&self) -> DMatrix<C64> {
        DMatrix::from_diagonal(&DVector::from_fn(self.dim, |n, _| C64::new(n as f64, 0.0)))
    }

    /// (x² + p²)/2, diagonal n + ½ in the Fock basis.
    pub fn oscillator(&self) -> DMatrix<C64> {
        DMatrix::from_diagonal(&DVector::from_fn(self.dim, |n, _| C64::new(n as f64 + 0.5, 0.0)))
    }

    /// Largest deviation of [x, p] from iI away from the last two levels.
    pub fn interior_commutator_defect(&self) -> f64 {
        let c = &self.x * &self.p - &self.p * &self.x;
        let k = self.dim.saturating_sub(2);
        let mut worst = 0.0_f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { C64::new(0.0, 1.0) } else { C64::new(0.0, 0.0) };
                worst = worst.max((c[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn x_eigen(&self) -> HermitianEigen {
        HermitianEigen::new(&self.x)
    }

    pub fn p_eigen(&self) -> HermitianEigen {
        HermitianEigen::new(&self.p)
    }

    /// Fock amplitudes of the coherent state |α⟩, renormalized after truncation.
    pub fn coherent(&self, alpha: C64) -> DVector<C64> {
        let mut v = DVector::<C64>::zeros(self.dim);
        let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..self.dim {
            v[n] = c;
            c *= alpha / ((n + 1) as f64).sqrt();
        }
        let norm = v.norm();
        v / C64::new(norm, 0.0)
    }

    /// S(r)|0⟩ with x-variance e^{2r}/2, renormalized after truncation.
    pub fn squeezed_vacuum(&self, r: f64) -> DVector<C64> {
        let mut v = DVector::<C64>::zeros(self.dim);
        let t = r.tanh();
        let mut c = 1.0 / r.cosh().sqrt();
        let mut n = 0;
        while 2 * n < self.dim {
            v[2 * n] = C64::new(c, 0.0);
            // c_{n+1}/c_n = t·√((2n+1)(2n+2))/(2(n+1))
            c *= t * (((2 * n + 1) * (2 * n + 2)) as f64).sqrt() / (2.0 * (n + 1) as f64);
            n += 1;
        }
        let norm = v.norm();
        v / C64::new(norm, 0.0)
    }

    /// Thermal populations with mean occupation `nbar`, renormalized.
    pub fn thermal_populations(&self, nbar: f64) -> DVector<f64> {
        let q = nbar / (1.0 + nbar);
        let mut p = DVector::from_fn(self.dim, |n, _| q.powi(n as i32));
        let s = p.sum();
        p /= s;
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutator_is_canonical_in_the_interior() {
        for d in [5, 20, 40] {
            let m = TruncatedMode::new(d).unwrap();
            assert!(m.interior_commutator_defect() < 1e-12);
            let c = m.x_op() * m.p_op() - m.p_op() * m.x_op();
            assert!((c[(d - 1, d - 1)].im - 1.0).abs() > 1.0, "edge defect expected");
        }
    }

    #[test]
    fn oscillator_is_quadratic_form() {
        let m = TruncatedMode::new(12).unwrap();
        let h = (m.x_op() * m.x_op() + m.p_op() * m.p_op()) * C64::new(0.5, 0.0);
        for n in 0..11 {
            assert!((h[(n, n)] - m.oscillator()[(n, n)]).norm() < 1e-12);
        }
    }

    #[test]
    fn coherent_state_mean() {
        let m = TruncatedMode::new(30).unwrap();
        let v = m.coherent(C64::new(0.6, -0.2));
        let x = (v.adjoint() * m.x_op() * &v)[(0, 0)].re;
        let p = (v.adjoint() * m.p_op() * &v)[(0, 0)].re;
        assert!((x - 0.6 * 2f64.sqrt()).abs() < 1e-12);
        assert!((p + 0.2 * 2f64.sqrt()).abs() < 1e-12);
    }
}
