//! Dense complex helpers: GEMM through matrixmultiply, Hermitian functions,
//! Kronecker products and mode-wise operator application.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use noisebound_core::gaussian::C64;

/// C = op(A)·B with op = identity or conjugate transpose.
pub fn gemm(a: &DMatrix<C64>, adjoint_a: bool, b: &DMatrix<C64>) -> DMatrix<C64> {
    let conj;
    let (m, k, pa, rsa, csa) = if adjoint_a {
        conj = a.map(|z| z.conj());
        (a.ncols(), a.nrows(), conj.as_ptr(), a.nrows() as isize, 1)
    } else {
        (a.nrows(), a.ncols(), a.as_ptr(), 1, a.nrows() as isize)
    };
    assert_eq!(k, b.nrows(), "gemm: inner dimensions differ");
    let n = b.ncols();
    let mut c = DMatrix::<C64>::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: Complex<f64> is repr(C) {re, im}, layout-identical to [f64; 2];
    // strides describe the column-major buffers allocated above.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            pa as *const [f64; 2],
            rsa,
            csa,
            b.as_ptr() as *const [f64; 2],
            1,
            b.nrows() as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// A·B with the fast kernel.
pub fn mul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    gemm(a, false, b)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn new(h: &DMatrix<C64>) -> Self {
        let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let e = SymmetricEigen::new(sym);
        HermitianEigen { values: e.eigenvalues, vectors: e.eigenvectors }
    }

    /// V f(λ) V†.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            let s = f(l);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= s);
        }
        mul(&scaled, &self.vectors.adjoint())
    }

    /// exp(−iθH).
    pub fn propagator(&self, theta: f64) -> DMatrix<C64> {
        self.map(|l| C64::from_polar(1.0, -theta * l))
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }
}

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

pub fn identity(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

/// Embeds single-mode operator `op` acting on `mode` into the product space `dims`.
pub fn embed(op: &DMatrix<C64>, mode: usize, dims: &[usize]) -> DMatrix<C64> {
    dims.iter().enumerate().fold(DMatrix::<C64>::identity(1, 1), |acc, (i, &d)| {
        if i == mode {
            kron(&acc, op)
        } else {
            kron(&acc, &identity(d))
        }
    })
}

/// (U on `mode`)·ρ, exploiting the product structure. `dims` are the mode
/// dimensions with the last mode varying fastest.
pub fn left_apply(u: &DMatrix<C64>, mode: usize, dims: &[usize], rho: &DMatrix<C64>) -> DMatrix<C64> {
    let d = dims[mode];
    let outer: usize = dims[..mode].iter().product();
    let inner: usize = dims[mode + 1..].iter().product();
    let total = outer * d * inner;
    assert_eq!(rho.nrows(), total);
    let mut out = DMatrix::<C64>::zeros(total, rho.ncols());
    for c in 0..rho.ncols() {
        let col = rho.column(c);
        let mut dst = out.column_mut(c);
        for o in 0..outer {
            for i in 0..inner {
                for j in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for jp in 0..d {
                        acc += u[(j, jp)] * col[(o * d + jp) * inner + i];
                    }
                    dst[(o * d + j) * inner + i] = acc;
                }
            }
        }
    }
    out
}

/// U ρ U† for U acting on a single mode.
pub fn conjugate_mode(u: &DMatrix<C64>, mode: usize, dims: &[usize], rho: &DMatrix<C64>) -> DMatrix<C64> {
    let left = left_apply(u, mode, dims, rho);
    left_apply(u, mode, dims, &left.adjoint()).adjoint()
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm(h: &DMatrix<C64>) -> f64 {
    HermitianEigen::new(h).values.iter().map(|v| v.abs()).sum()
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn trace(m: &DMatrix<C64>) -> C64 {
    m.diagonal().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, m: usize, seed: f64) -> DMatrix<C64> {
        DMatrix::from_fn(n, m, |i, j| C64::new((i as f64 * 0.7 + j as f64 * 1.3 + seed).sin(), (i as f64 * 0.2 - j as f64 + seed).cos()))
    }

    #[test]
    fn gemm_matches_nalgebra() {
        let a = sample(7, 5, 0.1);
        let b = sample(5, 9, 0.4);
        assert!(max_abs(&(mul(&a, &b) - &a * &b)) < 1e-13);
        let c = sample(7, 4, 0.9);
        assert!(max_abs(&(gemm(&a, true, &c) - a.adjoint() * &c)) < 1e-13);
    }

    #[test]
    fn left_apply_matches_embedding() {
        let dims = [3, 4, 2];
        let rho = sample(24, 24, 0.3);
        for mode in 0..3 {
            let u = sample(dims[mode], dims[mode], 1.1);
            let full = embed(&u, mode, &dims);
            assert!(max_abs(&(left_apply(&u, mode, &dims, &rho) - &full * &rho)) < 1e-12);
            let conj = conjugate_mode(&u, mode, &dims, &rho);
            assert!(max_abs(&(conj - &full * &rho * full.adjoint())) < 1e-11);
        }
    }

    #[test]
    fn hermitian_propagator_is_unitary() {
        let h = sample(6, 6, 0.5);
        let h = &h + h.adjoint();
        let u = HermitianEigen::new(&h).propagator(0.8);
        assert!(max_abs(&(&u * u.adjoint() - identity(6))) < 1e-13);
    }
}
