//! Seeded random covariance matrices, symplectic maps and noise matrices for
//! property tests and scans.
//!
//! Physical states are γ = Sᵀ(D ⊕ D′)S with S = e^{Δ₂K} for a random symmetric
//! K and thermal diagonals D, D′ ≥ 1.

use nalgebra::{Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::gaussian::{delta1, delta2, CovarianceMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn random_symmetric4<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Matrix4<f64> {
    let a = Matrix4::from_fn(|_, _| normal(rng) * scale);
    (a + a.transpose()) * 0.5
}

/// e^{Δ₂K} with K symmetric, entries of standard deviation `scale`.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Matrix4<f64> {
    (delta2() * random_symmetric4(rng, scale)).exp()
}

/// S_a ⊕ S_b.
pub fn random_local_symplectic<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Matrix4<f64> {
    let mut s = Matrix4::zeros();
    for k in 0..2 {
        let a = Matrix2::from_fn(|_, _| normal(rng) * scale);
        let block = (delta1() * (a + a.transpose()) * 0.5).exp();
        s.fixed_view_mut::<2, 2>(2 * k, 2 * k).copy_from(&block);
    }
    s
}

fn thermal_diagonal<R: Rng + ?Sized>(rng: &mut R, max_excess: f64) -> Matrix4<f64> {
    let d1 = 1.0 + rng.random::<f64>() * max_excess;
    let d2 = 1.0 + rng.random::<f64>() * max_excess;
    Matrix4::from_diagonal(&nalgebra::Vector4::new(d1, d1, d2, d2))
}

/// Random physical two-mode covariance, possibly entangled.
pub fn random_physical<R: Rng + ?Sized>(rng: &mut R) -> CovarianceMatrix {
    let s = random_symplectic(rng, 0.4);
    CovarianceMatrix::from_symmetric(thermal_diagonal(rng, 1.0)).congruence(&s)
}

/// Random separable covariance: a local product state plus, half the time,
/// a random PSD classical correlation. One draw in four is a pure product.
pub fn random_separable<R: Rng + ?Sized>(rng: &mut R) -> CovarianceMatrix {
    let s = random_local_symplectic(rng, 0.5);
    let pure = rng.random::<f64>() < 0.25;
    let d = if pure { Matrix4::identity() } else { thermal_diagonal(rng, 1.0) };
    let product = CovarianceMatrix::from_symmetric(d).congruence(&s);
    if pure || rng.random::<bool>() {
        return product;
    }
    let a = Matrix4::from_fn(|_, _| normal(rng) * 0.3);
    CovarianceMatrix::from_symmetric(product.matrix() + a * a.transpose())
}

/// |g| uniform in [lo, hi] with a random sign.
pub fn random_coupling<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let magnitude = lo + (hi - lo) * rng.random::<f64>();
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// PSD Y with det Y = (2 c g)², principal axes at a random angle and random
/// anisotropy. c ≥ 1 is classical, c < 1 is not.
pub fn noise_with_ratio<R: Rng + ?Sized>(rng: &mut R, g: f64, c: f64) -> Matrix2<f64> {
    let theta = rng.random::<f64>() * std::f64::consts::PI;
    let aniso = (normal(rng) * 0.7).exp();
    let (cs, sn) = (theta.cos(), theta.sin());
    let r = Matrix2::new(cs, -sn, sn, cs);
    let scale = 2.0 * c * g.abs();
    let y = r * Matrix2::new(scale * aniso, 0.0, 0.0, scale / aniso) * r.transpose();
    (y + y.transpose()) * 0.5
}

/// Classical noise for coupling g; one draw in five sits on the boundary c = 1.
pub fn random_classical_noise<R: Rng + ?Sized>(rng: &mut R, g: f64) -> Matrix2<f64> {
    let c = if rng.random::<f64>() < 0.2 { 1.0 } else { 1.0 + rng.random::<f64>() };
    noise_with_ratio(rng, g, c)
}

/// Noise that fails the classicality condition for coupling g: c ∈ [0, c_max).
pub fn random_nonclassical_noise<R: Rng + ?Sized>(rng: &mut R, g: f64, c_max: f64) -> Matrix2<f64> {
    let c = c_max * rng.random::<f64>();
    noise_with_ratio(rng, g, c)
}
