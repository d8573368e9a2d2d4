//! Excess momentum noise against the reversible benchmark and the 2|g| rate bound.
//!
//! Var^(e)(p_a) + Var^(e)(p_b) is the momentum variance in excess of the
//! Hamiltonian-only evolution that shares the initial state. With
//! z = [0, 1, 0, i]ᵀ it equals ½ z†(γ − γ_r)z.

use std::io::Write;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::dynamics::{propagate, GaussianDynamics, Propagator};
use crate::error::{Error, Result};
use crate::gaussian::{complexify4, CovarianceMatrix, C64};

fn z_vector() -> Vector4<C64> {
    Vector4::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0))
}

/// ½ z†Mz for a real matrix M.
fn half_quadratic(m: &Matrix4<f64>) -> f64 {
    let z = z_vector();
    let v = (z.adjoint() * complexify4(m) * z)[(0, 0)] * 0.5;
    debug_assert!(v.im.abs() <= 1e-12 * (1.0 + m.abs().max()), "imaginary residue {}", v.im);
    v.re
}

/// ½ z†(γ − γ_r)z with z = [0, 1, 0, i]ᵀ.
pub fn excess_variance(gamma: &CovarianceMatrix, gamma_r: &CovarianceMatrix) -> f64 {
    half_quadratic(&(gamma.matrix() - gamma_r.matrix()))
}

/// ½ z†yz = (Y_xx + Y_pp)/2.
pub fn noise_rate_at_zero(dynamics: &GaussianDynamics) -> f64 {
    half_quadratic(dynamics.diffusion())
}

/// tol_rate = 1e-6 · max(1, 2|g|).
pub fn rate_tolerance(g: f64) -> f64 {
    1e-6 * (2.0 * g.abs()).max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseRow {
    pub time: f64,
    pub excess: f64,
    pub rate: f64,
    pub anchored_rate: f64,
    pub bound: f64,
    pub verdict: bool,
}

/// Time series of the excess noise and its rates.
///
/// `excess` is measured against the reversible trajectory started at t = 0.
/// `rate` is the local rate at each grid time, with the reversible benchmark
/// restarted from γ(t); this is the quantity the bound constrains pointwise.
/// `anchored_rate` is d(excess)/dt for the benchmark fixed at t = 0, which
/// picks up drift cross-terms and may dip below the bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseReport {
    pub g: f64,
    pub bound: f64,
    pub tol_rate: f64,
    pub rows: Vec<NoiseRow>,
}

impl NoiseReport {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time).collect()
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict)
    }

    pub fn first_violation(&self) -> Option<&NoiseRow> {
        self.rows.iter().find(|r| !r.verdict)
    }

    pub fn min_rate(&self) -> f64 {
        self.rows.iter().map(|r| r.rate).fold(f64::INFINITY, f64::min)
    }

    pub fn min_anchored_rate(&self) -> f64 {
        self.rows.iter().map(|r| r.anchored_rate).fold(f64::INFINITY, f64::min)
    }

    /// (∂_t + κ) applied to the anchored excess, for damped dynamics.
    pub fn damped_statistic(&self, kappa: f64) -> Vec<f64> {
        self.rows.iter().map(|r| r.anchored_rate + kappa * r.excess).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::invalid(format!("csv: {e}")))?;
        }
        w.flush().map_err(|e| Error::invalid(format!("csv: {e}")))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

/// Stencil offsets and weights for f′(0).
const CENTERED: [(i32, f64); 4] = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
const FORWARD: [(i32, f64); 5] = [(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)];

/// Propagate γ0 on a uniform grid of `grid` points over [0, t_max] and test
/// the local excess-noise rate against 2|g|.
pub fn run_noise_test(dynamics: &GaussianDynamics, gamma0: &CovarianceMatrix, t_max: f64, grid: usize) -> Result<NoiseReport> {
    if grid < 3 {
        return Err(Error::invalid(format!("noise test grid needs at least 3 points, got {grid}")));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::invalid(format!("t_max must be positive, got {t_max}")));
    }
    let g = dynamics.coupling();
    let bound = 2.0 * g.abs();
    let tol_rate = rate_tolerance(g);
    let h = t_max / (grid - 1) as f64;
    let delta = (0.5 * h).min(1e-3 * (1.0 / g.abs().max(1e-300)).min(1.0));

    // P_{jδ} for j = 0..4 and reversible transfers X_{jδ} for j = −2..4.
    let offsets: Vec<Propagator> = (0..=4).map(|j| dynamics.propagator(j as f64 * delta)).collect::<Result<_>>()?;
    let transfers: Vec<Matrix4<f64>> = (-2..=4).map(|j| (dynamics.drift() * (j as f64 * delta)).exp()).collect();
    let transfer = |j: i32| &transfers[(j + 2) as usize];
    let step = dynamics.propagator(h)?;
    let g0 = *gamma0.matrix();

    let mut rows = Vec::with_capacity(grid);
    // Full and reversible trajectories sampled at t_k − 2δ once centered stencils apply.
    let mut chain: Option<(Matrix4<f64>, Matrix4<f64>)> = None;
    for k in 0..grid {
        let t = k as f64 * h;
        let centered = t >= 2.0 * delta;
        let (stencil, first): (&[(i32, f64)], i32) = if centered { (&CENTERED, -2) } else { (&FORWARD, 0) };
        let (full_base, rev_base) = match (centered, chain) {
            (true, Some((f, r))) => {
                (step.noise + step.transfer.transpose() * f * step.transfer, step.transfer.transpose() * r * step.transfer)
            }
            _ => {
                let t0 = t + first as f64 * delta;
                let x = (dynamics.drift() * t0).exp();
                (propagate(gamma0, dynamics, t0)?.into_inner(), x.transpose() * g0 * x)
            }
        };
        if centered {
            chain = Some((full_base, rev_base));
        }
        let full = |j: i32| {
            let p = &offsets[(j - first) as usize];
            p.noise + p.transfer.transpose() * full_base * p.transfer
        };
        let rev = |j: i32| {
            let p = &offsets[(j - first) as usize];
            p.transfer.transpose() * rev_base * p.transfer
        };
        let now = full(0);
        let excess = if k == 0 { 0.0 } else { half_quadratic(&(now - rev(0))) };
        let mut rate = 0.0;
        let mut anchored_rate = 0.0;
        for &(j, w) in stencil {
            let at = full(j);
            let x = transfer(j);
            rate += w * half_quadratic(&(at - x.transpose() * now * x));
            anchored_rate += w * half_quadratic(&(at - rev(j)));
        }
        rate /= 12.0 * delta;
        anchored_rate /= 12.0 * delta;
        rows.push(NoiseRow { time: t, excess, rate, anchored_rate, bound, verdict: rate >= bound - tol_rate });
    }
    Ok(NoiseReport { g, bound, tol_rate, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::build_dynamics;
    use crate::screen::{CouplingConvention, DisplacementScreen, ScreenMoments};
    use nalgebra::Matrix2;

    fn dynamics(s: f64, g: f64) -> GaussianDynamics {
        build_dynamics(&ScreenMoments::from_noise(Matrix2::identity() * (2.0 * s), g), true).unwrap()
    }

    #[test]
    fn excess_examples() {
        let g = CovarianceMatrix::two_mode_squeezed(0.4);
        assert_eq!(excess_variance(&g, &g), 0.0);
        let diff = CovarianceMatrix::new(Matrix4::from_diagonal(&Vector4::new(0.0, 2.0 * 0.3, 0.0, 2.0 * 0.7))).unwrap();
        assert!((excess_variance(&diff, &CovarianceMatrix::new(Matrix4::zeros()).unwrap()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_time_rate_examples() {
        let id = build_dynamics(&ScreenMoments::identity(CouplingConvention::Appendix), true).unwrap();
        assert_eq!(noise_rate_at_zero(&id), 0.0);
        let m = DisplacementScreen::symmetric(0.35).unwrap().moments(CouplingConvention::Appendix);
        assert!((noise_rate_at_zero(&build_dynamics(&m, true).unwrap()) - 0.7).abs() < 1e-15);
        assert!((noise_rate_at_zero(&dynamics(0.4, 0.4)) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn classical_screen_passes_everywhere() {
        let r = run_noise_test(&dynamics(0.5, 0.4), &CovarianceMatrix::vacuum(), 5.0, 201).unwrap();
        assert!(r.all_pass(), "{:?}", r.first_violation());
        assert_eq!(r.rows[0].excess, 0.0);
        for row in &r.rows {
            assert!((row.rate - 1.0).abs() < 1e-6, "{row:?}");
        }
    }

    #[test]
    fn unscreened_coupling_violates_at_start() {
        let id = build_dynamics(&ScreenMoments::identity(CouplingConvention::Appendix).with_coupling(0.2), true).unwrap();
        let r = run_noise_test(&id, &CovarianceMatrix::vacuum(), 1.0, 11).unwrap();
        assert!(!r.rows[0].verdict);
        assert!(r.rows[0].rate.abs() < 1e-9);
    }

    #[test]
    fn grid_too_small() {
        assert!(run_noise_test(&dynamics(0.1, 0.1), &CovarianceMatrix::vacuum(), 1.0, 2).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let r = run_noise_test(&dynamics(0.1, 0.1), &CovarianceMatrix::vacuum(), 1.0, 5).unwrap();
        let text = r.to_csv().unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("time,excess,rate,anchored_rate,bound,verdict"));
        assert_eq!(lines.count(), 5);
    }
}
