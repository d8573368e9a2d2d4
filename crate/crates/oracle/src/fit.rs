//! Fits of effective two-mode dynamics to oracle output.

use nalgebra::{DMatrix, DVector};
use noisebound_core::gaussian::C64;
use noisebound_core::screen::{CouplingConvention, ScreenMoments};

use crate::channel::OracleScreen;
use crate::circuit::Circuit;
use crate::error::{OracleError, Result};
use crate::linalg::{embed, mul, HermitianEigen};
use crate::moments::KernelCoefficients;
use crate::mode::TruncatedMode;
use crate::state::FockState;

#[derive(Clone, Debug)]
pub struct CouplingFitOptions {
    pub dim: usize,
    pub fc_dim: usize,
    pub t_max: f64,
    /// Number of fit times, evenly spaced in (0, t_max].
    pub grid: usize,
    /// Step counts for t_max, each twice the previous.
    pub steps: [usize; 3],
    pub initial: (C64, C64),
    pub convention: CouplingConvention,
}

impl Default for CouplingFitOptions {
    fn default() -> Self {
        CouplingFitOptions {
            dim: 12,
            fc_dim: 20,
            t_max: 2.0,
            grid: 8,
            steps: [64, 128, 256],
            initial: (C64::new(0.5, 0.0), C64::new(0.0, 0.4)),
            convention: CouplingConvention::Appendix,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingFit {
    /// (n, fitted η, residual infidelity summed over the grid).
    pub per_steps: Vec<(usize, f64, f64)>,
    /// Richardson limit n → ∞ assuming η_n = η + c₁/n + c₂/n².
    pub extrapolated: f64,
}

/// Fits η in e^{−it(H_a + H_b + η x_a x_b)} to the identity-screen circuit by
/// maximizing the state fidelity summed over a time grid.
pub fn fit_identity_coupling(opts: &CouplingFitOptions) -> Result<CouplingFit> {
    let d = opts.dim;
    let dims = [d, d];
    if opts.steps.iter().any(|n| n % opts.grid != 0) || opts.steps[1] != 2 * opts.steps[0] || opts.steps[2] != 2 * opts.steps[1] {
        return Err(OracleError::Invalid("step counts must double and be multiples of the grid".into()));
    }
    let psi0 = TruncatedMode::new(d)?.coherent(opts.initial.0).kronecker(&TruncatedMode::new(d)?.coherent(opts.initial.1));
    let rho0 = FockState::pure(&psi0, dims.to_vec())?;
    let mode = TruncatedMode::new(d)?;
    let local = embed(&mode.oscillator(), 0, &dims) + embed(&mode.oscillator(), 1, &dims);
    let xx = mul(&embed(mode.x_op(), 0, &dims), &embed(mode.x_op(), 1, &dims));

    let circuit = Circuit::new(dims, opts.fc_dim, &OracleScreen::Identity, opts.convention.identity_eta())?
        .with_convention(opts.convention)
        .with_coupling_strengths(1.0, 1.0);

    let mut per_steps = vec![];
    for &n in &opts.steps {
        let traj = circuit.trotter_trajectory(&rho0, opts.t_max, n, n / opts.grid)?;
        let states: Vec<(f64, DMatrix<C64>)> = traj.into_iter().map(|(t, o)| (t, o.state.into_rho())).collect();
        let loss = |eta: f64| {
            let h = HermitianEigen::new(&(&local + &xx * C64::new(eta, 0.0)));
            let c0 = h.vectors.adjoint() * &psi0;
            states
                .iter()
                .map(|(t, rho)| {
                    let ct = DVector::from_fn(c0.len(), |k, _| c0[k] * C64::from_polar(1.0, -t * h.values[k]));
                    let psi = &h.vectors * ct;
                    1.0 - (psi.adjoint() * rho * &psi)[(0, 0)].re
                })
                .sum::<f64>()
        };
        let (eta, res) = minimize(&loss, -2.0, 2.0);
        per_steps.push((n, eta, res));
    }
    let [e1, e2, e4] = [per_steps[0].1, per_steps[1].1, per_steps[2].1];
    let extrapolated = (8.0 * e4 - 6.0 * e2 + e1) / 3.0;
    Ok(CouplingFit { per_steps, extrapolated })
}

/// Coarse scan followed by golden-section refinement.
fn minimize(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let n = 80;
    let h = (hi - lo) / n as f64;
    let best = (0..=n).map(|k| lo + k as f64 * h).map(|x| (x, f(x))).fold((lo, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / 2.0;
    (x, f(x))
}

/// Generator read off the exchange kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorFit {
    /// Largest |√τ coefficient| over the sample points.
    pub sqrt_tau_coefficient: f64,
    pub coefficients: KernelCoefficients,
    pub moments: ScreenMoments,
    /// Largest misfit of the quadratic model to the extracted τ coefficients.
    pub residual: f64,
}

/// Extracts the √τ and τ coefficients of the kernel by Richardson
/// extrapolation in α = √τ, separating even and odd parts with ±α, and fits
/// the τ coefficient to the ten quadratic monomials. Eigenvalues are sampled
/// on `points` per axis in [−1, 1] for unit coupling.
pub fn extract_generator(circuit: &Circuit, alpha0: f64, levels: usize, points: usize) -> Result<GeneratorFit> {
    if levels < 2 || points < 2 {
        return Err(OracleError::Invalid("need at least two Richardson levels and two grid points".into()));
    }
    let circuit = circuit.clone().with_coupling_strengths(1.0, 1.0);
    let grid: Vec<f64> = (0..points).map(|k| -1.0 + 2.0 * k as f64 / (points - 1) as f64).collect();
    let mut rows = vec![];
    let mut c2 = vec![];
    let mut sqrt_tau_coefficient = 0.0_f64;
    for &a in &grid {
        for &b in &grid {
            for &a2 in &grid {
                for &b2 in &grid {
                    let mut odd = vec![];
                    let mut even = vec![];
                    for l in 0..levels {
                        let al = alpha0 / 2f64.powi(l as i32);
                        let plus = circuit.kernel_element(al, (a, b), (a2, b2));
                        let minus = circuit.kernel_element(-al, (a, b), (a2, b2));
                        odd.push((plus - minus) / (2.0 * al));
                        even.push((plus + minus - C64::new(2.0, 0.0)) / (2.0 * al * al));
                    }
                    sqrt_tau_coefficient = sqrt_tau_coefficient.max(richardson(odd).norm());
                    rows.push(KernelCoefficients::monomials(a, b, a2, b2));
                    c2.push(richardson(even));
                }
            }
        }
    }
    let design = DMatrix::from_fn(rows.len(), 10, |i, j| C64::new(rows[i][j], 0.0));
    let rhs = DVector::from_vec(c2.clone());
    let sol = (design.adjoint() * &design)
        .cholesky()
        .ok_or_else(|| OracleError::Invalid("sample grid does not determine the quadratic form".into()))?
        .solve(&(design.adjoint() * &rhs));
    let residual = (&design * &sol - rhs).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let coefficients = KernelCoefficients::from_array(std::array::from_fn(|k| sol[k]));
    let mut moments = coefficients.moments([0.0, 0.0]);
    moments.mean_shift = None;
    Ok(GeneratorFit { sqrt_tau_coefficient, coefficients, moments, residual })
}

/// Richardson table for f(h) = f₀ + c₁h² + c₂h⁴ + … sampled at h, h/2, h/4, ….
fn richardson(mut v: Vec<C64>) -> C64 {
    let n = v.len();
    for level in 1..n {
        let factor = 4f64.powi(level as i32);
        for i in (level..n).rev() {
            v[i] = (v[i] * factor - v[i - 1]) / (factor - 1.0);
        }
    }
    v[n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_removes_even_powers() {
        let f = |h: f64| C64::new(2.0 + 3.0 * h * h - h.powi(4), 0.0);
        let v = (0..3).map(|l| f(0.1 / 2f64.powi(l))).collect();
        assert!((richardson(v) - C64::new(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn golden_section_finds_minimum() {
        let (x, _) = minimize(&|x: f64| (x - 0.73).powi(2), -2.0, 2.0);
        assert!((x - 0.73).abs() < 1e-8);
    }
}
