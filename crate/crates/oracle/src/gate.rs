//! Check that the four carrier gates compose to e^{−iη_id τAB}.

use nalgebra::{DMatrix, DVector};
use noisebound_core::gaussian::C64;
use noisebound_core::screen::CouplingConvention;

use crate::error::{OracleError, Result};
use crate::linalg::{mul, HermitianEigen};
use crate::mode::TruncatedMode;

#[derive(Clone, Debug, PartialEq)]
pub struct GateCheck {
    pub tau: f64,
    pub dim: usize,
    /// Trace distance to e^{−iη_id τAB} per test state.
    pub deviations: Vec<f64>,
    /// Trace distance to the opposite-sign exchange e^{+iη_id τAB}.
    pub opposite_sign: Vec<f64>,
}

impl GateCheck {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }
}

/// Product coherent states |α⟩|β⟩ with |α|, |β| ≤ 1.
pub type GateTestState = (C64, C64);

/// Runs the gate sequence with A = x_a, B = x_b on pure three-mode states
/// (carrier in vacuum), traces out the carrier and compares with the direct
/// exchange. Every mode is truncated at `d`.
pub fn gate_identity_check(tau: f64, d: usize, states: &[GateTestState], convention: CouplingConvention) -> Result<GateCheck> {
    if states.iter().any(|(a, b)| a.norm() > 1.0 || b.norm() > 1.0) {
        return Err(OracleError::Invalid("test states need coherent amplitude ≤ 1".into()));
    }
    if tau < 0.0 {
        return Err(OracleError::Invalid(format!("τ = {tau} must be non-negative")));
    }
    let mode = TruncatedMode::new(d)?;
    let xe = mode.x_eigen();
    let pe = mode.p_eigen();
    let lam = &xe.values;
    let n = d * d;
    let alpha = tau.sqrt();
    let eta = convention.identity_eta();

    // Carrier operator exp(−iθ s_r O) applied column-wise, s_r the A or B eigenvalue of column r.
    let gate = |psi: &DMatrix<C64>, basis: &HermitianEigen, theta: f64, use_b: bool| {
        let mut y = mul(&basis.vectors.adjoint(), psi);
        for r in 0..n {
            let s = if use_b { lam[r % d] } else { lam[r / d] };
            for (i, l) in basis.values.iter().enumerate() {
                y[(i, r)] *= C64::from_polar(1.0, -theta * s * l);
            }
        }
        mul(&basis.vectors, &y)
    };

    let mut deviations = vec![];
    let mut opposite_sign = vec![];
    for &(a, b) in states {
        let va = xe.vectors.adjoint() * mode.coherent(a);
        let vb = xe.vectors.adjoint() * mode.coherent(b);
        let ab: DVector<C64> = va.kronecker(&vb);
        // Ψ[f, r]: carrier amplitudes for each position-grid point r.
        let mut psi = DMatrix::<C64>::zeros(d, n);
        for r in 0..n {
            psi[(0, r)] = ab[r];
        }
        let seq: [(bool, f64); 4] = match convention {
            CouplingConvention::Appendix => [(true, 1.0), (false, 1.0), (true, -1.0), (false, -1.0)],
            CouplingConvention::MainText => [(false, 1.0), (true, 1.0), (false, -1.0), (true, -1.0)],
        };
        for (use_b, sign) in seq {
            let basis = if use_b { &pe } else { &xe };
            psi = gate(&psi, basis, sign * alpha, use_b);
        }
        let target = |s: f64| DVector::from_fn(n, |r, _| ab[r] * C64::from_polar(1.0, -s * eta * tau * lam[r / d] * lam[r % d]));
        deviations.push(distance_to_pure(&psi, &target(1.0)));
        opposite_sign.push(distance_to_pure(&psi, &target(-1.0)));
    }
    Ok(GateCheck { tau, dim: d, deviations, opposite_sign })
}

/// ½‖Tr_f|Ψ⟩⟨Ψ| − |t⟩⟨t|‖₁, evaluated on the span of the reduced vectors and t.
fn distance_to_pure(psi: &DMatrix<C64>, t: &DVector<C64>) -> f64 {
    let df = psi.nrows();
    let n = psi.ncols();
    let mut m = DMatrix::<C64>::zeros(n, df + 1);
    for f in 0..df {
        for r in 0..n {
            m[(r, f)] = psi[(f, r)];
        }
    }
    m.set_column(df, t);
    let r = m.qr().r();
    let k = r.nrows();
    let r1 = r.columns(0, df).into_owned();
    let rt = r.column(df).into_owned();
    let small = &r1 * r1.adjoint() - &rt * rt.adjoint();
    debug_assert_eq!(small.nrows(), k);
    crate::linalg::trace_norm(&small) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_is_exact() {
        let c = gate_identity_check(0.0, 16, &[(C64::new(0.0, 0.0), C64::new(0.0, 0.0))], CouplingConvention::Appendix).unwrap();
        assert!(c.max_deviation() < 1e-14);
    }

    #[test]
    fn rejects_bright_states() {
        assert!(gate_identity_check(0.1, 16, &[(C64::new(1.5, 0.0), C64::new(0.0, 0.0))], CouplingConvention::Appendix).is_err());
    }
}
