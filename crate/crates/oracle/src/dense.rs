//! Literal three-mode simulation of one exchange step, for small truncations.

use nalgebra::DMatrix;
use noisebound_core::gaussian::C64;
use noisebound_core::screen::CouplingConvention;

use crate::circuit::Circuit;
use crate::error::{OracleError, Result};
use crate::linalg::{embed, kron, mul, HermitianEigen};
use crate::mode::TruncatedMode;
use crate::state::FockState;

/// Dense three-mode dimension above which `dense_reduced_step` refuses to run.
pub const MAX_DENSE_DIM: usize = 400;

/// exp(−iθ·O₁⊗O₂) on modes (i, j) of `dims`.
fn two_body(theta: f64, o1: &DMatrix<C64>, i: usize, o2: &DMatrix<C64>, j: usize, dims: &[usize]) -> DMatrix<C64> {
    let h = mul(&embed(o1, i, dims), &embed(o2, j, dims));
    HermitianEigen::new(&h).propagator(theta)
}

/// ρ_ab ⊗ ρ_f → local rotation → carrier gates → screen → carrier gates → Tr_f,
/// with every operator built on the full product space.
pub fn dense_reduced_step(circuit: &Circuit, state: &FockState, tau: f64) -> Result<FockState> {
    let [da, db] = circuit.dims();
    let df = circuit.fc_dim();
    let dims = [da, db, df];
    if da * db * df > MAX_DENSE_DIM {
        return Err(OracleError::Invalid(format!("dense reference limited to {MAX_DENSE_DIM} states")));
    }
    let [ca, cb] = circuit.coupling_strengths();
    let alpha = tau.sqrt();
    let (ma, mb, mf) = (TruncatedMode::new(da)?, TruncatedMode::new(db)?, TruncatedMode::new(df)?);
    let a = ma.x_op() * C64::new(ca, 0.0);
    let b = mb.x_op() * C64::new(cb, 0.0);

    let rho_f = circuit.carrier_vectors().iter().fold(DMatrix::<C64>::zeros(df, df), |acc, v| acc + v * v.adjoint());
    let mut rho = kron(state.rho(), &rho_f);

    let [ha, hb] = circuit.local_hamiltonians();
    let hl = embed(ha, 0, &dims) + embed(hb, 1, &dims);
    let ul = HermitianEigen::new(&hl).propagator(tau);
    rho = &ul * rho * ul.adjoint();

    // e^{−iα A x}, e^{−iα B p} and their inverses.
    let ax = |s: f64| two_body(s * alpha, &a, 0, mf.x_op(), 2, &dims);
    let bp = |s: f64| two_body(s * alpha, &b, 1, mf.p_op(), 2, &dims);
    let (open, close) = match circuit.convention() {
        CouplingConvention::Appendix => (mul(&ax(1.0), &bp(1.0)), mul(&ax(-1.0), &bp(-1.0))),
        CouplingConvention::MainText => (mul(&bp(1.0), &ax(1.0)), mul(&bp(-1.0), &ax(-1.0))),
    };
    rho = &open * rho * open.adjoint();
    rho = circuit.kraus().iter().fold(DMatrix::zeros(rho.nrows(), rho.ncols()), |acc, k| {
        let kk = embed(k, 2, &dims);
        acc + &kk * &rho * kk.adjoint()
    });
    rho = &close * rho * close.adjoint();
    FockState::unchecked(rho, dims.to_vec())?.trace_last()
}
