//! Generator coefficients from the adjoint channel, evaluated in ρ_f.
//!
//! Writing the reduced step in the joint eigenbasis of A and B, the kernel
//! multiplying ρ_rc expands as 1 + √τ·L₁ + τ·L₂ + …, with L₂ a quadratic form
//! in the row eigenvalues (a, b) and column eigenvalues (a', b'). Its
//! coefficients are expectations of products of x, p and their images under
//! S† in the carrier state. The map to the generator is
//!
//!   ν_a = −2 Im c[a²],  Y_xx = −4 Re c[a²]
//!   ν_b = −2 Im c[b²],  Y_pp = −4 Re c[b²]
//!   η   = −Im c[ab],    Y_xp = −2 Re c[ab]
//!   ξ   =  Im c[ab']
//!
//! where ξ multiplies i(ab' − a'b), the part of the kernel that makes the
//! two back-actions unequal.

use nalgebra::{DMatrix, Matrix2};
use noisebound_core::gaussian::C64;
use noisebound_core::screen::{CouplingConvention, ScreenMoments, CONVERGENCE_TOL};

use crate::channel::OracleScreen;
use crate::error::{OracleError, Result};
use crate::linalg::{max_abs, mul};
use crate::mode::TruncatedMode;
use crate::state::FockState;

/// Second-order kernel coefficients, indexed by monomial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelCoefficients {
    pub aa: C64,
    pub a2a2: C64,
    pub aa2: C64,
    pub bb: C64,
    pub b2b2: C64,
    pub bb2: C64,
    pub ab: C64,
    pub a2b2: C64,
    pub ab2: C64,
    pub a2b: C64,
}

impl KernelCoefficients {
    /// Monomials in the order of the fields, for row eigenvalues (a, b) and
    /// column eigenvalues (a2, b2).
    pub fn monomials(a: f64, b: f64, a2: f64, b2: f64) -> [f64; 10] {
        [a * a, a2 * a2, a * a2, b * b, b2 * b2, b * b2, a * b, a2 * b2, a * b2, a2 * b]
    }

    pub fn from_array(c: [C64; 10]) -> Self {
        KernelCoefficients {
            aa: c[0],
            a2a2: c[1],
            aa2: c[2],
            bb: c[3],
            b2b2: c[4],
            bb2: c[5],
            ab: c[6],
            a2b2: c[7],
            ab2: c[8],
            a2b: c[9],
        }
    }

    pub fn to_array(&self) -> [C64; 10] {
        [self.aa, self.a2a2, self.aa2, self.bb, self.b2b2, self.bb2, self.ab, self.a2b2, self.ab2, self.a2b]
    }

    pub fn evaluate(&self, a: f64, b: f64, a2: f64, b2: f64) -> C64 {
        Self::monomials(a, b, a2, b2).iter().zip(self.to_array()).map(|(m, c)| c * *m).sum()
    }

    pub fn moments(&self, mean_shift: [f64; 2]) -> ScreenMoments {
        ScreenMoments {
            nu_a: -2.0 * self.aa.im,
            nu_b: -2.0 * self.bb.im,
            eta: -self.ab.im,
            xi: self.ab2.im,
            y: Matrix2::new(-4.0 * self.aa.re, -2.0 * self.ab.re, -2.0 * self.ab.re, -4.0 * self.bb.re),
            mean_shift: Some(mean_shift),
        }
    }
}

/// Oracle evaluation of a screen's generator coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericMoments {
    pub moments: ScreenMoments,
    pub coefficients: KernelCoefficients,
    /// ⟨S†(x) − x⟩ and ⟨S†(p) − p⟩ in ρ_f.
    pub mean_shift: [f64; 2],
    /// max |Σ K†K − I| on the truncated carrier.
    pub completeness_defect: f64,
    /// Population of the top two carrier levels after the screen.
    pub edge_population: f64,
}

impl NumericMoments {
    /// First moments preserved within `CONVERGENCE_TOL`.
    pub fn converges(&self) -> bool {
        self.mean_shift.iter().all(|m| m.abs() <= CONVERGENCE_TOL)
    }
}

fn adjoint(kraus: &[DMatrix<C64>], op: &DMatrix<C64>) -> DMatrix<C64> {
    kraus.iter().fold(DMatrix::zeros(op.nrows(), op.ncols()), |acc, k| acc + mul(&k.adjoint(), &mul(op, k)))
}

/// Evaluates the kernel coefficients and derived moments of `screen` in the
/// carrier state `rho_f`.
pub fn moments_numeric(screen: &OracleScreen, rho_f: &FockState, convention: CouplingConvention) -> Result<NumericMoments> {
    if rho_f.dims().len() != 1 {
        return Err(OracleError::Invalid("carrier state must be single-mode".into()));
    }
    let dim = rho_f.dims()[0];
    let kraus = screen.kraus(dim)?;
    moments_from_kraus(&kraus, rho_f, convention)
}

pub fn moments_from_kraus(kraus: &[DMatrix<C64>], rho_f: &FockState, convention: CouplingConvention) -> Result<NumericMoments> {
    let dim = rho_f.dims()[0];
    let mode = TruncatedMode::new(dim)?;
    let x = mode.x_op();
    let p = mode.p_op();
    let xx = x * x;
    let pp = p * p;
    let xp = x * p;
    let px = p * x;
    let sx = adjoint(kraus, x);
    let sp = adjoint(kraus, p);
    let sxx = adjoint(kraus, &xx);
    let spp = adjoint(kraus, &pp);
    let sxp = adjoint(kraus, &xp);
    let spx = adjoint(kraus, &px);
    let e = |m: &DMatrix<C64>| rho_f.expect(m);

    let aa = e(&(&sx * x)) - e(&sxx) * 0.5 - e(&xx) * 0.5;
    let a2a2 = -e(&sxx) * 0.5 + e(&(x * &sx)) - e(&xx) * 0.5;
    let aa2 = -e(&(&sx * x)) + e(&sxx) - e(&(x * &sx)) + e(&xx);
    let bb = e(&(&sp * p)) - e(&spp) * 0.5 - e(&pp) * 0.5;
    let b2b2 = -e(&spp) * 0.5 + e(&(p * &sp)) - e(&pp) * 0.5;
    let bb2 = -e(&(&sp * p)) + e(&spp) - e(&(p * &sp)) + e(&pp);
    let (ab, a2b2) = match convention {
        CouplingConvention::Appendix => (
            e(&(&sp * x)) + e(&(&sx * p)) - e(&sxp) - e(&xp),
            -e(&spx) + e(&(p * &sx)) - e(&px) + e(&(x * &sp)),
        ),
        CouplingConvention::MainText => (
            e(&(&sp * x)) - e(&spx) + e(&(&sx * p)) - e(&px),
            -e(&sxp) + e(&(p * &sx)) + e(&(x * &sp)) - e(&xp),
        ),
    };
    let ab2 = -e(&(&sp * x)) + e(&spx) - e(&(p * &sx)) + e(&px);
    let a2b = -e(&(&sx * p)) + e(&sxp) - e(&(x * &sp)) + e(&xp);
    let coefficients = KernelCoefficients { aa, a2a2, aa2, bb, b2b2, bb2, ab, a2b2, ab2, a2b };

    let mean_shift = [(e(&sx) - e(x)).re, (e(&sp) - e(p)).re];
    let sum = kraus.iter().fold(DMatrix::<C64>::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
    let completeness_defect = max_abs(&(sum - DMatrix::<C64>::identity(dim, dim)));
    let out = kraus.iter().fold(DMatrix::<C64>::zeros(dim, dim), |acc, k| acc + k * rho_f.rho() * k.adjoint());
    let edge_population = (dim.saturating_sub(2)..dim).map(|n| out[(n, n)].re).sum();
    Ok(NumericMoments { moments: coefficients.moments(mean_shift), coefficients, mean_shift, completeness_defect, edge_population })
}

/// Rescales moments computed for A = x_a, B = x_b to A = c_a x_a, B = c_b x_b.
pub fn scale_moments(m: &ScreenMoments, c_a: f64, c_b: f64) -> ScreenMoments {
    ScreenMoments {
        nu_a: m.nu_a * c_a * c_a,
        nu_b: m.nu_b * c_b * c_b,
        eta: m.eta * c_a * c_b,
        xi: m.xi * c_a * c_b,
        y: Matrix2::new(m.y[(0, 0)] * c_a * c_a, m.y[(0, 1)] * c_a * c_b, m.y[(1, 0)] * c_a * c_b, m.y[(1, 1)] * c_b * c_b),
        mean_shift: m.mean_shift,
    }
}
