//! The exchange circuit: local rotation, carrier gates, screen, carrier gates,
//! and a partial trace over the carrier.
//!
//! A and B are diagonal in the position eigenbasis of the truncated x_a ⊗ x_b,
//! so every carrier operation is conditioned on the row index r of ρ_ab and
//! the reduced step is ρ_rc → ρ_rc·T(r, c) with
//! T(r, c) = Σ_K Tr[Q_r K P_r ρ_f P_c† K† Q_c†]. T is the Gram matrix of the
//! carrier vectors Q_r K P_r |φ⟩, built with one GEMM per block of Kraus operators.

use nalgebra::{DMatrix, DVector};
use noisebound_core::gaussian::C64;
use noisebound_core::screen::CouplingConvention;

use crate::channel::OracleScreen;
use crate::error::{OracleError, Result};
use crate::linalg::{conjugate_mode, gemm, mul, HermitianEigen};
use crate::mode::TruncatedMode;
use crate::state::FockState;

/// Carrier-level population above which a step reports leakage.
pub const LEAKAGE_WARN: f64 = 1e-4;

const GRAM_BLOCK_ROWS: usize = 1024;

#[derive(Clone, Debug)]
struct Basis {
    values: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl From<HermitianEigen> for Basis {
    fn from(e: HermitianEigen) -> Self {
        Basis { values: e.values, vectors: e.vectors }
    }
}

impl Basis {
    /// V diag(e^{−iθλ}) V† v.
    fn apply_phase(&self, theta: f64, v: &DVector<C64>) -> DVector<C64> {
        let mut w = self.vectors.adjoint() * v;
        for (z, l) in w.iter_mut().zip(self.values.iter()) {
            *z *= C64::from_polar(1.0, -theta * l);
        }
        &self.vectors * w
    }
}

/// Exchange circuit for two truncated modes and a truncated carrier.
#[derive(Clone, Debug)]
pub struct Circuit {
    dims: [usize; 2],
    fc_dim: usize,
    kraus: Vec<DMatrix<C64>>,
    /// √p_l |φ_l⟩ for the eigen-decomposition of ρ_f.
    carrier: Vec<DVector<C64>>,
    coupling: [f64; 2],
    convention: CouplingConvention,
    local: [DMatrix<C64>; 2],
    dvr: [Basis; 2],
    fc_x: Basis,
    fc_p: Basis,
}

/// Multiplicative kernel of one exchange step in the position basis.
#[derive(Clone, Debug)]
pub struct ExchangeKernel {
    pub tau: f64,
    /// T(r, c), Hermitian with unit diagonal for trace-preserving screens.
    pub t: DMatrix<C64>,
    pub fc_edge_population: f64,
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: FockState,
    pub warnings: Vec<String>,
    pub fc_edge_population: f64,
    /// Population of the top two levels of modes a and b.
    pub edge_population: [f64; 2],
    pub min_eigenvalue: Option<f64>,
}

impl Circuit {
    /// Modes truncated at `dims`, carrier at `fc_dim` in its vacuum, and
    /// A = c_a x_a, B = c_b x_b with c_a c_b η_id = g.
    pub fn new(dims: [usize; 2], fc_dim: usize, screen: &OracleScreen, g: f64) -> Result<Self> {
        Self::with_kraus(dims, fc_dim, screen.kraus(fc_dim)?, g)
    }

    pub fn with_kraus(dims: [usize; 2], fc_dim: usize, kraus: Vec<DMatrix<C64>>, g: f64) -> Result<Self> {
        if kraus.iter().any(|k| k.nrows() != fc_dim || k.ncols() != fc_dim) {
            return Err(OracleError::Invalid(format!("Kraus operators must be {fc_dim}×{fc_dim}")));
        }
        let ma = TruncatedMode::new(dims[0])?;
        let mb = TruncatedMode::new(dims[1])?;
        let fc = TruncatedMode::new(fc_dim)?;
        let mut c = Circuit {
            dims,
            fc_dim,
            kraus,
            carrier: vec![],
            coupling: [1.0, 1.0],
            convention: CouplingConvention::Appendix,
            local: [ma.oscillator(), mb.oscillator()],
            dvr: [ma.x_eigen().into(), mb.x_eigen().into()],
            fc_x: fc.x_eigen().into(),
            fc_p: fc.p_eigen().into(),
        };
        c.set_coupling(g);
        c.set_carrier_state(&FockState::vacuum(&[fc_dim]))?;
        Ok(c)
    }

    fn set_coupling(&mut self, g: f64) {
        let s = g.abs().sqrt();
        let sign = if g * self.convention.identity_eta() < 0.0 { -1.0 } else { 1.0 };
        self.coupling = [s, sign * s];
    }

    pub fn with_convention(mut self, convention: CouplingConvention) -> Self {
        let g = self.coupling[0] * self.coupling[1] * self.convention.identity_eta();
        self.convention = convention;
        self.set_coupling(g);
        self
    }

    /// Explicit A = c_a x_a, B = c_b x_b.
    pub fn with_coupling_strengths(mut self, c_a: f64, c_b: f64) -> Self {
        self.coupling = [c_a, c_b];
        self
    }

    pub fn with_carrier_state(mut self, rho_f: &FockState) -> Result<Self> {
        self.set_carrier_state(rho_f)?;
        Ok(self)
    }

    fn set_carrier_state(&mut self, rho_f: &FockState) -> Result<()> {
        if rho_f.dims() != [self.fc_dim] {
            return Err(OracleError::Invalid(format!("carrier state must live on {} levels", self.fc_dim)));
        }
        let e = HermitianEigen::new(rho_f.rho());
        self.carrier = (0..self.fc_dim)
            .filter(|&k| e.values[k] > 1e-15)
            .map(|k| e.vectors.column(k).into_owned() * C64::new(e.values[k].sqrt(), 0.0))
            .collect();
        Ok(())
    }

    /// Local Hamiltonians in the Fock basis (default (x² + p²)/2 each).
    pub fn with_local(mut self, h_a: DMatrix<C64>, h_b: DMatrix<C64>) -> Result<Self> {
        if h_a.nrows() != self.dims[0] || h_b.nrows() != self.dims[1] {
            return Err(OracleError::Invalid("local Hamiltonian dimensions do not match the modes".into()));
        }
        self.local = [h_a, h_b];
        Ok(self)
    }

    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    pub fn fc_dim(&self) -> usize {
        self.fc_dim
    }

    pub fn coupling_strengths(&self) -> [f64; 2] {
        self.coupling
    }

    pub fn convention(&self) -> CouplingConvention {
        self.convention
    }

    pub fn kraus(&self) -> &[DMatrix<C64>] {
        &self.kraus
    }

    pub fn carrier_vectors(&self) -> &[DVector<C64>] {
        &self.carrier
    }

    pub fn local_hamiltonians(&self) -> &[DMatrix<C64>; 2] {
        &self.local
    }

    /// Eigenvalues of A and B on the position grid.
    pub fn eigenvalues(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.dvr[0].values.iter().map(|v| v * self.coupling[0]).collect(),
            self.dvr[1].values.iter().map(|v| v * self.coupling[1]).collect(),
        )
    }

    /// P = e^{−iαaX}e^{−iαbP} (appendix order) or e^{−iαbP}e^{−iαaX}.
    fn prepare(&self, alpha: f64, a: f64, b: f64, phi: &DVector<C64>) -> DVector<C64> {
        match self.convention {
            CouplingConvention::Appendix => self.fc_x.apply_phase(alpha * a, &self.fc_p.apply_phase(alpha * b, phi)),
            CouplingConvention::MainText => self.fc_p.apply_phase(alpha * b, &self.fc_x.apply_phase(alpha * a, phi)),
        }
    }

    /// (inner basis, inner eigenvalue selector, outer basis): Q_r applies the
    /// inner gate first. Selector 0 picks a, 1 picks b.
    fn closing_order(&self) -> (&Basis, usize, &Basis, usize) {
        match self.convention {
            CouplingConvention::Appendix => (&self.fc_p, 1, &self.fc_x, 0),
            CouplingConvention::MainText => (&self.fc_x, 0, &self.fc_p, 1),
        }
    }

    /// Single kernel entry for arbitrary eigenvalues and signed α = √τ.
    pub fn kernel_element(&self, alpha: f64, row: (f64, f64), col: (f64, f64)) -> C64 {
        let (inner, si, outer, so) = self.closing_order();
        let pick = |ab: (f64, f64), s: usize| if s == 0 { ab.0 } else { ab.1 };
        let close = |ab: (f64, f64), v: DVector<C64>| {
            outer.apply_phase(-alpha * pick(ab, so), &inner.apply_phase(-alpha * pick(ab, si), &v))
        };
        let mut total = C64::new(0.0, 0.0);
        for phi in &self.carrier {
            let pr = self.prepare(alpha, row.0, row.1, phi);
            let pc = self.prepare(alpha, col.0, col.1, phi);
            for k in &self.kraus {
                let wr = close(row, k * &pr);
                let wc = close(col, k * &pc);
                total += wc.dotc(&wr);
            }
        }
        total
    }

    /// T(r, c) for step τ on the full position grid.
    pub fn exchange_kernel(&self, tau: f64) -> Result<ExchangeKernel> {
        if !(tau >= 0.0) {
            return Err(OracleError::Invalid(format!("step τ = {tau} must be non-negative")));
        }
        let alpha = tau.sqrt();
        let (av, bv) = self.eigenvalues();
        let nb = bv.len();
        let n = av.len() * nb;
        let df = self.fc_dim;
        let ev = |r: usize| (av[r / nb], bv[r % nb]);
        let (inner, si, outer, so) = self.closing_order();
        let pick = |r: usize, s: usize| if s == 0 { ev(r).0 } else { ev(r).1 };
        let bridge = mul(&outer.vectors.adjoint(), &inner.vectors);
        let top: Vec<usize> = (df.saturating_sub(2)..df).collect();
        let outer_top = DMatrix::from_fn(top.len(), df, |i, j| outer.vectors[(top[i], j)]);

        let mut t = DMatrix::<C64>::zeros(n, n);
        let mut edge = vec![0.0_f64; n];
        let per_block = (GRAM_BLOCK_ROWS / df).max(1);
        for phi in &self.carrier {
            let mut prepared = DMatrix::<C64>::zeros(df, n);
            for r in 0..n {
                let (a, b) = ev(r);
                prepared.set_column(r, &self.prepare(alpha, a, b, phi));
            }
            for block in self.kraus.chunks(per_block) {
                let mut stacked = DMatrix::<C64>::zeros(block.len() * df, n);
                for (kb, k) in block.iter().enumerate() {
                    let mut y = mul(&mul(&inner.vectors.adjoint(), k), &prepared);
                    for r in 0..n {
                        let th = alpha * pick(r, si);
                        for (i, l) in inner.values.iter().enumerate() {
                            y[(i, r)] *= C64::from_polar(1.0, th * l);
                        }
                    }
                    let mut y = mul(&bridge, &y);
                    for r in 0..n {
                        let th = alpha * pick(r, so);
                        for (i, l) in outer.values.iter().enumerate() {
                            y[(i, r)] *= C64::from_polar(1.0, th * l);
                        }
                    }
                    let leak = mul(&outer_top, &y);
                    for r in 0..n {
                        edge[r] += leak.column(r).norm_squared();
                    }
                    stacked.view_mut((kb * df, 0), (df, n)).copy_from(&y);
                }
                t += gemm(&stacked, true, &stacked);
            }
        }
        // Gram[c, r] = ⟨w_c|w_r⟩ = T(r, c).
        t.transpose_mut();
        let fc_edge_population = edge.into_iter().fold(0.0, f64::max);
        Ok(ExchangeKernel { tau, t, fc_edge_population })
    }

    fn to_position(&self, u: &[DMatrix<C64>; 2], rho: &DMatrix<C64>) -> DMatrix<C64> {
        let dims = self.dims;
        conjugate_mode(&u[1], 1, &dims, &conjugate_mode(&u[0], 0, &dims, rho))
    }

    fn position_maps(&self) -> ([DMatrix<C64>; 2], [DMatrix<C64>; 2]) {
        let into = [self.dvr[0].vectors.adjoint(), self.dvr[1].vectors.adjoint()];
        let back = [self.dvr[0].vectors.clone(), self.dvr[1].vectors.clone()];
        (into, back)
    }

    fn local_in_position(&self, tau: f64) -> [DMatrix<C64>; 2] {
        [0, 1].map(|m| {
            let u = HermitianEigen::new(&self.local[m]).propagator(tau);
            let v = &self.dvr[m].vectors;
            v.adjoint() * u * v
        })
    }

    fn check_input(&self, state: &FockState) -> Result<()> {
        if state.dims() != self.dims {
            return Err(OracleError::Invalid(format!("state dims {:?} do not match circuit {:?}", state.dims(), self.dims)));
        }
        Ok(())
    }

    fn outcome(&self, rho: DMatrix<C64>, fc_edge: f64, check_positivity: bool) -> Result<StepOutcome> {
        let state = FockState::unchecked(rho, self.dims.to_vec())?;
        let edge_population = [state.edge_population(0, 2), state.edge_population(1, 2)];
        let mut warnings = vec![];
        if fc_edge > LEAKAGE_WARN {
            warnings.push(format!("carrier truncation leakage {fc_edge:.2e} exceeds {LEAKAGE_WARN:.0e}"));
        }
        for (m, e) in edge_population.iter().enumerate() {
            if *e > LEAKAGE_WARN {
                warnings.push(format!("mode {} truncation leakage {e:.2e} exceeds {LEAKAGE_WARN:.0e}", ["a", "b"][m]));
            }
        }
        let min_eigenvalue = check_positivity.then(|| state.min_eigenvalue());
        Ok(StepOutcome { state, warnings, fc_edge_population: fc_edge, edge_population, min_eigenvalue })
    }

    /// One exchange step of length τ, preceded by the local rotation.
    pub fn reduced_step(&self, state: &FockState, tau: f64) -> Result<StepOutcome> {
        self.check_input(state)?;
        let kernel = self.exchange_kernel(tau)?;
        let (into, back) = self.position_maps();
        let local = self.local_in_position(tau);
        let mut rho = self.to_position(&into, state.rho());
        rho = self.to_position(&local, &rho);
        rho.component_mul_assign(&kernel.t);
        rho = self.to_position(&back, &rho);
        self.outcome(rho, kernel.fc_edge_population, true)
    }

    /// n steps of length t/n.
    pub fn trotter_evolve(&self, state: &FockState, t: f64, n: usize) -> Result<StepOutcome> {
        let mut out = self.trotter_trajectory(state, t, n, n)?;
        Ok(out.pop().expect("trajectory ends at t").1)
    }

    /// Like `trotter_evolve`, recording the state every `every` steps
    /// (the initial state is not included).
    pub fn trotter_trajectory(&self, state: &FockState, t: f64, n: usize, every: usize) -> Result<Vec<(f64, StepOutcome)>> {
        self.check_input(state)?;
        if n == 0 || every == 0 {
            return Err(OracleError::Invalid("need at least one step".into()));
        }
        if !(t >= 0.0) {
            return Err(OracleError::Invalid(format!("evolution time {t} must be non-negative")));
        }
        let tau = t / n as f64;
        let kernel = self.exchange_kernel(tau)?;
        let (into, back) = self.position_maps();
        let local = self.local_in_position(tau);
        let mut rho = self.to_position(&into, state.rho());
        let mut out = vec![];
        for k in 1..=n {
            rho = self.to_position(&local, &rho);
            rho.component_mul_assign(&kernel.t);
            if k % every == 0 || k == n {
                let fock = self.to_position(&back, &rho);
                out.push((k as f64 * tau, self.outcome(fock, kernel.fc_edge_population, k == n)?));
            }
        }
        Ok(out)
    }
}
