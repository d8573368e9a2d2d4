use std::path::Path;

use nalgebra::{Matrix2, Matrix4};
use noisebound_core::dynamics::{build_dynamics_with, GaussianDynamics};
use noisebound_core::entanglement::{entanglement_onset_with, log_negativity, ppt_margin, OnsetOptions};
use noisebound_core::experiment::{plan_experiment, ExperimentConfig};
use noisebound_core::gaussian::Tolerances;
use noisebound_core::noise::run_noise_test;
use noisebound_core::sampling::{random_separable, rng};
use noisebound_core::screen::{is_classical, is_classical_by_determinant};
use noisebound_core::{CouplingConvention, CovarianceMatrix, DisplacementScreen, ScreenMoments, ScreenSpec};
use noisebound_oracle::{
    covariance_of, fit_identity_coupling, gate_identity_check, moments_numeric, scale_moments, Circuit, CouplingFitOptions,
    FockState, OracleScreen,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{document, emit, table, Format};
use crate::{Check, Cli, Command, Order, ScreenArgs};

pub const DAMPING_LABEL: &str =
    "beyond-paper modeling: drift -= kappa/2 I, diffusion += kappa (2 nbar + 1) I on both oscillators";

pub fn run(cli: &Cli) -> CliResult<()> {
    let tol = Tolerances::with_psd(cli.tol);
    if !(cli.tol.is_finite() && cli.tol >= 0.0) {
        return Err(CliError::Usage(format!("--tol must be a non-negative number, got {}", cli.tol)));
    }
    let out = cli.output.as_deref();
    match &cli.command {
        Command::CheckClassicality(a) => {
            let screen = DisplacementScreen::new(a.sxx, a.spp, a.sxp)?;
            let y = screen.covariance() * 2.0;
            let report = is_classical(&y, a.g, &tol);
            let row = ClassicalityRow {
                verdict: if report.classical { "classical" } else { "non-classical" },
                min_eigenvalue: report.min_eigenvalue,
                determinant_route: is_classical_by_determinant(&y, a.g, &tol),
                g: a.g,
                y_xx: y[(0, 0)],
                y_pp: y[(1, 1)],
                y_xp: y[(0, 1)],
            };
            let text = match cli.format.unwrap_or(Format::Json) {
                Format::Json => document(&row)?,
                Format::Csv => table(&[row], Format::Csv)?,
            };
            emit(out, &text)
        }
        Command::Simulate(a) => {
            let dynamics = dynamics_for(&a.screen, &tol)?;
            let gamma0 = parse_gamma0(&a.gamma0, &tol)?;
            let rows = simulate(&dynamics, &gamma0, a.t_max, a.grid, &tol)?;
            emit(out, &table(&rows, cli.format.unwrap_or(Format::Csv))?)
        }
        Command::NoiseTest(a) => {
            let mut dynamics = dynamics_for(&a.screen, &tol)?;
            let damping = a.kappa.zip(a.nbar);
            if let Some((kappa, nbar)) = damping {
                dynamics = dynamics.with_thermal_damping(kappa, nbar)?;
                eprintln!("noisebound: {DAMPING_LABEL}");
            }
            let gamma0 = parse_gamma0(&a.gamma0, &tol)?;
            let report = run_noise_test(&dynamics, &gamma0, a.t_max, a.grid)?;
            let damped = damping.map(|(k, _)| report.damped_statistic(k));
            let rows: Vec<NoiseCsvRow> = report
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| NoiseCsvRow {
                    time: r.time,
                    excess: r.excess,
                    rate: r.rate,
                    anchored_rate: r.anchored_rate,
                    damped_statistic: damped.as_ref().map(|d| d[i]),
                    bound: r.bound,
                    verdict: r.verdict,
                })
                .collect();
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => table(&rows, Format::Csv)?,
                Format::Json => document(&NoiseDocument {
                    g: report.g,
                    bound: report.bound,
                    tol_rate: report.tol_rate,
                    all_pass: report.all_pass(),
                    model: damping.map(|_| DAMPING_LABEL),
                    rows,
                })?,
            };
            emit(out, &text)
        }
        Command::EntanglementScan(a) => {
            let rows = entanglement_scan(a, cli.seed, &tol)?;
            emit(out, &table(&rows, cli.format.unwrap_or(Format::Csv))?)
        }
        Command::OracleVerify(a) => {
            let convention = match a.order {
                Order::Appendix => CouplingConvention::Appendix,
                Order::MainText => CouplingConvention::MainText,
            };
            let text = match a.check {
                Check::Trotter => table(&verify_trotter(a, convention, &tol)?, cli.format.unwrap_or(Format::Csv))?,
                Check::Gate => table(&verify_gate(a, convention)?, cli.format.unwrap_or(Format::Csv))?,
                Check::Coupling => table(&verify_coupling(a, convention)?, cli.format.unwrap_or(Format::Csv))?,
            };
            emit(out, &text)
        }
        Command::PlanExperiment(a) => {
            let mut config = ExperimentConfig::parse(&read(&a.config)?)?;
            if let Some(c) = cli.omega_convention {
                config = config.with_convention(c);
            }
            let plan = plan_experiment(&config)?;
            let text = match cli.format.unwrap_or(Format::Json) {
                Format::Json => document(&plan)?,
                Format::Csv => table(&[plan.hz_cycles, plan.rad_s], Format::Csv)?,
            };
            emit(out, &text)
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

#[derive(Serialize)]
struct ClassicalityRow {
    verdict: &'static str,
    min_eigenvalue: f64,
    determinant_route: bool,
    g: f64,
    y_xx: f64,
    y_pp: f64,
    y_xp: f64,
}

/// Screen moments with the noise Y fixed by the screen and coupling set to g.
pub fn screen_moments(args: &ScreenArgs) -> CliResult<ScreenMoments> {
    let convention = CouplingConvention::Appendix;
    let moments = match &args.screen {
        None => DisplacementScreen::new(args.sxx, args.spp, args.sxp)?.moments(convention),
        Some(path) => {
            let spec = ScreenSpec::parse(&read(path)?)?;
            match spec.closed_form_moments(convention) {
                Some(m) => m,
                None => {
                    let oracle = OracleScreen::from_spec(&spec)?;
                    let dim = match spec {
                        ScreenSpec::AmplitudeDamping { dim, .. } => dim,
                        _ => 20,
                    };
                    moments_numeric(&oracle, &FockState::vacuum(&[dim]), convention)?.moments
                }
            }
        }
    };
    Ok(moments.with_coupling(args.g))
}

fn dynamics_for(args: &ScreenArgs, tol: &Tolerances) -> CliResult<GaussianDynamics> {
    Ok(build_dynamics_with(&screen_moments(args)?, true, tol)?)
}

fn parse_gamma0(text: &str, tol: &Tolerances) -> CliResult<CovarianceMatrix> {
    if text.trim() == "vacuum" {
        return Ok(CovarianceMatrix::vacuum());
    }
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--gamma0: {e}")))?;
    if values.len() != 16 {
        return Err(CliError::Usage(format!("--gamma0 needs 16 entries, got {}", values.len())));
    }
    let gamma = CovarianceMatrix::new_with(Matrix4::from_row_slice(&values), tol)?;
    let report = gamma.validate(tol);
    if !report.passed {
        return Err(noisebound_core::Error::Unphysical { min_eigenvalue: report.min_eigenvalue }.into());
    }
    Ok(gamma)
}

#[derive(Serialize)]
struct SimulateRow {
    t: f64,
    g11: f64,
    g12: f64,
    g13: f64,
    g14: f64,
    g22: f64,
    g23: f64,
    g24: f64,
    g33: f64,
    g34: f64,
    g44: f64,
    uncertainty_min_eigenvalue: f64,
    ppt_margin: f64,
    log_negativity: f64,
}

fn simulate(
    dynamics: &GaussianDynamics,
    gamma0: &CovarianceMatrix,
    t_max: f64,
    grid: usize,
    tol: &Tolerances,
) -> CliResult<Vec<SimulateRow>> {
    if grid < 2 || !(t_max.is_finite() && t_max > 0.0) {
        return Err(CliError::Usage("--grid must be ≥ 2 and --t-max positive".into()));
    }
    let h = t_max / (grid - 1) as f64;
    let step = dynamics.propagator(h)?;
    let mut gamma = gamma0.clone();
    let mut rows = Vec::with_capacity(grid);
    for k in 0..grid {
        if k > 0 {
            gamma = step.apply(&gamma);
        }
        let m = gamma.matrix();
        rows.push(SimulateRow {
            t: k as f64 * h,
            g11: m[(0, 0)],
            g12: m[(0, 1)],
            g13: m[(0, 2)],
            g14: m[(0, 3)],
            g22: m[(1, 1)],
            g23: m[(1, 2)],
            g24: m[(1, 3)],
            g33: m[(2, 2)],
            g34: m[(2, 3)],
            g44: m[(3, 3)],
            uncertainty_min_eigenvalue: gamma.validate(tol).min_eigenvalue,
            ppt_margin: ppt_margin(m),
            log_negativity: log_negativity(&gamma),
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct NoiseCsvRow {
    time: f64,
    excess: f64,
    rate: f64,
    anchored_rate: f64,
    damped_statistic: Option<f64>,
    bound: f64,
    verdict: bool,
}

#[derive(Serialize)]
struct NoiseDocument {
    g: f64,
    bound: f64,
    tol_rate: f64,
    all_pass: bool,
    model: Option<&'static str>,
    rows: Vec<NoiseCsvRow>,
}

#[derive(Serialize)]
struct ScanRow {
    strength: f64,
    sigma_xx: f64,
    sigma_pp: f64,
    classical: bool,
    min_eigenvalue: f64,
    onset_vacuum: Option<f64>,
    onset_earliest_random: Option<f64>,
    log_negativity_final: f64,
}

fn entanglement_scan(a: &crate::ScanArgs, seed: u64, tol: &Tolerances) -> CliResult<Vec<ScanRow>> {
    if a.points < 1 || a.c_min < 0.0 || a.c_max < a.c_min || a.anisotropy <= 0.0 {
        return Err(CliError::Usage("need points ≥ 1, 0 ≤ c-min ≤ c-max and positive anisotropy".into()));
    }
    let mut r = rng(seed);
    let starts: Vec<CovarianceMatrix> = (0..a.starts).map(|_| random_separable(&mut r)).collect();
    let opts = OnsetOptions { margin: tol.psd.max(noisebound_core::entanglement::PPT_MARGIN), ..Default::default() };
    let mut rows = vec![];
    for k in 0..a.points {
        let c = if a.points == 1 { a.c_min } else { a.c_min + (a.c_max - a.c_min) * k as f64 / (a.points - 1) as f64 };
        let s = c * a.g.abs();
        let (sxx, spp) = (s / a.anisotropy.sqrt(), s * a.anisotropy.sqrt());
        let y = Matrix2::new(2.0 * sxx, 0.0, 0.0, 2.0 * spp);
        let dynamics = build_dynamics_with(&ScreenMoments::from_noise(y, a.g), true, tol)?;
        let report = is_classical(&y, a.g, tol);
        let vacuum = CovarianceMatrix::vacuum();
        let onset_vacuum = entanglement_onset_with(&dynamics, &vacuum, a.t_max, a.grid, &opts)?;
        let mut earliest: Option<f64> = None;
        for start in &starts {
            if let Some(t) = entanglement_onset_with(&dynamics, start, a.t_max, a.grid, &opts)? {
                earliest = Some(earliest.map_or(t, |e| e.min(t)));
            }
        }
        let final_state = dynamics.propagator(a.t_max)?.apply(&vacuum);
        rows.push(ScanRow {
            strength: c,
            sigma_xx: sxx,
            sigma_pp: spp,
            classical: report.classical,
            min_eigenvalue: report.min_eigenvalue,
            onset_vacuum,
            onset_earliest_random: earliest,
            log_negativity_final: log_negativity(&final_state),
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct TrotterRow {
    sigma_xx: f64,
    sigma_pp: f64,
    sigma_xp: f64,
    g: f64,
    dim: usize,
    steps: usize,
    max_deviation: f64,
    edge_population: f64,
    carrier_edge_population: f64,
    min_eigenvalue: Option<f64>,
}

fn parse_sigma(s: &str) -> CliResult<DisplacementScreen> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--sigma `{s}`: {e}")))?;
    match v[..] {
        [xx, pp] => Ok(DisplacementScreen::new(xx, pp, 0.0)?),
        [xx, pp, xp] => Ok(DisplacementScreen::new(xx, pp, xp)?),
        _ => Err(CliError::Usage(format!("--sigma `{s}` needs sxx,spp[,sxp]"))),
    }
}

fn verify_trotter(a: &crate::VerifyArgs, convention: CouplingConvention, tol: &Tolerances) -> CliResult<Vec<TrotterRow>> {
    let screens: Vec<DisplacementScreen> = if a.sigmas.is_empty() {
        vec![DisplacementScreen::symmetric(0.1)?, DisplacementScreen::new(0.15, 0.2, 0.05)?]
    } else {
        a.sigmas.iter().map(|s| parse_sigma(s)).collect::<CliResult<_>>()?
    };
    let d = a.dim;
    let mut rows = vec![];
    for s in screens {
        let circuit = Circuit::new([d, d], a.fc_dim, &OracleScreen::Displacement(s), a.g)?.with_convention(convention);
        let [ca, cb] = circuit.coupling_strengths();
        let dynamics = build_dynamics_with(&scale_moments(&s.moments(convention), ca, cb), true, tol)?;
        let exact = dynamics.propagator(a.t)?.apply(&CovarianceMatrix::vacuum());
        let start = FockState::vacuum(&[d, d]);
        for &n in &a.steps {
            let out = circuit.trotter_evolve(&start, a.t, n)?;
            let dev = (covariance_of(&out.state)?.matrix() - exact.matrix()).abs().max();
            rows.push(TrotterRow {
                sigma_xx: s.sigma_uu,
                sigma_pp: s.sigma_vv,
                sigma_xp: s.sigma_uv,
                g: a.g,
                dim: d,
                steps: n,
                max_deviation: dev,
                edge_population: out.edge_population[0].max(out.edge_population[1]),
                carrier_edge_population: out.fc_edge_population,
                min_eigenvalue: out.min_eigenvalue,
            });
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct GateRow {
    dim: usize,
    tau: f64,
    max_deviation: f64,
    opposite_sign_min: f64,
}

fn verify_gate(a: &crate::VerifyArgs, convention: CouplingConvention) -> CliResult<Vec<GateRow>> {
    let c = |re: f64, im: f64| noisebound_core::gaussian::C64::new(re, im);
    let states = [(c(0.0, 0.0), c(0.0, 0.0)), (c(0.3, 0.1), c(-0.2, 0.2)), (c(0.0, 0.5), c(0.4, 0.0))];
    a.dims
        .iter()
        .map(|&d| {
            let check = gate_identity_check(a.tau, d, &states, convention)?;
            Ok(GateRow {
                dim: d,
                tau: a.tau,
                max_deviation: check.max_deviation(),
                opposite_sign_min: check.opposite_sign.iter().copied().fold(f64::INFINITY, f64::min),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct CouplingRow {
    steps: String,
    eta: f64,
    residual: Option<f64>,
}

fn verify_coupling(a: &crate::VerifyArgs, convention: CouplingConvention) -> CliResult<Vec<CouplingRow>> {
    let mut opts = CouplingFitOptions { dim: a.dim, convention, t_max: 2.0 * a.t, ..Default::default() };
    if a.steps.len() == 3 {
        opts.steps = [a.steps[0], a.steps[1], a.steps[2]];
    }
    let fit = fit_identity_coupling(&opts)?;
    let mut rows: Vec<CouplingRow> =
        fit.per_steps.iter().map(|&(n, eta, res)| CouplingRow { steps: n.to_string(), eta, residual: Some(res) }).collect();
    rows.push(CouplingRow { steps: "extrapolated".into(), eta: fit.extrapolated, residual: None });
    Ok(rows)
}
