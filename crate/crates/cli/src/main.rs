//! `noisebound`: classicality checks, covariance trajectories, noise-bound
//! tests, entanglement scans, Fock-space cross-checks and experiment budgets.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use noisebound_core::experiment::OmegaConvention;

use crate::error::{CliError, EXIT_USAGE};
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "noisebound", version, about = "Noise bounds for classically mediated two-oscillator couplings")]
pub struct Cli {
    /// PSD tolerance for classicality, physicality and PPT decisions.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// How `omega` in experiment configs is read; overrides the config file.
    #[arg(long, global = true, value_parser = parse_convention)]
    pub omega_convention: Option<OmegaConvention>,
    /// Write here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_convention(s: &str) -> Result<OmegaConvention, String> {
    s.parse().map_err(|e: noisebound_core::Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a displacement screen forbids entanglement at coupling g.
    CheckClassicality(ClassicalityArgs),
    /// Covariance trajectory γ(t) as a table.
    Simulate(SimulateArgs),
    /// Excess momentum noise rate against the 2|g| bound.
    NoiseTest(NoiseArgs),
    /// Entanglement onset as a function of screen strength.
    EntanglementScan(ScanArgs),
    /// Cross-check the Gaussian model against the truncated Fock-space circuit.
    OracleVerify(VerifyArgs),
    /// Budget an experiment from a config file, under both ω readings.
    PlanExperiment(PlanArgs),
}

/// Screen given inline as displacement variances or as a key-value file.
/// All variances zero is the identity screen.
#[derive(Debug, Args, Clone)]
pub struct ScreenArgs {
    #[arg(long, default_value_t = 0.0)]
    pub sxx: f64,
    #[arg(long, default_value_t = 0.0)]
    pub spp: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sxp: f64,
    /// Screen spec file (`family = identity|displacement|amplitude_damping`).
    #[arg(long, conflicts_with_all = ["sxx", "spp", "sxp"])]
    pub screen: Option<PathBuf>,
    /// Coupling g between the oscillators.
    #[arg(long, allow_hyphen_values = true)]
    pub g: f64,
}

#[derive(Debug, Args)]
pub struct ClassicalityArgs {
    #[arg(long)]
    pub sxx: f64,
    #[arg(long)]
    pub spp: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub sxp: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub g: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub screen: ScreenArgs,
    /// Initial covariance: `vacuum` or 16 comma-separated entries, row-major.
    #[arg(long, default_value = "vacuum")]
    pub gamma0: String,
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub screen: ScreenArgs,
    #[arg(long, default_value = "vacuum")]
    pub gamma0: String,
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Mechanical damping rate in units of ω; adds a thermal bath.
    #[arg(long, requires = "nbar")]
    pub kappa: Option<f64>,
    /// Bath occupation for --kappa.
    #[arg(long, requires = "kappa")]
    pub nbar: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub g: f64,
    /// Smallest screen strength, as σ/|g|.
    #[arg(long, default_value_t = 0.0)]
    pub c_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c_max: f64,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
    /// Ratio σ_pp/σ_xx of the kick variances at fixed determinant.
    #[arg(long, default_value_t = 1.0)]
    pub anisotropy: f64,
    /// Random separable starts per strength, in addition to the vacuum.
    #[arg(long, default_value_t = 0)]
    pub starts: usize,
    #[arg(long, default_value_t = 50.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    /// Trotterized circuit covariance against Gaussian propagation.
    Trotter,
    /// Four carrier gates against the direct exchange.
    Gate,
    /// Effective coupling of the identity screen.
    Coupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Order {
    #[default]
    Appendix,
    MainText,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Check::Trotter)]
    pub check: Check,
    #[arg(long, value_enum, default_value_t = Order::Appendix)]
    pub order: Order,
    /// Displacement screens as `sxx,spp,sxp`; repeatable.
    #[arg(long = "sigma", value_delimiter = ';')]
    pub sigmas: Vec<String>,
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    pub g: f64,
    /// Truncation of each oscillator.
    #[arg(long, default_value_t = 12)]
    pub dim: usize,
    /// Truncation of the force carrier.
    #[arg(long, default_value_t = 20)]
    pub fc_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32, 64])]
    pub steps: Vec<usize>,
    /// Gate step τ for `--check gate`.
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Truncations swept by `--check gate`.
    #[arg(long, value_delimiter = ',', default_values_t = [6, 8, 10, 12, 16, 20, 25])]
    pub dims: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// `key = value` or JSON experiment config.
    #[arg(long)]
    pub config: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let kind = match &e {
                CliError::Usage(_) => "usage error",
                _ if code == error::EXIT_PHYSICS => "physics constraint rejected",
                _ => "error",
            };
            eprintln!("noisebound: {kind}: {e}");
            ExitCode::from(code as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn negative_coupling_parses() {
        let cli = Cli::try_parse_from(["noisebound", "check-classicality", "--sxx", "1", "--spp", "1", "--g", "-0.5"]).unwrap();
        match cli.command {
            Command::CheckClassicality(a) => assert_eq!(a.g, -0.5),
            _ => unreachable!(),
        }
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["noisebound", "noise-test", "--g", "0.2", "--format", "json", "--tol", "1e-8"]).unwrap();
        assert_eq!(cli.format, Some(Format::Json));
        assert_eq!(cli.tol, 1e-8);
    }
}
