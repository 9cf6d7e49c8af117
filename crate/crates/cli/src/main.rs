use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod output;

use config::{ExperimentConfig, FormatArg, MeasureArg, ObjectiveArg, CONFIG_ENV};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameter values (exit 2).
    Usage(String),
    /// Anything else that stops a command (exit 1).
    Failed(String),
}

impl From<chiral_router::Error> for CliError {
    fn from(e: chiral_router::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

/// Chiral quantum-walk router: Hamiltonians, scans, noise curves and checks.
#[derive(Debug, Parser)]
#[command(name = "chiral-router", version)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Write results here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Phase,
    Weight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Vonmises,
    Ou,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RouterArgs {
    /// Number of outputs.
    #[arg(long)]
    pub n: Option<u64>,
    /// Weight of the modified link.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Chiral phase of the modified link.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AxisArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub t_steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub param_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub param_max: Option<f64>,
    #[arg(long)]
    pub param_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SuperpositionGridArgs {
    /// Points on the α axis of the averaging grid.
    #[arg(long)]
    pub alpha_points: Option<usize>,
    /// Points on the χ axis of the averaging grid.
    #[arg(long)]
    pub chi_points: Option<usize>,
    #[arg(long, value_enum)]
    pub measure: Option<MeasureArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the reduced or full Hamiltonian as JSON.
    Hamiltonian {
        #[command(flatten)]
        router: RouterArgs,
        /// Full 2(n+1)-vertex graph.
        #[arg(long, conflicts_with = "reduced")]
        full: bool,
        /// Reduced 6×6 matrix (default).
        #[arg(long)]
        reduced: bool,
        #[arg(long)]
        input_internal: Option<usize>,
        #[arg(long)]
        output_internal: Option<usize>,
    },
    /// Scan an objective over time and phase or weight; CSV `t,param,fidelity,p_wrong`.
    Scan {
        #[arg(value_enum)]
        kind: KindArg,
        #[command(flatten)]
        router: RouterArgs,
        #[command(flatten)]
        axes: AxisArgs,
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
        #[command(flatten)]
        grid: SuperpositionGridArgs,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Evaluate the high-fidelity configurations table; JSON report.
    Table1 {
        /// Row number 1..5 or `all`.
        #[arg(long)]
        row: Option<String>,
        #[command(flatten)]
        grid: SuperpositionGridArgs,
    },
    /// Fidelity against time under phase noise; CSV `t,fidelity,stderr`.
    Noise {
        #[arg(value_enum)]
        model: ModelArg,
        #[command(flatten)]
        router: RouterArgs,
        /// Weight of |1⟩ in the input superposition.
        #[arg(long)]
        alpha: Option<f64>,
        /// Relative phase of |2⟩ in the input superposition.
        #[arg(long, allow_hyphen_values = true)]
        chi: Option<f64>,
        /// Von Mises concentration.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        quadrature_points: Option<usize>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        t_steps: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Compare full-graph and reduced evolution for n = 2..=n_max.
    VerifyReduction {
        #[arg(long)]
        n_max: Option<u64>,
        /// Random (β, φ, t) per n.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Add this offset to one full-graph coupling before comparing.
        #[arg(long, hide = true, allow_hyphen_values = true)]
        inject_corruption: Option<f64>,
    },
    /// Locally maximize an objective in (t, phase) or (t, weight); JSON.
    Optimize {
        #[arg(value_enum)]
        kind: KindArg,
        #[command(flatten)]
        router: RouterArgs,
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
        #[command(flatten)]
        grid: SuperpositionGridArgs,
        #[arg(long)]
        t_start: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        param_start: Option<f64>,
        #[command(flatten)]
        axes: AxisArgs,
        #[arg(long)]
        min_step: Option<f64>,
    },
}

/// Rendered command output and whether the command's check passed.
pub struct Report {
    pub text: String,
    pub passed: bool,
}

impl Report {
    pub fn ok(text: String) -> Self {
        Self { text, passed: true }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let report = commands::dispatch(&cli.command, &cfg)?;
    match cli.output.or(cfg.output.clone()) {
        Some(path) => fs::write(&path, &report.text)
            .map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(report.text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
