//! Layered settings: command-line flags override the JSON config file, which
//! overrides built-in defaults.
//!
//! The config file is one flat JSON object whose keys are the long flag names
//! with `-` replaced by `_`. Keys a command does not use are ignored by that
//! command; keys no command knows are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;

use crate::CliError;

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "CHIRAL_ROUTER_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    /// `P_{1,4}` for a localized input.
    Localized,
    /// Mean superposition fidelity.
    Average,
    /// Worst-case superposition fidelity.
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureArg {
    Uniform,
    Haar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Csv,
    Json,
}

/// Every setting any command reads. All fields are optional; the defaults
/// below apply when neither a flag nor the file sets a value.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of outputs. Default 20 (`scan phase` 40, `scan weight` 50).
    pub n: Option<u64>,
    /// Link weight. Default 1.
    pub beta: Option<f64>,
    /// Chiral phase. Default 0 (`noise` and `optimize` 4.712).
    pub phi: Option<f64>,
    /// Dump the full graph instead of the reduced matrix. Default false.
    pub full: Option<bool>,
    /// Internal vertex of the input port in the full graph. Default 0.
    pub input_internal: Option<usize>,
    /// Internal vertex of the target port in the full graph. Default 1.
    pub output_internal: Option<usize>,

    /// Time axis. Default 0 to 50 in 501 points (`noise`: 0 to 10 in 201).
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub t_steps: Option<usize>,
    /// Parameter axis. Default phase `[0, 2π)` in 256 points, weight `[0, 40]`
    /// in 401 points.
    pub param_min: Option<f64>,
    pub param_max: Option<f64>,
    pub param_steps: Option<usize>,
    /// Default `localized` for `scan`, `average` for `optimize`.
    pub objective: Option<ObjectiveArg>,

    /// Superposition grid. Default 41 × 64, uniform.
    pub alpha_points: Option<usize>,
    pub chi_points: Option<usize>,
    pub measure: Option<MeasureArg>,
    /// Input superposition for `noise`. Default `α = 0.7`, `χ = 3π/2`.
    pub alpha: Option<f64>,
    pub chi: Option<f64>,

    /// Von Mises concentration. Default 12.5.
    pub k: Option<f64>,
    /// Starting quadrature size. Default 129.
    pub quadrature_points: Option<usize>,
    /// OU mean reversion. Default 1.
    pub theta: Option<f64>,
    /// OU volatility. Default 0.4.
    pub sigma: Option<f64>,
    /// OU long-time mean. Default: the router phase.
    pub mu: Option<f64>,
    /// OU step. Default 0.01.
    pub dt: Option<f64>,
    /// Default 2000.
    pub trajectories: Option<usize>,
    /// Default 0.
    pub seed: Option<u64>,

    /// Table row, `1`..`5` or `all`. Default `all`.
    pub row: Option<String>,
    /// Largest `n` for `verify-reduction`. Default 8.
    pub n_max: Option<u64>,
    /// Random configurations per `n`. Default 50.
    pub samples: Option<usize>,

    /// Starting point for `optimize`. Default `t = 18.55`, parameter = the
    /// router phase or weight.
    pub t_start: Option<f64>,
    pub param_start: Option<f64>,
    /// Refinement stops below this step. Default 1e-4.
    pub min_step: Option<f64>,

    /// Output file. Default standard output.
    pub output: Option<PathBuf>,
    /// `csv` or `json` for curves and surfaces. Default `csv`.
    pub format: Option<FormatArg>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// `flag`, else `file`, else `default`.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
