use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use intweight::kronecker::Strategy;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "intweight", version, about = "Single-weight superexpressive networks: bounds, weight searches, approximation and regression runs")]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Largest fixed-point precision, in fractional bits, before giving up.
    #[arg(long, global = true, default_value_t = 4096)]
    pub precision_cap: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyArg {
    Exhaustive,
    Random,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Exhaustive => Strategy::Exhaustive,
            StrategyArg::Random => Strategy::Random,
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Weight bound for N targets, or the regression schedule for a sample size.
    Bounds(BoundsArgs),
    /// Search a weight whose multiples of 2^(i/(N+1)) hit given torus targets.
    KronSearch(KronArgs),
    /// Build a network approximating a registry function in sup norm.
    Approximate(ApproxArgs),
    /// Least-squares fit of the weight to a dataset.
    Fit(FitArgs),
    /// Prediction error against sample size over several seeds.
    RateStudy(RateArgs),
    /// Quick end-to-end checks of known values.
    Selftest,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    /// Number of targets.
    #[arg(long = "N", value_name = "N", conflicts_with_all = ["n", "beta", "f_const", "d"])]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub targets: Option<usize>,
    /// Tolerance for the weight bound (decimal or a/b).
    #[arg(long, requires = "targets")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<String>,
    /// Sample size for the schedule.
    #[arg(long = "n", requires_all = ["beta", "f_const", "k_bound", "d"])]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    #[arg(long = "F")]
    #[serde(rename = "F", skip_serializing_if = "Option::is_none")]
    pub f_const: Option<f64>,
    #[arg(long = "K")]
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k_bound: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct KronArgs {
    /// Targets as a JSON array of decimals in [0, 1).
    #[arg(long, required_unless_present = "targets_file", conflicts_with = "targets_file")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub targets: Option<String>,
    /// File holding the JSON array of targets.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub targets_file: Option<PathBuf>,
    #[arg(long)]
    pub eps: String,
    /// Largest |q| to consider (default: the weight bound).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<String>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Exhaustive)]
    pub strategy: StrategyArg,
    /// Draws for the random strategy.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ApproxArgs {
    /// Registry entry such as `cosine:amp=0.5,freq=2`.
    #[arg(long)]
    pub function: String,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Smoothness exponent (default: the registry's class).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    #[arg(long = "F")]
    #[serde(rename = "F", skip_serializing_if = "Option::is_none")]
    pub f_const: Option<f64>,
    #[arg(long = "K")]
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k_bound: Option<f64>,
    #[arg(long)]
    pub eps: String,
    #[arg(long, default_value = "10000000")]
    pub cap: String,
    #[arg(long, value_enum, default_value_t = StrategyArg::Exhaustive)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Points per axis for the sup-error grid.
    #[arg(long, default_value_t = 1024)]
    pub resolution: u64,
    /// Also write `x1..xd,f,z` on a grid of `--plot-points` per axis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 257)]
    pub plot_points: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Dataset CSV with header `x1,...,xd,y`.
    #[arg(long, required_unless_present = "simulate", conflicts_with = "simulate")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Draw the dataset from a registry function plus standard normal noise.
    #[arg(long, requires_all = ["n", "d"])]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<String>,
    #[arg(long = "n")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Write the dataset used to this CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub save_data: Option<PathBuf>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k_bound: f64,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub mesh: u64,
    #[arg(long, default_value = "10000000")]
    pub cap: String,
    #[arg(long, value_enum, default_value_t = StrategyArg::Exhaustive)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct RateArgs {
    /// JSON configuration of the study.
    #[arg(long)]
    pub config: PathBuf,
    /// Also write the CSV table here.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}
