use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use glmsel::GlmFamily;

#[derive(Debug, Parser)]
#[command(name = "glmsel", version, about = "Empirical-prior Bayesian variable selection for sparse GLMs")]
pub struct Cli {
    /// Worker threads for chains and replications (default: all CPUs).
    #[arg(long, global = true, env = "GLMSEL_THREADS")]
    pub threads: Option<usize>,

    /// Print progress and summaries on standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the model posterior for a CSV data set.
    Fit(FitArgs),
    /// Run a simulation experiment described by a TOML config.
    Simulate(SimulateArgs),
    /// Evaluate design and misspecification diagnostics for a known truth.
    Diagnose(DiagnoseArgs),
    /// Cross-check the Laplace approximation and the sampler on a data set.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column; every other column is a covariate.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// logistic or poisson.
    #[arg(long)]
    pub family: GlmFamily,
}

/// Prior settings; unset flags fall back to the config file, then defaults.
#[derive(Debug, Args, Default, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorArgs {
    /// Largest model size (default: min(n, p, 10)).
    #[arg(long)]
    pub s_max: Option<usize>,
    /// Likelihood fraction (default 0.999).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Slab precision scale (default 1e-3).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Size-penalty exponent (default 0.05).
    #[arg(long)]
    pub a4: Option<f64>,
    /// Exponent used only by the hyperparameter check (default 0).
    #[arg(long)]
    pub a7: Option<f64>,
}

#[derive(Debug, Args, Default, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainArgs {
    /// Iterations per chain, burn-in included (default 50000).
    #[arg(long)]
    pub iters: Option<usize>,
    /// Burn-in iterations (default iters/10).
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Independent chains (default 1).
    #[arg(long)]
    pub chains: Option<usize>,
    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial support as comma-separated 0-based indices (default: empty model).
    #[arg(long)]
    pub init: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// TOML file with [hyperparams] and [chain] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of models listed in the report.
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    /// Assumed true model size for the hyperparameter check.
    #[arg(long)]
    pub s0_hint: Option<usize>,
    #[arg(long, default_value = "fit_report.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML experiment description.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "simulate_report.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// True coefficients: a JSON array or numbers separated by commas/whitespace.
    #[arg(long)]
    pub theta0: PathBuf,
    /// Support to diagnose (repeatable; default: the support of θ₀).
    #[arg(long = "support")]
    pub supports: Vec<String>,
    /// Sparsity levels for the compatibility numbers (repeatable).
    #[arg(long = "s-level", default_values_t = [1usize, 2])]
    pub s_levels: Vec<usize>,
    /// Random starts for the cubic-moment lower bound.
    #[arg(long, default_value_t = 20)]
    pub k_cubic_starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "diagnose_report.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Supports for the Laplace-vs-Monte-Carlo check (repeatable; default:
    /// the most visited models of a chain run).
    #[arg(long = "support")]
    pub supports: Vec<String>,
    /// Number of chain models to check when no support is given.
    #[arg(long, default_value_t = 5)]
    pub models: usize,
    /// Slab precision scale used in the Laplace-vs-Monte-Carlo check.
    #[arg(long, default_value_t = 1.0)]
    pub mc_lambda: f64,
    #[arg(long, default_value_t = 10_000)]
    pub mc_draws: usize,
    /// Allowed total-variation distance between chain and enumeration.
    #[arg(long, default_value_t = 0.05)]
    pub tv_tol: f64,
    /// Optional JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
