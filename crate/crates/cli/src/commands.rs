//! Subcommand implementations. Each returns a report value; writing and
//! exit-status mapping happen in [`run`].

use std::path::Path;

use glmsel::diagnostics::{self, DiagnosticsOptions, DiagnosticsReport};
use glmsel::marginal::{log_laplace_marginal, log_marginal_mc};
use glmsel::prior::{check_hyperparams, HyperparamReport};
use glmsel::sampler::{enumerate_exact, model_space_size, run_chain, ENUMERATION_LIMIT};
use glmsel::simulate::{run_experiment, SelectionMetrics, SimConfig};
use glmsel::{ChainSettings, Dataset, FitCache, FitStatus, GlmFamily, Hyperparams, ModelSupport};
use serde::Serialize;

use crate::args::{Cli, Command, DataArgs, DiagnoseArgs, FitArgs, OracleArgs, SimulateArgs};
use crate::config::{resolve_chain, resolve_hyperparams, RunFile};
use crate::error::{CliError, CliResult};
use crate::input::{parse_support, read_dataset, read_theta};

/// Version of every JSON report written by the CLI.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct DataInfo {
    pub path: String,
    pub response: String,
    pub n: usize,
    pub p: usize,
    pub labels: Vec<String>,
}

impl DataInfo {
    fn new(args: &DataArgs, data: &Dataset) -> Self {
        Self {
            path: args.data.display().to_string(),
            response: args.response.clone(),
            n: data.n(),
            p: data.p(),
            labels: data.labels().to_vec(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TopModel {
    pub indices: ModelSupport,
    pub labels: Vec<String>,
    pub visits: u64,
    pub frequency: f64,
    pub log_weight: f64,
    pub log_prior: f64,
    pub log_laplace: f64,
    pub loglik_at_mle: f64,
    pub theta_hat: Vec<f64>,
    pub fit_status: FitStatus,
    pub newton_iterations: usize,
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub family: GlmFamily,
    pub data: DataInfo,
    pub hyperparams: Hyperparams,
    pub chain: ChainSettings,
    pub seed: u64,
    pub hyperparam_check: HyperparamReport,
    pub acceptance_rate: f64,
    pub n_iter: usize,
    pub n_burnin: usize,
    pub chains: usize,
    pub distinct_models: usize,
    pub inclusion_prob: Vec<f64>,
    pub top_models: Vec<TopModel>,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: SimConfig,
    pub metrics: SelectionMetrics,
}

#[derive(Debug, Serialize)]
pub struct DiagnoseReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub data: DataInfo,
    pub theta0: Vec<f64>,
    pub report: DiagnosticsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplaceCheck {
    pub support: ModelSupport,
    pub log_laplace: f64,
    pub log_mc: f64,
    pub std_err: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerationCheck {
    pub model_space: u128,
    pub total_variation: Option<f64>,
    pub tolerance: f64,
    /// `None` when the model space is too large to enumerate.
    pub pass: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub family: GlmFamily,
    pub data: DataInfo,
    pub hyperparams: Hyperparams,
    pub mc_lambda: f64,
    pub mc_draws: usize,
    pub chain: ChainSettings,
    pub laplace: Vec<LaplaceCheck>,
    pub enumeration: EnumerationCheck,
    pub pass: bool,
}

fn load_data(args: &DataArgs) -> CliResult<Dataset> {
    read_dataset(&args.data, &args.response, args.family)
}

fn no_valid_model(e: glmsel::Error) -> CliError {
    match e {
        glmsel::Error::InvalidInit => {
            CliError::NoValidModel("every candidate fit failed (separation, singularity or saturation)".into())
        }
        other => other.into(),
    }
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<FitReport> {
    let file = match &args.config {
        Some(path) => RunFile::load(path)?,
        None => RunFile::default(),
    };
    let data = load_data(&args.data)?;
    let family = args.data.family;
    let h = resolve_hyperparams(&args.prior, &file.hyperparams, data.n(), data.p());
    h.validate(data.n(), data.p())?;
    let settings = resolve_chain(&args.chain, &file.chain)?;
    if let Some(init) = &settings.init {
        init.check_within(data.p())?;
    }
    let cache = FitCache::for_family(family);
    let mut summary = run_chain(&data, family, &h, &settings, &cache).map_err(no_valid_model)?;
    summary.truncate_top(args.top_k);
    let labels = data.labels();
    let top_models = summary
        .top_models
        .iter()
        .map(|m| {
            let fit = cache.get_or_fit(family, &data, &m.support)?;
            Ok(TopModel {
                indices: m.support.clone(),
                labels: m.support.indices().iter().map(|&j| labels[j].clone()).collect(),
                visits: m.visits,
                frequency: m.frequency,
                log_weight: m.log_weight,
                log_prior: m.log_prior,
                log_laplace: m.log_laplace,
                loglik_at_mle: fit.loglik_at_mle,
                theta_hat: fit.theta_hat.iter().copied().collect(),
                fit_status: fit.status,
                newton_iterations: fit.iterations,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(FitReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "fit",
        family,
        data: DataInfo::new(&args.data, &data),
        hyperparam_check: check_hyperparams(&h, family, data.p(), args.s0_hint, 0.0),
        hyperparams: h,
        seed: settings.seed,
        chain: settings,
        acceptance_rate: summary.acceptance_rate,
        n_iter: summary.n_iter,
        n_burnin: summary.n_burnin,
        chains: summary.chains,
        distinct_models: summary.distinct_models,
        inclusion_prob: summary.inclusion_prob,
        top_models,
    })
}

pub fn load_sim_config(path: &Path) -> CliResult<SimConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let cfg: SimConfig =
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    cfg.validate().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<SimulateReport> {
    let config = load_sim_config(&args.config)?;
    let metrics = run_experiment(&config).map_err(no_valid_model)?;
    Ok(SimulateReport { schema_version: REPORT_SCHEMA_VERSION, command: "simulate", config, metrics })
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> CliResult<DiagnoseReport> {
    let data = load_data(&args.data)?;
    let theta0 = read_theta(&args.theta0, data.p())?;
    let mut supports = args.supports.iter().map(|s| parse_support(s)).collect::<CliResult<Vec<_>>>()?;
    if supports.is_empty() {
        supports.push(ModelSupport::of_nonzero(theta0.as_slice()));
    }
    for s in &supports {
        s.check_within(data.p())?;
    }
    let opts = DiagnosticsOptions {
        s_levels: args.s_levels.clone(),
        k_cubic_starts: args.k_cubic_starts,
        seed: args.seed,
        ..Default::default()
    };
    let report = diagnostics::diagnose(args.data.family, &data, &theta0, &supports, &opts)?;
    Ok(DiagnoseReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "diagnose",
        data: DataInfo::new(&args.data, &data),
        theta0: theta0.iter().copied().collect(),
        report,
    })
}

/// Laplace-vs-MC band: three standard errors plus an absolute slack.
pub const LAPLACE_SLACK: f64 = 0.05;

pub fn cmd_oracle(args: &OracleArgs) -> CliResult<OracleReport> {
    let data = load_data(&args.data)?;
    let family = args.data.family;
    let h = resolve_hyperparams(&args.prior, &Default::default(), data.n(), data.p());
    h.validate(data.n(), data.p())?;
    let settings = resolve_chain(&args.chain, &Default::default())?;
    if let Some(init) = &settings.init {
        init.check_within(data.p())?;
    }
    let cache = FitCache::for_family(family);
    let summary = run_chain(&data, family, &h, &settings, &cache).map_err(no_valid_model)?;

    let supports: Vec<ModelSupport> = if args.supports.is_empty() {
        summary.top_models.iter().map(|m| m.support.clone()).filter(|s| !s.is_empty()).take(args.models).collect()
    } else {
        args.supports.iter().map(|s| parse_support(s)).collect::<CliResult<_>>()?
    };
    let h_mc = Hyperparams { lambda: args.mc_lambda, ..h };
    h_mc.validate(data.n(), data.p())?;
    let mut laplace = Vec::with_capacity(supports.len());
    for (k, s) in supports.iter().enumerate() {
        s.check_within(data.p())?;
        let fit = cache.get_or_fit(family, &data, s)?;
        let mut rng = glmsel::rng_for(settings.seed, 1 << 32 | k as u64);
        let lap = log_laplace_marginal(&fit, &h_mc, s.len());
        let (log_mc, std_err) = match log_marginal_mc(family, &data, s, &fit, &h_mc, args.mc_draws, &mut rng) {
            Ok(v) => v,
            Err(glmsel::Error::NotConverged(_)) => (f64::NAN, f64::NAN),
            Err(e) => return Err(e.into()),
        };
        let gap = (lap - log_mc).abs();
        let tolerance = 3.0 * std_err + LAPLACE_SLACK;
        laplace.push(LaplaceCheck {
            support: s.clone(),
            log_laplace: lap,
            log_mc,
            std_err,
            gap,
            tolerance,
            pass: gap <= tolerance,
        });
    }

    let model_space = model_space_size(data.p(), h.s_max);
    let enumeration = if model_space <= ENUMERATION_LIMIT {
        let exact = enumerate_exact(&data, family, &h, &cache).map_err(no_valid_model)?;
        let tv = exact.total_variation(&summary.frequencies());
        EnumerationCheck { model_space, total_variation: Some(tv), tolerance: args.tv_tol, pass: Some(tv <= args.tv_tol) }
    } else {
        EnumerationCheck { model_space, total_variation: None, tolerance: args.tv_tol, pass: None }
    };
    let pass = laplace.iter().all(|c| c.pass) && enumeration.pass != Some(false);
    Ok(OracleReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "oracle",
        family,
        data: DataInfo::new(&args.data, &data),
        hyperparams: h,
        mc_lambda: args.mc_lambda,
        mc_draws: args.mc_draws,
        chain: settings,
        laplace,
        enumeration,
        pass,
    })
}

fn write_report<T: Serialize>(path: &Path, report: &T) -> CliResult<()> {
    let text = crate::json::to_string(report).map_err(|e| CliError::Failed(format!("serialising report: {e}")))?;
    std::fs::write(path, text).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

fn print_oracle(report: &OracleReport) {
    for c in &report.laplace {
        println!(
            "{} laplace-vs-mc support={} gap={:.4e} tol={:.4e} (laplace {:.6}, mc {:.6} ± {:.2e})",
            verdict(c.pass),
            c.support,
            c.gap,
            c.tolerance,
            c.log_laplace,
            c.log_mc,
            c.std_err
        );
    }
    let e = &report.enumeration;
    match (e.pass, e.total_variation) {
        (Some(pass), Some(tv)) => {
            println!("{} chain-vs-enumeration tv={tv:.4e} tol={:.4e} models={}", verdict(pass), e.tolerance, e.model_space)
        }
        _ => println!("SKIP chain-vs-enumeration models={} exceeds {ENUMERATION_LIMIT}", e.model_space),
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: &Cli) -> CliResult<()> {
    let verbose = cli.verbose > 0;
    match &cli.command {
        Command::Fit(args) => {
            let report = cmd_fit(args)?;
            write_report(&args.out, &report)?;
            if verbose {
                eprintln!(
                    "fit: {} distinct models, acceptance {:.3}, modal {}; report at {}",
                    report.distinct_models,
                    report.acceptance_rate,
                    report.top_models.first().map_or("-".to_string(), |m| m.indices.to_string()),
                    args.out.display()
                );
            }
        }
        Command::Simulate(args) => {
            let report = cmd_simulate(args)?;
            write_report(&args.out, &report)?;
            if verbose {
                let m = &report.metrics;
                eprintln!(
                    "simulate: {} replications, recovery {:.3}, mean mass on truth {:.3} ± {:.3}; report at {}",
                    m.replications,
                    m.exact_recovery_rate,
                    m.mean_posterior_mass_truth,
                    m.se_posterior_mass_truth,
                    args.out.display()
                );
            }
        }
        Command::Diagnose(args) => {
            let report = cmd_diagnose(args)?;
            write_report(&args.out, &report)?;
            if verbose {
                eprintln!("diagnose: {} supports; report at {}", report.report.supports.len(), args.out.display());
            }
        }
        Command::Oracle(args) => {
            let report = cmd_oracle(args)?;
            print_oracle(&report);
            if let Some(out) = &args.out {
                write_report(out, &report)?;
            }
            if !report.pass {
                return Err(CliError::Failed("oracle cross-check failed".into()));
            }
        }
    }
    Ok(())
}
