//! Resolution of run settings: command-line flags override the optional TOML
//! run file, which overrides built-in defaults.
//!
//! Run file layout (`schema_version` is required):
//!
//! ```toml
//! schema_version = 1
//!
//! [hyperparams]
//! s_max = 10
//! alpha = 0.999
//! lambda = 0.001
//! a4 = 0.05
//! a7 = 0.0
//!
//! [chain]
//! iters = 50000
//! burnin = 5000
//! chains = 4
//! seed = 7
//! init = "0,3"
//! ```

use std::path::Path;

use glmsel::{ChainSettings, Hyperparams};
use serde::Deserialize;

use crate::args::{ChainArgs, PriorArgs};
use crate::error::{CliError, CliResult};
use crate::input::parse_support;

pub const RUN_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_ITERS: usize = 50_000;
pub const DEFAULT_S_MAX: usize = 10;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub schema_version: u32,
    #[serde(default)]
    pub hyperparams: PriorArgs,
    #[serde(default)]
    pub chain: ChainArgs,
}

impl RunFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let file: RunFile =
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if file.schema_version != RUN_SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "{}: unsupported schema_version {} (expected {RUN_SCHEMA_VERSION})",
                path.display(),
                file.schema_version
            )));
        }
        Ok(file)
    }
}

pub fn resolve_hyperparams(flags: &PriorArgs, file: &PriorArgs, n: usize, p: usize) -> Hyperparams {
    let d = Hyperparams::recommended(DEFAULT_S_MAX.min(n).min(p).max(1));
    Hyperparams {
        alpha: flags.alpha.or(file.alpha).unwrap_or(d.alpha),
        lambda: flags.lambda.or(file.lambda).unwrap_or(d.lambda),
        a4: flags.a4.or(file.a4).unwrap_or(d.a4),
        a7: flags.a7.or(file.a7).unwrap_or(d.a7),
        s_max: flags.s_max.or(file.s_max).unwrap_or(d.s_max),
    }
}

pub fn resolve_chain(flags: &ChainArgs, file: &ChainArgs) -> CliResult<ChainSettings> {
    let init = match flags.init.as_ref().or(file.init.as_ref()) {
        Some(text) => Some(parse_support(text)?),
        None => None,
    };
    let settings = ChainSettings {
        n_iter: flags.iters.or(file.iters).unwrap_or(DEFAULT_ITERS),
        n_burnin: flags.burnin.or(file.burnin),
        seed: flags.seed.or(file.seed).unwrap_or(0),
        chains: flags.chains.or(file.chains).unwrap_or(1),
        init,
    };
    settings.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(settings)
}
