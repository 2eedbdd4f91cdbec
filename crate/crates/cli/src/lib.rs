//! Command-line front end for `glmsel`: argument parsing, input validation,
//! run-file resolution and JSON reports.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod json;

pub use args::Cli;
pub use error::{CliError, CliResult};
