use thiserror::Error;

/// Exit status for malformed input (CSV, config, θ₀ or support files).
pub const EXIT_INPUT: i32 = 2;
/// Exit status when no model with a valid fit is available.
pub const EXIT_NO_MODEL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("no valid model: {0}")]
    NoValidModel(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(glmsel::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::NoValidModel(_) => EXIT_NO_MODEL,
            CliError::Core(e) => match e {
                glmsel::Error::InvalidData(_)
                | glmsel::Error::InvalidConfig(_)
                | glmsel::Error::InvalidHyperparams(_)
                | glmsel::Error::InvalidSupport(_)
                | glmsel::Error::DimensionMismatch { .. } => EXIT_INPUT,
                glmsel::Error::InvalidInit => EXIT_NO_MODEL,
                _ => 1,
            },
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }
}

impl From<glmsel::Error> for CliError {
    fn from(e: glmsel::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
