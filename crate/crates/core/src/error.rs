use thiserror::Error;

use crate::mle::FitStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear predictor {eta} exceeds the representable range of exp()")]
    Saturation { eta: f64 },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("fit did not converge (status {0:?})")]
    NotConverged(FitStatus),

    #[error("enumeration guard exceeded: {count} items > limit {limit}")]
    GuardExceeded { count: u128, limit: u128 },

    #[error("empty neighborhood: no proposal is possible")]
    EmptyNeighborhood,

    #[error("initial model has no finite posterior weight")]
    InvalidInit,
}
