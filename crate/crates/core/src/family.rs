//! Canonical-link exponential families.
//!
//! A family is determined by its cumulant function `b`: the response density is
//! `exp{y·η − b(η) + k(y)}` with `η = xᵀθ`. `b'` is the mean, `b''` the variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest linear predictor accepted by the Poisson family before `exp`
/// is considered saturated.
pub const POISSON_ETA_MAX: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlmFamily {
    Logistic,
    Poisson,
}

/// `b` and its first three derivatives at one linear predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkValues {
    pub b: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl GlmFamily {
    /// Constant with `sup_{|t| ≤ 1/2} b''(η + t) ≤ c_dev · b''(η)`.
    ///
    /// For Poisson `b'' = exp` so the constant is `e^{1/2}`. For the logistic
    /// family the ratio `b''(η − 1/2)/b''(η)` increases to `e^{1/2}` as
    /// `η → ∞` without reaching it, so the same constant applies.
    pub fn c_dev(self) -> f64 {
        0.5f64.exp()
    }

    pub fn name(self) -> &'static str {
        match self {
            GlmFamily::Logistic => "logistic",
            GlmFamily::Poisson => "poisson",
        }
    }

    /// Evaluates `b, b', b'', b'''` at `eta`.
    pub fn link_values(self, eta: f64) -> Result<LinkValues> {
        if !eta.is_finite() {
            return Err(Error::Saturation { eta });
        }
        match self {
            GlmFamily::Logistic => {
                let e = (-eta.abs()).exp();
                let b = eta.max(0.0) + e.ln_1p();
                let b1 = if eta >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
                let b2 = e / ((1.0 + e) * (1.0 + e));
                let b3 = b2 * (1.0 - 2.0 * b1);
                Ok(LinkValues { b, b1, b2, b3 })
            }
            GlmFamily::Poisson => {
                if eta > POISSON_ETA_MAX {
                    return Err(Error::Saturation { eta });
                }
                let e = eta.exp();
                Ok(LinkValues { b: e, b1: e, b2: e, b3: e })
            }
        }
    }

    /// `b(η)` alone.
    #[inline]
    pub fn cumulant(self, eta: f64) -> Result<f64> {
        match self {
            GlmFamily::Logistic => Ok(eta.max(0.0) + (-eta.abs()).exp().ln_1p()),
            GlmFamily::Poisson => {
                if eta > POISSON_ETA_MAX || eta.is_nan() {
                    Err(Error::Saturation { eta })
                } else {
                    Ok(eta.exp())
                }
            }
        }
    }

    /// Mean function `b'(η)`.
    #[inline]
    pub fn mean(self, eta: f64) -> Result<f64> {
        match self {
            GlmFamily::Logistic => {
                let e = (-eta.abs()).exp();
                Ok(if eta >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) })
            }
            GlmFamily::Poisson => self.cumulant(eta),
        }
    }

    /// Variance function `b''(η)`.
    #[inline]
    pub fn variance(self, eta: f64) -> Result<f64> {
        match self {
            GlmFamily::Logistic => {
                let e = (-eta.abs()).exp();
                Ok(e / ((1.0 + e) * (1.0 + e)))
            }
            GlmFamily::Poisson => self.cumulant(eta),
        }
    }

    /// Per-observation `yη − b(η)`.
    ///
    /// For the logistic family this is `−[y·softplus(−η) + (1−y)·softplus(η)]`,
    /// which avoids the cancellation of `yη − b(η)` when `|η|` is large.
    #[inline]
    pub fn obs_loglik(self, y: f64, eta: f64) -> Result<f64> {
        match self {
            GlmFamily::Logistic => {
                if !eta.is_finite() {
                    return Err(Error::Saturation { eta });
                }
                Ok(-(y * softplus(-eta) + (1.0 - y) * softplus(eta)))
            }
            GlmFamily::Poisson => Ok(y * eta - self.cumulant(eta)?),
        }
    }

    /// Per-observation residual `y − b'(η)`.
    #[inline]
    pub fn residual(self, y: f64, eta: f64) -> Result<f64> {
        match self {
            GlmFamily::Logistic => Ok(y * sigmoid(-eta) - (1.0 - y) * sigmoid(eta)),
            GlmFamily::Poisson => Ok(y - self.cumulant(eta)?),
        }
    }

    /// Checks that a response value belongs to the family's sample space.
    pub fn validate_response(self, y: f64) -> bool {
        match self {
            GlmFamily::Logistic => y == 0.0 || y == 1.0,
            GlmFamily::Poisson => y.is_finite() && y >= 0.0 && y.fract() == 0.0,
        }
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    if x >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    }
}

impl std::str::FromStr for GlmFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" | "logit" | "binomial" => Ok(GlmFamily::Logistic),
            "poisson" => Ok(GlmFamily::Poisson),
            other => Err(Error::InvalidConfig(format!("unknown family '{other}'"))),
        }
    }
}

impl std::fmt::Display for GlmFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
