//! Fractional marginal likelihoods and posterior weights over supports.
//!
//! With the slab centred at the MLE, the Laplace approximation of
//! `M(S) = ∫ exp(α L_{n,θ}) N(θ | θ̂, (λF)^{-1}) dθ` reduces to
//! `exp(α L_{n,θ̂}) (1 + α/λ)^{-|S|/2}`. Everything here is kept in log space.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ModelSupport};
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::glm;
use crate::mle::{FitCache, FitResult, FitStatus};
use crate::prior::{self, Hyperparams};

/// Unnormalised log posterior weight of a support, with its components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogWeight {
    /// `log_prior + log_laplace`, or `−∞` for excluded models.
    pub value: f64,
    pub log_prior: f64,
    pub log_laplace: f64,
    /// Fit status; `None` when no fit was attempted (beyond `s_max`).
    pub status: Option<FitStatus>,
}

impl LogWeight {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    fn excluded(log_prior: f64, status: Option<FitStatus>) -> Self {
        Self { value: f64::NEG_INFINITY, log_prior, log_laplace: f64::NEG_INFINITY, status }
    }
}

/// `α·L(θ̂_S) − (|S|/2)·log(1 + α/λ)`; `−∞` for an unconverged fit.
pub fn log_laplace_marginal(fit: &FitResult, h: &Hyperparams, size: usize) -> f64 {
    if !fit.is_converged() || !fit.loglik_at_mle.is_finite() {
        return f64::NEG_INFINITY;
    }
    h.alpha * fit.loglik_at_mle - 0.5 * size as f64 * (h.alpha / h.lambda).ln_1p()
}

/// Monte-Carlo estimate of `log M(S)` by averaging `exp(α(L(θ) − L(θ̂)))`
/// over exact slab draws. Returns `(estimate, standard error)`, the error
/// from the delta method on the log of the sample mean.
pub fn log_marginal_mc(
    family: GlmFamily,
    data: &Dataset,
    s: &ModelSupport,
    fit: &FitResult,
    h: &Hyperparams,
    n_draws: usize,
    rng: &mut crate::Rng,
) -> Result<(f64, f64)> {
    if !fit.is_converged() {
        return Err(Error::NotConverged(fit.status));
    }
    if fit.dim() != s.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), got: fit.dim() });
    }
    if n_draws < 2 {
        return Err(Error::InvalidConfig("at least two Monte-Carlo draws are needed".into()));
    }
    let xs = data.columns(s)?;
    let lhat = fit.loglik_at_mle;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_draws {
        let theta = prior::slab_sample(fit, h.lambda, rng)?;
        // Saturated Poisson predictors have L = −∞ in the limit.
        let w = match glm::loglik_at(family, &xs, data.y(), &theta) {
            Ok(l) => (h.alpha * (l - lhat)).exp(),
            Err(_) => 0.0,
        };
        sum += w;
        sum_sq += w * w;
    }
    let nf = n_draws as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    let se = (var / nf).sqrt() / mean;
    Ok((h.alpha * lhat + mean.ln(), se))
}

/// `log π(S) + log M̂(S)` using the cache for the fit.
///
/// Models beyond `s_max`, and models whose fit did not converge, get `−∞`.
pub fn log_posterior_weight(
    s: &ModelSupport,
    data: &Dataset,
    family: GlmFamily,
    h: &Hyperparams,
    cache: &FitCache,
) -> Result<LogWeight> {
    let log_prior = prior::log_model_prior(s, data.p(), h);
    if !log_prior.is_finite() {
        return Ok(LogWeight::excluded(log_prior, None));
    }
    let fit = cache.get_or_fit(family, data, s)?;
    let log_laplace = log_laplace_marginal(&fit, h, s.len());
    if !log_laplace.is_finite() {
        return Ok(LogWeight::excluded(log_prior, Some(fit.status)));
    }
    Ok(LogWeight { value: log_prior + log_laplace, log_prior, log_laplace, status: Some(fit.status) })
}
