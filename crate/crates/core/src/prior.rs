//! Complexity prior over supports and the empirical Gaussian slab.
//!
//! The size prior is geometric, `w(s) ∝ p^{-a4·s}` on `{0, …, s_max}`, and
//! the support is uniform given its size, so
//! `log π(S) = log w(|S|) − log C(p, |S|)`. The empty model is part of the
//! prior support.
//!
//! Given `S`, the slab is `N(θ̂_S, (λ F_{n,θ̂_S})^{-1})`, centred at the
//! model's own MLE.

use nalgebra::DVector;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::data::ModelSupport;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::linalg;
use crate::mle::FitResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    /// Likelihood fraction, `0 < α ≤ 1`.
    pub alpha: f64,
    /// Slab precision scale.
    pub lambda: f64,
    /// Size-penalty exponent.
    pub a4: f64,
    /// Decay exponent of λ in p (only used by [`check_hyperparams`]).
    #[serde(default)]
    pub a7: f64,
    pub s_max: usize,
}

impl Hyperparams {
    /// `λ = 10^{-3}`, `α = 0.999`, `a4 = 0.05`.
    pub fn recommended(s_max: usize) -> Self {
        Self { alpha: 0.999, lambda: 1e-3, a4: 0.05, a7: 0.0, s_max }
    }

    /// Checks ranges; `s_max ≤ min(n, p)`.
    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidHyperparams(format!("alpha = {} not in (0, 1]", self.alpha)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidHyperparams(format!("lambda = {} must be positive", self.lambda)));
        }
        if !(self.a4 > 0.0 && self.a4.is_finite()) {
            return Err(Error::InvalidHyperparams(format!("a4 = {} must be positive", self.a4)));
        }
        if !(self.a7 >= 0.0 && self.a7.is_finite()) {
            return Err(Error::InvalidHyperparams(format!("a7 = {} must be nonnegative", self.a7)));
        }
        if self.s_max < 1 || self.s_max > n.min(p) {
            return Err(Error::InvalidHyperparams(format!(
                "s_max = {} not in [1, min(n, p) = {}]",
                self.s_max,
                n.min(p)
            )));
        }
        Ok(())
    }
}

/// `log C(p, k)`; exact summation of logs for small `k`, log-gamma otherwise.
pub fn log_binomial(p: usize, k: usize) -> f64 {
    if k > p {
        return f64::NEG_INFINITY;
    }
    let k = k.min(p - k);
    if k <= 64 {
        (0..k).map(|i| ((p - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
    } else {
        ln_gamma(p as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((p - k) as f64 + 1.0)
    }
}

/// `log w(s)` for the normalised geometric size prior.
pub fn log_size_prior(size: usize, p: usize, h: &Hyperparams) -> f64 {
    if size > h.s_max {
        return f64::NEG_INFINITY;
    }
    let r = -h.a4 * (p as f64).ln();
    // log Σ_{k=0}^{s_max} e^{r k}, stable for r ≤ 0.
    let log_norm = if r == 0.0 {
        ((h.s_max + 1) as f64).ln()
    } else {
        // (1 − e^{r(s_max+1)}) / (1 − e^{r})
        let m = (h.s_max + 1) as f64;
        (-(r * m).exp_m1()).ln() - (-r.exp_m1()).ln()
    };
    r * size as f64 - log_norm
}

/// `log π(S) = log w(|S|) − log C(p, |S|)`; `−∞` beyond `s_max`.
pub fn log_model_prior(s: &ModelSupport, p: usize, h: &Hyperparams) -> f64 {
    if s.len() > h.s_max || s.len() > p {
        return f64::NEG_INFINITY;
    }
    log_size_prior(s.len(), p, h) - log_binomial(p, s.len())
}

fn require_converged(fit: &FitResult) -> Result<()> {
    if !fit.is_converged() {
        return Err(Error::NotConverged(fit.status));
    }
    Ok(())
}

/// Log density of the slab `N(θ̂_S, (λF)^{-1})` at `theta`.
pub fn slab_logpdf(theta: &DVector<f64>, fit: &FitResult, lambda: f64) -> Result<f64> {
    require_converged(fit)?;
    let k = fit.dim();
    if theta.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: theta.len() });
    }
    let d = theta - &fit.theta_hat;
    // dᵀ(LLᵀ)d = ‖Lᵀd‖².
    let q = (fit.fisher_chol.transpose() * d).norm_squared();
    let kf = k as f64;
    Ok(-0.5 * kf * (2.0 * std::f64::consts::PI).ln()
        + 0.5 * (kf * lambda.ln() + fit.logdet_fisher)
        - 0.5 * lambda * q)
}

/// Exact draw from the slab: `θ̂ + λ^{-1/2} L^{-T} z`.
pub fn slab_sample(fit: &FitResult, lambda: f64, rng: &mut crate::Rng) -> Result<DVector<f64>> {
    require_converged(fit)?;
    let z = DVector::from_fn(fit.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let u = linalg::solve_lower_transpose(&fit.fisher_chol, &z);
    Ok(&fit.theta_hat + u / lambda.sqrt())
}

/// One inequality of the hyperparameter condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`; the inequality holds when positive.
    pub slack: f64,
    pub satisfied: bool,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, slack: lhs - rhs, satisfied: lhs > rhs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperparamReport {
    pub c_dev: f64,
    pub s0: usize,
    pub delta1: f64,
    /// `a4 > λ` (λ playing the role of `A₆ p^{-A₇}`).
    pub size_penalty: InequalityCheck,
    /// `a4 + a7/2 > 16 α c_dev + log_p(s0) + δ₁`.
    pub superset_penalty: InequalityCheck,
    /// Smallest `a4` that satisfies both inequalities (up to the strict boundary).
    pub min_a4: f64,
}

impl HyperparamReport {
    pub fn all_satisfied(&self) -> bool {
        self.size_penalty.satisfied && self.superset_penalty.satisfied
    }
}

/// Evaluates the sufficient hyperparameter condition for selection
/// consistency. Advisory only; never rejects a configuration.
///
/// `s0_hint` defaults to 1 (so `log_p(s0) = 0`).
pub fn check_hyperparams(
    h: &Hyperparams,
    family: GlmFamily,
    p: usize,
    s0_hint: Option<usize>,
    delta1: f64,
) -> HyperparamReport {
    let c_dev = family.c_dev();
    let s0 = s0_hint.unwrap_or(1).max(1);
    let log_p_s0 = if p > 1 { (s0 as f64).ln() / (p as f64).ln() } else { 0.0 };
    let size_penalty = InequalityCheck::new(h.a4, h.lambda);
    let rhs = h.alpha * 16.0 * c_dev + log_p_s0 + delta1;
    let superset_penalty = InequalityCheck::new(h.a4 + h.a7 / 2.0, rhs);
    HyperparamReport {
        c_dev,
        s0,
        delta1,
        size_penalty,
        superset_penalty,
        min_a4: h.lambda.max(rhs - h.a7 / 2.0),
    }
}
