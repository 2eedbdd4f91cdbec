//! Log-likelihood, score, Fisher information and related quantities for a
//! fixed-design GLM restricted to a support `S`.
//!
//! The log-likelihood omits the base-measure term `k(y)`. Every quantity the
//! crate builds from it (likelihood ratios, marginal-likelihood ratios,
//! posterior weights) is invariant to that term.

use nalgebra::{DMatrix, DVector};

use crate::data::{predictor_sparse, Dataset, ModelSupport};
use crate::error::{Error, Result};
use crate::family::GlmFamily;

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `Σ_i [y_i η_i − b(η_i)]`.
pub(crate) fn loglik_eta(family: GlmFamily, y: &DVector<f64>, eta: &DVector<f64>) -> Result<f64> {
    let mut acc = 0.0;
    for (&yi, &ei) in y.iter().zip(eta.iter()) {
        acc += family.obs_loglik(yi, ei)?;
    }
    Ok(acc)
}

/// `Xᵀ diag(w) X` for an n × k matrix.
pub(crate) fn weighted_gram(xs: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let k = xs.ncols();
    let mut g = DMatrix::zeros(k, k);
    let mut wx = DVector::zeros(xs.nrows());
    for a in 0..k {
        wx.copy_from(&xs.column(a));
        wx.component_mul_assign(w);
        for b in 0..=a {
            let v = wx.dot(&xs.column(b));
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

/// Joint value, gradient and negative Hessian at one parameter.
#[derive(Debug, Clone)]
pub(crate) struct LocalFit {
    pub loglik: f64,
    pub score: DVector<f64>,
    pub fisher: DMatrix<f64>,
}

pub(crate) fn evaluate(
    family: GlmFamily,
    xs: &DMatrix<f64>,
    y: &DVector<f64>,
    theta: &DVector<f64>,
) -> Result<LocalFit> {
    let eta = predictor_sparse(xs, theta);
    let n = xs.nrows();
    let mut resid = DVector::zeros(n);
    let mut w = DVector::zeros(n);
    let mut loglik = 0.0;
    for i in 0..n {
        loglik += family.obs_loglik(y[i], eta[i])?;
        resid[i] = family.residual(y[i], eta[i])?;
        w[i] = family.variance(eta[i])?;
    }
    Ok(LocalFit { loglik, score: xs.tr_mul(&resid), fisher: weighted_gram(xs, &w) })
}

pub(crate) fn loglik_at(
    family: GlmFamily,
    xs: &DMatrix<f64>,
    y: &DVector<f64>,
    theta: &DVector<f64>,
) -> Result<f64> {
    loglik_eta(family, y, &predictor_sparse(xs, theta))
}

fn restricted(data: &Dataset, s: &ModelSupport, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len(s.len(), theta.len())?;
    data.columns(s)
}

/// `L_{n,θ_S}` with the `k(y)` term dropped.
pub fn log_likelihood(
    family: GlmFamily,
    data: &Dataset,
    s: &ModelSupport,
    theta: &DVector<f64>,
) -> Result<f64> {
    let xs = restricted(data, s, theta)?;
    loglik_at(family, &xs, data.y(), theta)
}

/// Gradient of the log-likelihood, `Σ_i (y_i − b'(x_{i,S}ᵀθ)) x_{i,S}`.
pub fn score(
    family: GlmFamily,
    data: &Dataset,
    s: &ModelSupport,
    theta: &DVector<f64>,
) -> Result<DVector<f64>> {
    let xs = restricted(data, s, theta)?;
    let eta = predictor_sparse(&xs, theta);
    let mut resid = DVector::zeros(data.n());
    for i in 0..data.n() {
        resid[i] = family.residual(data.y()[i], eta[i])?;
    }
    Ok(xs.tr_mul(&resid))
}

/// `X_Sᵀ diag(b''(X_S θ)) X_S`.
pub fn fisher_info(
    family: GlmFamily,
    data: &Dataset,
    s: &ModelSupport,
    theta: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let xs = restricted(data, s, theta)?;
    fisher_from_predictor(family, &xs, &predictor_sparse(&xs, theta))
}

pub(crate) fn fisher_from_predictor(
    family: GlmFamily,
    xs: &DMatrix<f64>,
    eta: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let w = variance_weights(family, eta)?;
    Ok(weighted_gram(xs, &w))
}

pub(crate) fn variance_weights(family: GlmFamily, eta: &DVector<f64>) -> Result<DVector<f64>> {
    let mut w = DVector::zeros(eta.len());
    for (wi, &e) in w.iter_mut().zip(eta.iter()) {
        *wi = family.variance(e)?;
    }
    Ok(w)
}

/// Diagonal of `W_θ = diag(b''(x_iᵀθ))` for a full-dimensional `theta`.
pub fn variance_weights_at(family: GlmFamily, data: &Dataset, theta: &DVector<f64>) -> Result<DVector<f64>> {
    variance_weights(family, &data.linear_predictor(theta)?)
}

/// `X_Sᵀ W₀ X_S` with `W₀ = diag(b''(x_iᵀθ₀))` for the full-dimensional truth.
pub fn v_matrix(
    family: GlmFamily,
    data: &Dataset,
    s: &ModelSupport,
    theta0: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let eta0 = data.linear_predictor(theta0)?;
    let xs = data.columns(s)?;
    fisher_from_predictor(family, &xs, &eta0)
}

/// Per-observation squared Hellinger distance `1 − exp{b(η̄) − (b(η₁)+b(η₂))/2}`.
pub fn hellinger_sq_obs(family: GlmFamily, eta1: f64, eta2: f64) -> f64 {
    let log_affinity = match family {
        // b(m) − (b(η₁)+b(η₂))/2 = −(e^{η₁/2} − e^{η₂/2})²/2, overflow-free.
        GlmFamily::Poisson => {
            let d = (0.5 * eta1).exp() - (0.5 * eta2).exp();
            -0.5 * d * d
        }
        GlmFamily::Logistic => {
            let b = |e: f64| e.max(0.0) + (-e.abs()).exp().ln_1p();
            b(0.5 * (eta1 + eta2)) - 0.5 * (b(eta1) + b(eta2))
        }
    };
    (-log_affinity.min(0.0).exp_m1()).clamp(0.0, 1.0)
}

/// Mean Hellinger distance `H_n(θ₁, θ₂)` between two full-dimensional parameters.
pub fn hellinger_n(
    family: GlmFamily,
    data: &Dataset,
    theta1: &DVector<f64>,
    theta2: &DVector<f64>,
) -> Result<f64> {
    let e1 = data.linear_predictor(theta1)?;
    let e2 = data.linear_predictor(theta2)?;
    let total: f64 = e1.iter().zip(e2.iter()).map(|(&a, &b)| hellinger_sq_obs(family, a, b)).sum();
    Ok((total / data.n() as f64).sqrt())
}
