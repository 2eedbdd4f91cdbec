//! Per-model maximum likelihood by Newton's method with step halving.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use lru::LruCache;
use nalgebra::{DMatrix, DVector};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ModelSupport};
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::glm::{self, LocalFit};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitStatus {
    Converged,
    MaxIter,
    /// Iterates left the norm ball `‖θ‖₂ ≤ theta_norm_cap`: the MLE does not
    /// exist (logistic separation, Poisson divergence).
    Separated,
    /// Fisher information not positive definite (rank-deficient `X_S`).
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub step_halvings: usize,
    pub theta_norm_cap: f64,
}

impl FitOptions {
    pub fn for_family(family: GlmFamily) -> Self {
        let theta_norm_cap = match family {
            GlmFamily::Logistic => 50.0,
            GlmFamily::Poisson => 30.0,
        };
        Self { max_iter: 100, grad_tol: 1e-8, step_halvings: 30, theta_norm_cap }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0
            || self.step_halvings == 0
            || !(self.grad_tol > 0.0)
            || !(self.theta_norm_cap > 0.0)
        {
            return Err(Error::InvalidConfig(format!("fit options must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta_hat: DVector<f64>,
    pub loglik_at_mle: f64,
    /// Lower factor `L` with `LLᵀ = F_{n,θ̂}`; empty unless converged.
    pub fisher_chol: DMatrix<f64>,
    pub logdet_fisher: f64,
    pub status: FitStatus,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Log-likelihood of every accepted iterate, starting point included.
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn is_converged(&self) -> bool {
        self.status == FitStatus::Converged
    }

    pub fn dim(&self) -> usize {
        self.theta_hat.len()
    }

    fn failed(theta: DVector<f64>, loglik: f64, status: FitStatus, it: usize, g: f64, trace: Vec<f64>) -> Self {
        Self {
            theta_hat: theta,
            loglik_at_mle: loglik,
            fisher_chol: DMatrix::zeros(0, 0),
            logdet_fisher: f64::NAN,
            status,
            iterations: it,
            grad_norm: g,
            trace,
        }
    }
}

/// Fits `argmax_θ L_{n,θ_S}` starting from `θ = 0`.
///
/// The empty support returns the log-likelihood of the zero predictor with a
/// zero-dimensional Fisher factor.
pub fn fit_mle(family: GlmFamily, data: &Dataset, s: &ModelSupport, opts: &FitOptions) -> Result<FitResult> {
    fit_mle_from(family, data, s, &DVector::zeros(s.len()), opts)
}

/// [`fit_mle`] from an explicit starting point.
pub fn fit_mle_from(
    family: GlmFamily,
    data: &Dataset,
    s: &ModelSupport,
    init: &DVector<f64>,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    if init.len() != s.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), got: init.len() });
    }
    let xs = data.columns(s)?;
    newton(family, &xs, data.y(), init.clone(), opts)
}

pub(crate) fn newton(
    family: GlmFamily,
    xs: &DMatrix<f64>,
    y: &DVector<f64>,
    mut theta: DVector<f64>,
    opts: &FitOptions,
) -> Result<FitResult> {
    let (n, k) = xs.shape();
    if k == 0 {
        let loglik = glm::loglik_at(family, xs, y, &theta)?;
        return Ok(FitResult {
            theta_hat: theta,
            loglik_at_mle: loglik,
            fisher_chol: DMatrix::zeros(0, 0),
            logdet_fisher: 0.0,
            status: FitStatus::Converged,
            iterations: 0,
            grad_norm: 0.0,
            trace: vec![loglik],
        });
    }
    if k > n {
        let loglik = glm::loglik_at(family, xs, y, &theta).unwrap_or(f64::NEG_INFINITY);
        return Ok(FitResult::failed(theta, loglik, FitStatus::Singular, 0, f64::NAN, vec![]));
    }

    let mut cur: LocalFit = glm::evaluate(family, xs, y, &theta)?;
    let mut trace = vec![cur.loglik];
    let mut iterations = 0;
    loop {
        let grad_norm = cur.score.norm();
        let grad_ok = grad_norm <= opts.grad_tol * (1.0 + cur.loglik.abs());
        let chol = match linalg::cholesky_lower(&cur.fisher) {
            Ok(l) => l,
            Err(_) => {
                return Ok(FitResult::failed(theta, cur.loglik, FitStatus::Singular, iterations, grad_norm, trace))
            }
        };
        let step = linalg::chol_solve(&chol, &cur.score);
        // A vanishing gradient alone is not enough: under separation the
        // gradient decays exponentially while Newton steps stay O(1).
        let step_ok = step.amax() <= 1e-6 * (1.0 + theta.amax());
        if grad_ok && step_ok {
            let logdet = linalg::logdet_from_lower(&chol);
            return Ok(FitResult {
                theta_hat: theta,
                loglik_at_mle: cur.loglik,
                fisher_chol: chol,
                logdet_fisher: logdet,
                status: FitStatus::Converged,
                iterations,
                grad_norm,
                trace,
            });
        }
        if iterations >= opts.max_iter {
            return Ok(FitResult::failed(theta, cur.loglik, FitStatus::MaxIter, iterations, grad_norm, trace));
        }

        // Strict ascent: a step that leaves L unchanged in floating point can
        // repeat forever without moving the gradient.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.step_halvings {
            let cand = &theta + &step * t;
            if let Ok(next) = glm::evaluate(family, xs, y, &cand) {
                if next.loglik > cur.loglik {
                    accepted = Some((cand, next));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, next)) => {
                theta = cand;
                cur = next;
                iterations += 1;
                trace.push(cur.loglik);
                if theta.norm() > opts.theta_norm_cap {
                    return Ok(FitResult::failed(
                        theta,
                        cur.loglik,
                        FitStatus::Separated,
                        iterations,
                        cur.score.norm(),
                        trace,
                    ));
                }
            }
            None => {
                // No ascent possible in floating point. Near the optimum the
                // predicted Newton gain drops below the rounding noise of the
                // summed log-likelihood, so that also counts as converged.
                let gain = 0.5 * cur.score.dot(&step);
                let gain_ok = gain <= 1e-12 * (1.0 + cur.loglik.abs());
                if step_ok && (grad_ok || gain_ok) {
                    let logdet = linalg::logdet_from_lower(&chol);
                    return Ok(FitResult {
                        theta_hat: theta,
                        loglik_at_mle: cur.loglik,
                        fisher_chol: chol,
                        logdet_fisher: logdet,
                        status: FitStatus::Converged,
                        iterations,
                        grad_norm,
                        trace,
                    });
                }
                return Ok(FitResult::failed(theta, cur.loglik, FitStatus::MaxIter, iterations, grad_norm, trace));
            }
        }
    }
}

/// Population optimiser `θ*_S = argmax E L_{n,θ_S}` under the truth `theta0`.
///
/// Solves the score equation with pseudo-responses `μ_i = b'(x_iᵀθ₀)`,
/// starting from `θ₀` restricted to `S` (the exact solution when `S ⊇ S₀`).
pub fn theta_star(
    family: GlmFamily,
    data: &Dataset,
    s: &ModelSupport,
    theta0: &DVector<f64>,
    opts: &FitOptions,
) -> Result<DVector<f64>> {
    Ok(theta_star_fit(family, data, s, theta0, opts)?.theta_hat)
}

pub(crate) fn theta_star_fit(
    family: GlmFamily,
    data: &Dataset,
    s: &ModelSupport,
    theta0: &DVector<f64>,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    let eta0 = data.linear_predictor(theta0)?;
    let mut mu = DVector::zeros(data.n());
    for (m, &e) in mu.iter_mut().zip(eta0.iter()) {
        *m = family.mean(e)?;
    }
    let xs = data.columns(s)?;
    let fit = newton(family, &xs, &mu, s.restrict(theta0), opts)?;
    if !fit.is_converged() {
        return Err(Error::NotConverged(fit.status));
    }
    Ok(fit)
}

/// Bounded least-recently-used cache of fits keyed by canonical support.
///
/// One cache belongs to one `(family, dataset, options)` triple. Concurrent
/// callers may fit the same support twice; fits are deterministic so the
/// duplicate write is harmless.
pub struct FitCache {
    opts: FitOptions,
    inner: Mutex<LruCache<ModelSupport, Arc<FitResult>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

pub const DEFAULT_CACHE_CAPACITY: usize = 100_000;

impl FitCache {
    pub fn new(opts: FitOptions, capacity: usize) -> Self {
        let cap = NonZeroUsize::new(capacity.max(1)).expect("nonzero");
        Self {
            opts,
            inner: Mutex::new(LruCache::new(cap)),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// Default options for `family` and [`DEFAULT_CACHE_CAPACITY`].
    pub fn for_family(family: GlmFamily) -> Self {
        Self::new(FitOptions::for_family(family), DEFAULT_CACHE_CAPACITY)
    }

    pub fn options(&self) -> &FitOptions {
        &self.opts
    }

    pub fn get_or_fit(&self, family: GlmFamily, data: &Dataset, s: &ModelSupport) -> Result<Arc<FitResult>> {
        if let Some(f) = self.inner.lock().get(s) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Arc::clone(f));
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let fit = Arc::new(fit_mle(family, data, s, &self.opts)?);
        self.inner.lock().put(s.clone(), Arc::clone(&fit));
        Ok(fit)
    }

    pub fn len(&self) -> usize {
        self.inner.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(hits, misses)` since construction.
    pub fn stats(&self) -> (u64, u64) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    /// Snapshot of cached fits, in unspecified order.
    pub fn entries(&self) -> Vec<(ModelSupport, Arc<FitResult>)> {
        self.inner.lock().iter().map(|(k, v)| (k.clone(), Arc::clone(v))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn intercept_data(y: Vec<f64>) -> Dataset {
        let n = y.len();
        Dataset::new(DMatrix::from_element(n, 1, 1.0), DVector::from_vec(y), None).unwrap()
    }

    #[test]
    fn poisson_intercept_only() {
        let y = vec![0.0, 2.0, 3.0, 1.0, 4.0, 2.0];
        let n = y.len() as f64;
        let ybar = y.iter().sum::<f64>() / n;
        let d = intercept_data(y);
        let s = ModelSupport::new(vec![0]).unwrap();
        let fit = fit_mle(GlmFamily::Poisson, &d, &s, &FitOptions::for_family(GlmFamily::Poisson)).unwrap();
        assert_eq!(fit.status, FitStatus::Converged);
        assert_relative_eq!(fit.theta_hat[0], ybar.ln(), epsilon = 1e-10);
        assert_relative_eq!(fit.loglik_at_mle, n * (ybar * ybar.ln() - ybar), epsilon = 1e-10);
    }

    #[test]
    fn logistic_intercept_only() {
        let y = vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        let ybar: f64 = 5.0 / 8.0;
        let d = intercept_data(y);
        let s = ModelSupport::new(vec![0]).unwrap();
        let fit = fit_mle(GlmFamily::Logistic, &d, &s, &FitOptions::for_family(GlmFamily::Logistic)).unwrap();
        assert_eq!(fit.status, FitStatus::Converged);
        assert_relative_eq!(fit.theta_hat[0], (ybar / (1.0 - ybar)).ln(), epsilon = 1e-10);
        assert_relative_eq!(fit.logdet_fisher, linalg::logdet_from_lower(&fit.fisher_chol));
    }

    #[test]
    fn logistic_separation_detected() {
        let x = DMatrix::from_column_slice(6, 1, &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        let y = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let d = Dataset::new(x, y, None).unwrap();
        let s = ModelSupport::new(vec![0]).unwrap();
        let fit = fit_mle(GlmFamily::Logistic, &d, &s, &FitOptions::for_family(GlmFamily::Logistic)).unwrap();
        assert_eq!(fit.status, FitStatus::Separated);
    }

    #[test]
    fn poisson_all_zero_diverges() {
        let d = intercept_data(vec![0.0; 5]);
        let s = ModelSupport::new(vec![0]).unwrap();
        let fit = fit_mle(GlmFamily::Poisson, &d, &s, &FitOptions::for_family(GlmFamily::Poisson)).unwrap();
        assert_ne!(fit.status, FitStatus::Converged);
    }

    #[test]
    fn collinear_columns_are_singular() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 2.0, 4.0, -1.0, -2.0, 0.5, 1.0]);
        let d = Dataset::new(x, DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0]), None).unwrap();
        let s = ModelSupport::new(vec![0, 1]).unwrap();
        let fit = fit_mle(GlmFamily::Logistic, &d, &s, &FitOptions::for_family(GlmFamily::Logistic)).unwrap();
        assert_eq!(fit.status, FitStatus::Singular);
    }

    #[test]
    fn more_columns_than_rows_rejected() {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 1.0, 1.0]);
        let d = Dataset::new(x, DVector::from_vec(vec![1.0, 0.0]), None).unwrap();
        let s = ModelSupport::new(vec![0, 1, 2]).unwrap();
        let fit = fit_mle(GlmFamily::Logistic, &d, &s, &FitOptions::for_family(GlmFamily::Logistic)).unwrap();
        assert_eq!(fit.status, FitStatus::Singular);
        assert_eq!(fit.iterations, 0);
    }

    #[test]
    fn empty_support_gives_zero_predictor_loglik() {
        let d = intercept_data(vec![1.0, 0.0, 1.0]);
        let fit = fit_mle(GlmFamily::Logistic, &d, &ModelSupport::empty(), &FitOptions::for_family(GlmFamily::Logistic))
            .unwrap();
        assert!(fit.is_converged());
        assert_relative_eq!(fit.loglik_at_mle, -3.0 * 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn cache_reuses_fits() {
        let d = intercept_data(vec![1.0, 0.0, 1.0, 1.0]);
        let cache = FitCache::new(FitOptions::for_family(GlmFamily::Logistic), 4);
        let s = ModelSupport::new(vec![0]).unwrap();
        let a = cache.get_or_fit(GlmFamily::Logistic, &d, &s).unwrap();
        let b = cache.get_or_fit(GlmFamily::Logistic, &d, &s).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.stats(), (1, 1));
    }
}
