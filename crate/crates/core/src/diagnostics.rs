//! Design and misspecification quantities evaluated on concrete instances.
//!
//! Every function takes the full-dimensional truth `θ₀` explicitly. These are
//! verification tools for simulated data; nothing here is used when fitting.
//! Quantities indexed by a support are evaluated at the population optimiser
//! `θ*_S` (see [`crate::mle::theta_star`]).

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{predictor_sparse, Dataset, ModelSupport};
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::glm;
use crate::linalg;
use crate::mle::{theta_star_fit, FitOptions};
use crate::sampler::model_space_size;

/// Largest number of supports visited by [`compat_numbers`].
pub const COMPAT_ENUMERATION_LIMIT: u128 = 100_000;
/// Largest support size for the sign-pattern enumeration behind `φ₁`.
pub const COMPAT_MAX_SUPPORT: usize = 12;

struct PopulationFit {
    theta: DVector<f64>,
    fisher: DMatrix<f64>,
    score: DVector<f64>,
    xs: DMatrix<f64>,
    eta: DVector<f64>,
}

/// `θ*_S`, with Fisher information and observed-data score there.
fn population_fit(family: GlmFamily, data: &Dataset, s: &ModelSupport, theta0: &DVector<f64>) -> Result<PopulationFit> {
    let fit = theta_star_fit(family, data, s, theta0, &FitOptions::for_family(family))?;
    let xs = data.columns(s)?;
    let eta = predictor_sparse(&xs, &fit.theta_hat);
    let fisher = glm::fisher_from_predictor(family, &xs, &eta)?;
    let mut score = DVector::zeros(s.len());
    for (i, (&yi, &ei)) in data.y().iter().zip(eta.iter()).enumerate() {
        let r = family.residual(yi, ei)?;
        score.axpy(r, &xs.row(i).transpose(), 1.0);
    }
    Ok(PopulationFit { theta: fit.theta_hat, fisher, score, xs, eta })
}

/// `ξ_{n,S} = F_{n,θ*_S}^{-1/2} L̇_{n,θ*_S}` with the symmetric inverse root.
pub fn normalized_score(
    family: GlmFamily,
    data: &Dataset,
    s: &ModelSupport,
    theta0: &DVector<f64>,
) -> Result<DVector<f64>> {
    let pf = population_fit(family, data, s, theta0)?;
    Ok(linalg::sym_inv_sqrt(&pf.fisher)? * pf.score)
}

/// `(Δ_mis, Δ̃_mis)`: largest eigenvalues of `F^{-1/2} V F^{-1/2}` and
/// `V^{-1/2} F V^{-1/2}`, with `F = F_{n,θ*_S}` and `V = V_{n,S}`.
pub fn delta_mis(family: GlmFamily, data: &Dataset, s: &ModelSupport, theta0: &DVector<f64>) -> Result<(f64, f64)> {
    let pf = population_fit(family, data, s, theta0)?;
    let v = glm::v_matrix(family, data, s, theta0)?;
    Ok((linalg::whitened_lambda_max(&pf.fisher, &v)?, linalg::whitened_lambda_max(&v, &pf.fisher)?))
}

fn regularity_from(xs: &DMatrix<f64>, w: &DVector<f64>) -> Result<f64> {
    // F = RᵀR, so ‖F^{-1/2} x‖₂ = ‖R^{-T} x‖₂.
    let r = linalg::weighted_r_factor(xs, w)?;
    let mut zeta: f64 = 0.0;
    for i in 0..xs.nrows() {
        let z = r
            .tr_solve_upper_triangular(&xs.row(i).transpose())
            .ok_or(Error::NotPositiveDefinite)?;
        zeta = zeta.max(z.norm());
    }
    Ok(zeta)
}

/// `ζ_{n,S} = max_i ‖F_{n,θ*_S}^{-1/2} x_{i,S}‖₂`.
pub fn design_regularity(family: GlmFamily, data: &Dataset, s: &ModelSupport, theta0: &DVector<f64>) -> Result<f64> {
    let pf = population_fit(family, data, s, theta0)?;
    regularity_from(&pf.xs, &glm::variance_weights(family, &pf.eta)?)
}

/// `n·‖F_{n,θ*_S}^{-1}‖_∞` (maximum absolute row sum).
pub fn kappa_n(family: GlmFamily, data: &Dataset, s: &ModelSupport, theta0: &DVector<f64>) -> Result<f64> {
    let pf = population_fit(family, data, s, theta0)?;
    Ok(data.n() as f64 * max_row_sum(&linalg::spd_inverse(&pf.fisher)?))
}

fn max_row_sum(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatNumbers {
    pub s_level: usize,
    pub phi1: f64,
    pub phi2: f64,
}

/// `Σ = n^{-1} Xᵀ diag(w) X`.
pub fn weighted_covariance(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    glm::weighted_gram(x, w) / x.nrows() as f64
}

/// `min |T|·θᵀΣ_TTθ / ‖θ‖₁²` over `θ` with every coordinate of `T` nonzero.
///
/// On each sign orthant `σ` the minimiser of `θᵀΣθ` subject to `σᵀθ = 1` is
/// `Σ^{-1}σ / σᵀΣ^{-1}σ`; it counts only when it lies inside the orthant.
/// Boundary minima are attained by smaller supports with a smaller factor
/// `|T|`, so they are covered when those supports are visited.
fn phi1_sq_on(sigma_tt: &DMatrix<f64>) -> f64 {
    let k = sigma_tt.nrows();
    let Ok(l) = linalg::cholesky_lower(sigma_tt) else {
        return 0.0;
    };
    let mut best = f64::INFINITY;
    for mask in 0u32..(1u32 << (k - 1)) {
        let sign = DVector::from_fn(k, |i, _| if i > 0 && mask & (1 << (i - 1)) != 0 { -1.0 } else { 1.0 });
        let z = linalg::chol_solve(&l, &sign);
        if sign.iter().zip(z.iter()).all(|(s, zi)| s * zi > 0.0) {
            best = best.min(k as f64 / sign.dot(&z));
        }
    }
    best
}

/// Uniform compatibility number `φ₁(s; W)` and sparse singular value
/// `φ₂(s; W)` by enumeration over supports of size at most `s_level`.
///
/// `φ₂²` is the minimum over supports of size exactly `s_level` of
/// `λ_min(Σ_SS)`, which by eigenvalue interlacing equals the minimum over all
/// sizes up to `s_level`.
pub fn compat_numbers(x: &DMatrix<f64>, w: &DVector<f64>, s_level: usize) -> Result<CompatNumbers> {
    let (n, p) = x.shape();
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.len() });
    }
    if s_level == 0 {
        return Err(Error::InvalidConfig("sparsity level must be at least 1".into()));
    }
    let s = s_level.min(p);
    if s > COMPAT_MAX_SUPPORT {
        return Err(Error::GuardExceeded { count: s as u128, limit: COMPAT_MAX_SUPPORT as u128 });
    }
    let count = model_space_size(p, s) - 1;
    if count > COMPAT_ENUMERATION_LIMIT {
        return Err(Error::GuardExceeded { count, limit: COMPAT_ENUMERATION_LIMIT });
    }
    let sigma = weighted_covariance(x, w);
    let sub = |t: &[usize]| DMatrix::from_fn(t.len(), t.len(), |a, b| sigma[(t[a], t[b])]);
    let phi1_sq = (1..=s)
        .flat_map(|k| (0..p).combinations(k))
        .par_bridge()
        .map(|t| phi1_sq_on(&sub(&t)))
        .reduce(|| f64::INFINITY, f64::min);
    let phi2_sq = (0..p)
        .combinations(s)
        .par_bridge()
        .map(|t| linalg::sym_extremes(&sub(&t)).0)
        .reduce(|| f64::INFINITY, f64::min);
    Ok(CompatNumbers { s_level, phi1: phi1_sq.max(0.0).sqrt(), phi2: phi2_sq.max(0.0).sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarDiagnostics {
    pub sigma_min_sq: f64,
    pub sigma_max_sq: f64,
    pub nu_n: f64,
    /// `min_{j ∈ S₀} |θ₀ⱼ|`; `None` when `θ₀ = 0`.
    pub beta_min: Option<f64>,
}

/// `ν = (1 + 2/(e·ln 2))·(1 + σ²_max/ln 2)`.
pub fn nu_from_sigma_max_sq(sigma_max_sq: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    (1.0 + 2.0 / (std::f64::consts::E * ln2)) * (1.0 + sigma_max_sq / ln2)
}

/// Extremes of `b''(x_iᵀθ₀)`, `ν_n` and the beta-min threshold.
pub fn scalar_diags(family: GlmFamily, data: &Dataset, theta0: &DVector<f64>) -> Result<ScalarDiagnostics> {
    let w = glm::variance_weights(family, &data.linear_predictor(theta0)?)?;
    let sigma_min_sq = w.min();
    let sigma_max_sq = w.max();
    let beta_min = theta0.iter().filter(|v| **v != 0.0).map(|v| v.abs()).reduce(f64::min);
    Ok(ScalarDiagnostics { sigma_min_sq, sigma_max_sq, nu_n: nu_from_sigma_max_sq(sigma_max_sq), beta_min })
}

/// Remainder of the second-order expansion of `L` around `θ₀`:
/// `L(θ) − L(θ₀) − (θ−θ₀)ᵀL̇(θ₀) + ½(θ−θ₀)ᵀF(θ₀)(θ−θ₀)`.
///
/// The responses cancel, leaving `−Σ_i [b(η_i) − b(η₀ᵢ) − b'(η₀ᵢ)d_i − ½b''(η₀ᵢ)d_i²]`
/// with `d = η − η₀`, which is what is evaluated.
pub fn quad_residual(family: GlmFamily, data: &Dataset, theta: &DVector<f64>, theta0: &DVector<f64>) -> Result<f64> {
    let eta = data.linear_predictor(theta)?;
    let eta0 = data.linear_predictor(theta0)?;
    let mut r = 0.0;
    for (&e, &e0) in eta.iter().zip(eta0.iter()) {
        let d = e - e0;
        let term = match family {
            GlmFamily::Poisson => {
                family.cumulant(e)?;
                e0.exp() * (d.exp_m1() - d - 0.5 * d * d)
            }
            GlmFamily::Logistic => {
                let v0 = family.link_values(e0)?;
                family.cumulant(e)? - v0.b - v0.b1 * d - 0.5 * v0.b2 * d * d
            }
        };
        r -= term;
    }
    Ok(r)
}

/// Lower bound on `sup_{‖u‖₂=1} n^{-1} Σ_i |x_{i,S}ᵀu|³` from random starts
/// followed by the ascent iteration `u ← ∇f(u)/‖∇f(u)‖`, which never decreases
/// a convex homogeneous `f` on the sphere. Approximate: the true supremum may
/// be larger.
pub fn k_cubic_lower(xs: &DMatrix<f64>, starts: usize, rng: &mut crate::Rng) -> f64 {
    let (n, k) = xs.shape();
    if k == 0 || n == 0 {
        return 0.0;
    }
    let f = |u: &DVector<f64>| (xs * u).iter().map(|z| z.abs().powi(3)).sum::<f64>() / n as f64;
    let mut best: f64 = 0.0;
    for _ in 0..starts.max(1) {
        let mut u = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        u /= u.norm();
        let mut val = f(&u);
        for _ in 0..200 {
            let z = xs * &u;
            let g = xs.transpose() * z.map(|v| v.abs() * v);
            let norm = g.norm();
            if norm == 0.0 {
                break;
            }
            let next = g / norm;
            let nv = f(&next);
            let done = nv <= val * (1.0 + 1e-12);
            if nv > val {
                u = next;
                val = nv;
            }
            if done {
                break;
            }
        }
        best = best.max(val);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsOptions {
    /// Sparsity levels at which `φ₁, φ₂` are evaluated; skipped levels are
    /// reported as `None` when the enumeration guard trips.
    pub s_levels: Vec<usize>,
    /// Perturbation sizes for the quadratic-expansion remainder.
    pub quad_eps: Vec<f64>,
    pub k_cubic_starts: usize,
    pub seed: u64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { s_levels: vec![1, 2], quad_eps: vec![2e-3, 1e-3, 5e-4], k_cubic_starts: 20, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportDiagnostics {
    pub support: ModelSupport,
    pub is_superset: bool,
    pub xi_norm: Option<f64>,
    pub delta_mis: Option<f64>,
    pub delta_mis_tilde: Option<f64>,
    pub zeta: Option<f64>,
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
    pub kappa_n: Option<f64>,
    /// Approximate lower bound.
    pub k_cubic_lower: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatRecord {
    pub s_level: usize,
    pub phi1: Option<f64>,
    pub phi2: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSample {
    pub epsilon: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub family: GlmFamily,
    pub n: usize,
    pub p: usize,
    pub true_support: ModelSupport,
    pub supports: Vec<SupportDiagnostics>,
    pub compat: Vec<CompatRecord>,
    pub scalars: ScalarDiagnostics,
    /// `r_n(θ₀ + εu)` for a fixed unit direction `u` on the true support.
    pub quad_residual: Vec<QuadSample>,
}

fn support_record(
    family: GlmFamily,
    data: &Dataset,
    s: &ModelSupport,
    theta0: &DVector<f64>,
    s0: &ModelSupport,
    rng: &mut crate::Rng,
    starts: usize,
) -> SupportDiagnostics {
    let mut rec = SupportDiagnostics {
        support: s.clone(),
        is_superset: s.is_superset_of(s0),
        xi_norm: None,
        delta_mis: None,
        delta_mis_tilde: None,
        zeta: None,
        rho_min: None,
        rho_max: None,
        kappa_n: None,
        k_cubic_lower: None,
        error: None,
    };
    let run = |rec: &mut SupportDiagnostics, rng: &mut crate::Rng| -> Result<()> {
        let pf = population_fit(family, data, s, theta0)?;
        let (lo, hi) = if s.is_empty() { (0.0, 0.0) } else { linalg::sym_extremes(&pf.fisher) };
        rec.rho_min = Some(lo);
        rec.rho_max = Some(hi);
        rec.k_cubic_lower = Some(k_cubic_lower(&pf.xs, starts, rng));
        if s.is_empty() {
            return Ok(());
        }
        rec.xi_norm = Some((linalg::sym_inv_sqrt(&pf.fisher)? * &pf.score).norm());
        let v = glm::v_matrix(family, data, s, theta0)?;
        rec.delta_mis = Some(linalg::whitened_lambda_max(&pf.fisher, &v)?);
        rec.delta_mis_tilde = Some(linalg::whitened_lambda_max(&v, &pf.fisher)?);
        rec.zeta = Some(regularity_from(&pf.xs, &glm::variance_weights(family, &pf.eta)?)?);
        rec.kappa_n = Some(data.n() as f64 * max_row_sum(&linalg::spd_inverse(&pf.fisher)?));
        debug_assert_eq!(pf.theta.len(), s.len());
        Ok(())
    };
    if let Err(e) = run(&mut rec, rng) {
        rec.error = Some(e.to_string());
    }
    rec
}

/// Evaluates every diagnostic for the given supports and truth.
///
/// Failures tied to one support or one sparsity level (singular matrices,
/// enumeration guards) are recorded in the report rather than aborting it.
pub fn diagnose(
    family: GlmFamily,
    data: &Dataset,
    theta0: &DVector<f64>,
    supports: &[ModelSupport],
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsReport> {
    if theta0.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), got: theta0.len() });
    }
    for s in supports {
        s.check_within(data.p())?;
    }
    let s0 = ModelSupport::of_nonzero(theta0.as_slice());
    let records = supports
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let mut rng = crate::rng_for(opts.seed, k as u64);
            support_record(family, data, s, theta0, &s0, &mut rng, opts.k_cubic_starts)
        })
        .collect();

    let w0 = glm::variance_weights(family, &data.linear_predictor(theta0)?)?;
    let compat = opts
        .s_levels
        .iter()
        .map(|&s| match compat_numbers(data.x(), &w0, s) {
            Ok(c) => CompatRecord { s_level: s, phi1: Some(c.phi1), phi2: Some(c.phi2), error: None },
            Err(e) => CompatRecord { s_level: s, phi1: None, phi2: None, error: Some(e.to_string()) },
        })
        .collect();

    let mut rng = crate::rng_for(opts.seed, u64::MAX);
    let dir_support = if s0.is_empty() { ModelSupport::new(vec![0])? } else { s0.clone() };
    let mut u = DVector::zeros(data.p());
    for &j in dir_support.indices() {
        u[j] = rng.sample::<f64, _>(StandardNormal);
    }
    u /= u.norm();
    let quad = opts
        .quad_eps
        .iter()
        .map(|&eps| {
            let theta = theta0 + &u * eps;
            quad_residual(family, data, &theta, theta0).map(|residual| QuadSample { epsilon: eps, residual })
        })
        .collect::<Result<_>>()?;

    Ok(DiagnosticsReport {
        family,
        n: data.n(),
        p: data.p(),
        true_support: s0,
        supports: records,
        compat,
        scalars: scalar_diags(family, data, theta0)?,
        quad_residual: quad,
    })
}
