//! Random-design experiments: Gaussian designs, sparse truths, simulated
//! responses, and selection metrics aggregated over replications.
//!
//! Replication `r` draws everything from stream `r` of the master seed, in a
//! fixed order (chain seed, design, support, signs, magnitudes, responses).
//! Two configurations that differ only in signal magnitude therefore share
//! designs, supports, signs and the uniforms behind Bernoulli responses.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng as _, RngCore};
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ModelSupport};
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::linalg;
use crate::mle::FitCache;
use crate::prior::Hyperparams;
use crate::sampler::{enumerate_exact, model_space_size, run_chain, ChainSettings, ENUMERATION_LIMIT};

pub const SCHEMA_VERSION: u32 = 1;

/// Row distribution of the design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSpec {
    /// Independent standard normal entries.
    #[default]
    IidGaussian,
    /// Rows `N(0, Σ)` with `Σ_jk = ρ^{|j−k|}`.
    Toeplitz { rho: f64 },
    /// Rows `N(0, Σ)` with unit diagonal and constant off-diagonal `ρ`.
    Equicorrelated { rho: f64 },
    /// Rows `N(0, Σ)` for an explicit `p × p` covariance.
    Covariance { matrix: Vec<Vec<f64>> },
}

impl DesignSpec {
    fn covariance(&self, p: usize) -> Result<Option<DMatrix<f64>>> {
        let sigma = match self {
            DesignSpec::IidGaussian => return Ok(None),
            DesignSpec::Toeplitz { rho } => DMatrix::from_fn(p, p, |j, k| rho.powi((j as i32 - k as i32).abs())),
            DesignSpec::Equicorrelated { rho } => DMatrix::from_fn(p, p, |j, k| if j == k { 1.0 } else { *rho }),
            DesignSpec::Covariance { matrix } => {
                if matrix.len() != p || matrix.iter().any(|r| r.len() != p) {
                    return Err(Error::InvalidConfig(format!("covariance must be {p} x {p}")));
                }
                DMatrix::from_fn(p, p, |j, k| matrix[j][k])
            }
        };
        if (&sigma - sigma.transpose()).amax() > 0.0 {
            return Err(Error::InvalidConfig("covariance must be symmetric".into()));
        }
        Ok(Some(sigma))
    }
}

/// Nonzero coefficients of the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    /// Exactly these coefficients, in support order.
    Values { values: Vec<f64> },
    /// Magnitudes uniform on `[min, max]` with independent random signs.
    Range { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub schema_version: u32,
    pub family: GlmFamily,
    pub n: usize,
    pub p: usize,
    pub s0: usize,
    pub signal: SignalSpec,
    #[serde(default)]
    pub design: DesignSpec,
    /// Fixed true support; drawn uniformly per replication when absent.
    #[serde(default)]
    pub support: Option<ModelSupport>,
    pub seed: u64,
    pub replications: usize,
    pub hyperparams: Hyperparams,
    /// Chain settings; the seed field is replaced per replication.
    pub chain: ChainSettings,
    /// Use exact enumeration instead of the chain when the model space is small.
    #[serde(default)]
    pub exact_when_feasible: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.n == 0 || self.p == 0 || self.replications == 0 {
            return bad("n, p and replications must be positive".into());
        }
        if self.s0 > self.hyperparams.s_max {
            return bad(format!("s0 = {} exceeds s_max = {}", self.s0, self.hyperparams.s_max));
        }
        self.hyperparams.validate(self.n, self.p)?;
        match &self.signal {
            SignalSpec::Values { values } => {
                if values.len() != self.s0 {
                    return bad(format!("{} signal values given for s0 = {}", values.len(), self.s0));
                }
                if values.iter().any(|v| !v.is_finite() || *v == 0.0) {
                    return bad("signal values must be finite and nonzero".into());
                }
            }
            SignalSpec::Range { min, max } => {
                if !(*min >= 0.0 && max >= min && max.is_finite()) {
                    return bad(format!("invalid magnitude range [{min}, {max}]"));
                }
                if *min == 0.0 && *max == 0.0 && self.s0 > 0 {
                    return bad("zero magnitudes require s0 = 0".into());
                }
            }
        }
        if let Some(s) = &self.support {
            s.check_within(self.p)?;
            if s.len() != self.s0 {
                return bad(format!("fixed support has {} indices for s0 = {}", s.len(), self.s0));
            }
        }
        if let DesignSpec::Toeplitz { rho } | DesignSpec::Equicorrelated { rho } = self.design {
            if !(rho.abs() < 1.0) {
                return bad(format!("correlation {rho} outside (-1, 1)"));
            }
        }
        self.chain.validate()
    }
}

/// `n × p` design with rows i.i.d. `N(0, I)` or `N(0, Σ)` (via `Σ = LLᵀ`).
pub fn gen_design(n: usize, p: usize, design: &DesignSpec, rng: &mut crate::Rng) -> Result<DMatrix<f64>> {
    // Draw row by row so the stream does not depend on storage order.
    let mut z = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    match design.covariance(p)? {
        None => Ok(z),
        Some(sigma) => {
            let l = linalg::cholesky_lower(&sigma)?;
            Ok(z * l.transpose())
        }
    }
}

/// One response per row: Bernoulli for logistic, Poisson for Poisson.
///
/// Bernoulli draws compare one uniform per observation with the mean, so
/// responses are monotone in the mean under a shared stream.
pub fn gen_response(
    family: GlmFamily,
    x: &DMatrix<f64>,
    theta0: &DVector<f64>,
    rng: &mut crate::Rng,
) -> Result<DVector<f64>> {
    if theta0.len() != x.ncols() {
        return Err(Error::DimensionMismatch { expected: x.ncols(), got: theta0.len() });
    }
    let eta = x * theta0;
    let mut y = DVector::zeros(x.nrows());
    for (yi, &e) in y.iter_mut().zip(eta.iter()) {
        let mu = family.mean(e)?;
        *yi = match family {
            GlmFamily::Logistic => f64::from(rng.random::<f64>() < mu),
            GlmFamily::Poisson => {
                if mu > 0.0 {
                    Poisson::new(mu).map_err(|_| Error::Saturation { eta: e })?.sample(rng)
                } else {
                    0.0
                }
            }
        };
    }
    Ok(y)
}

/// Sparse truth: support (fixed or uniform), then signs, then magnitudes.
pub fn gen_truth(cfg: &SimConfig, rng: &mut crate::Rng) -> (ModelSupport, DVector<f64>) {
    let support = match &cfg.support {
        Some(s) => s.clone(),
        None => ModelSupport::new(index::sample(rng, cfg.p, cfg.s0).into_vec()).expect("distinct indices"),
    };
    let signs: Vec<f64> = (0..cfg.s0).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let values: Vec<f64> = match &cfg.signal {
        SignalSpec::Values { values } => values.clone(),
        SignalSpec::Range { min, max } => signs
            .iter()
            .map(|s| {
                let u: f64 = rng.random();
                s * (min + (max - min) * u)
            })
            .collect(),
    };
    let mut theta = DVector::zeros(cfg.p);
    for (&j, v) in support.indices().iter().zip(values) {
        theta[j] = v;
    }
    (ModelSupport::of_nonzero(theta.as_slice()), theta)
}

/// One simulated data set together with its truth.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub data: Dataset,
    pub theta0: DVector<f64>,
    pub true_support: ModelSupport,
    pub chain_seed: u64,
}

/// Generates replication `r` of `cfg`.
pub fn gen_replicate(cfg: &SimConfig, r: u64) -> Result<Replicate> {
    let mut rng = crate::rng_for(cfg.seed, r);
    let chain_seed = rng.next_u64();
    let x = gen_design(cfg.n, cfg.p, &cfg.design, &mut rng)?;
    let (true_support, theta0) = gen_truth(cfg, &mut rng);
    let y = gen_response(cfg.family, &x, &theta0, &mut rng)?;
    let data = Dataset::for_family(cfg.family, x, y, None)?;
    Ok(Replicate { data, theta0, true_support, chain_seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorMethod {
    Chain,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub replication: u64,
    pub true_support: ModelSupport,
    pub modal_model: ModelSupport,
    pub recovered: bool,
    /// Posterior probability (exact) or visit frequency (chain) of `S₀`.
    pub posterior_mass_truth: f64,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub method: PosteriorMethod,
    pub acceptance_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub schema_version: u32,
    pub replications: usize,
    pub exact_recovery_rate: f64,
    pub mean_posterior_mass_truth: f64,
    /// Standard error of the mean posterior mass across replications.
    pub se_posterior_mass_truth: f64,
    pub mean_false_positives: f64,
    pub mean_false_negatives: f64,
    pub per_replication: Vec<ReplicationResult>,
}

impl SelectionMetrics {
    fn aggregate(per_replication: Vec<ReplicationResult>) -> Self {
        let m = per_replication.len() as f64;
        let mass: Vec<f64> = per_replication.iter().map(|r| r.posterior_mass_truth).collect();
        let mean = mass.iter().sum::<f64>() / m;
        let var = if m > 1.0 { mass.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
        Self {
            schema_version: SCHEMA_VERSION,
            replications: per_replication.len(),
            exact_recovery_rate: per_replication.iter().filter(|r| r.recovered).count() as f64 / m,
            mean_posterior_mass_truth: mean,
            se_posterior_mass_truth: (var / m).sqrt(),
            mean_false_positives: per_replication.iter().map(|r| r.false_positives as f64).sum::<f64>() / m,
            mean_false_negatives: per_replication.iter().map(|r| r.false_negatives as f64).sum::<f64>() / m,
            per_replication,
        }
    }
}

/// Posterior analysis of one replicate.
pub fn analyse_replicate(cfg: &SimConfig, rep: &Replicate, r: u64) -> Result<ReplicationResult> {
    let family = cfg.family;
    let h = &cfg.hyperparams;
    let cache = FitCache::for_family(family);
    let exact = cfg.exact_when_feasible && model_space_size(cfg.p, h.s_max) <= ENUMERATION_LIMIT;
    let (modal, mass, method, acc) = if exact {
        let post = enumerate_exact(&rep.data, family, h, &cache)?;
        let modal = post.models.first().map(|m| m.support.clone()).ok_or(Error::InvalidInit)?;
        (modal, post.probability(&rep.true_support), PosteriorMethod::Exact, None)
    } else {
        let mut settings = cfg.chain.clone();
        settings.seed = rep.chain_seed;
        let summary = run_chain(&rep.data, family, h, &settings, &cache)?;
        let modal = summary.modal_model().cloned().unwrap_or_default();
        let mass = summary.frequencies().get(&rep.true_support).copied().unwrap_or(0.0);
        (modal, mass, PosteriorMethod::Chain, Some(summary.acceptance_rate))
    };
    let s0 = &rep.true_support;
    Ok(ReplicationResult {
        replication: r,
        true_support: s0.clone(),
        recovered: &modal == s0,
        posterior_mass_truth: mass,
        false_positives: modal.indices().iter().filter(|j| !s0.contains(**j)).count(),
        false_negatives: s0.indices().iter().filter(|j| !modal.contains(**j)).count(),
        modal_model: modal,
        method,
        acceptance_rate: acc,
    })
}

/// Runs every replication (in parallel) and aggregates in replication order.
pub fn run_experiment(cfg: &SimConfig) -> Result<SelectionMetrics> {
    cfg.validate()?;
    let results = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| {
            let rep = gen_replicate(cfg, r)?;
            analyse_replicate(cfg, &rep, r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectionMetrics::aggregate(results))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> SimConfig {
        SimConfig {
            schema_version: SCHEMA_VERSION,
            family: GlmFamily::Logistic,
            n: 100,
            p: 8,
            s0: 2,
            signal: SignalSpec::Range { min: 1.5, max: 1.5 },
            design: DesignSpec::IidGaussian,
            support: None,
            seed: 5,
            replications: 3,
            hyperparams: Hyperparams::recommended(3),
            chain: ChainSettings::new(2_000, 0),
            exact_when_feasible: false,
        }
    }

    #[test]
    fn design_moments() {
        let mut rng = crate::rng_for(1, 0);
        let x = gen_design(1000, 1000, &DesignSpec::IidGaussian, &mut rng).unwrap();
        let m = x.mean();
        let v = x.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (x.len() as f64 - 1.0);
        assert!(m.abs() < 4e-3, "mean {m}");
        assert!((v - 1.0).abs() < 6e-3, "variance {v}");
    }

    #[test]
    fn design_is_reproducible() {
        let a = gen_design(20, 5, &DesignSpec::Toeplitz { rho: 0.5 }, &mut crate::rng_for(3, 2)).unwrap();
        let b = gen_design(20, 5, &DesignSpec::Toeplitz { rho: 0.5 }, &mut crate::rng_for(3, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn correlated_design_covariance() {
        let mut rng = crate::rng_for(4, 0);
        let x = gen_design(40_000, 3, &DesignSpec::Equicorrelated { rho: 0.6 }, &mut rng).unwrap();
        let s = x.transpose() * &x / 40_000.0;
        assert!((s[(0, 1)] - 0.6).abs() < 0.03);
        assert!((s[(2, 2)] - 1.0).abs() < 0.03);
        let bad = DesignSpec::Equicorrelated { rho: -0.9 };
        assert!(gen_design(5, 3, &bad, &mut rng).is_err());
    }

    #[test]
    fn response_means() {
        let mut rng = crate::rng_for(6, 0);
        let n = 20_000;
        let x = gen_design(n, 3, &DesignSpec::IidGaussian, &mut rng).unwrap();
        let zero = DVector::zeros(3);
        let yl = gen_response(GlmFamily::Logistic, &x, &zero, &mut rng).unwrap();
        assert!((yl.mean() - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
        let yp = gen_response(GlmFamily::Poisson, &x, &zero, &mut rng).unwrap();
        assert!((yp.mean() - 1.0).abs() < 4.0 * (1.0 / n as f64).sqrt());
        let t = DVector::from_vec(vec![0.5, -0.3, 0.2]);
        for family in [GlmFamily::Logistic, GlmFamily::Poisson] {
            let y = gen_response(family, &x, &t, &mut rng).unwrap();
            let eta = &x * &t;
            let resid: Vec<f64> = y.iter().zip(eta.iter()).map(|(yi, e)| yi - family.mean(*e).unwrap()).collect();
            let mean = resid.iter().sum::<f64>() / n as f64;
            let sd = (resid.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
            assert!(mean.abs() < 4.0 * sd / (n as f64).sqrt(), "{family}: {mean}");
        }
    }

    #[test]
    fn poisson_response_overflow_is_an_error() {
        let x = DMatrix::from_element(1, 1, 1.0);
        let t = DVector::from_element(1, 800.0);
        assert!(gen_response(GlmFamily::Poisson, &x, &t, &mut crate::rng_for(0, 0)).is_err());
    }

    #[test]
    fn replicates_are_paired_across_magnitudes() {
        let cfg = base_config();
        let mut other = cfg.clone();
        other.signal = SignalSpec::Range { min: 0.25, max: 0.25 };
        let a = gen_replicate(&cfg, 1).unwrap();
        let b = gen_replicate(&other, 1).unwrap();
        assert_eq!(a.data.x(), b.data.x());
        assert_eq!(a.true_support, b.true_support);
        for j in a.true_support.indices() {
            assert_eq!(a.theta0[*j].signum(), b.theta0[*j].signum());
            assert_eq!(a.theta0[*j].abs(), 1.5);
        }
    }

    #[test]
    fn experiment_is_reproducible() {
        let cfg = base_config();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.exact_recovery_rate));
        assert_eq!(a.per_replication.len(), 3);
    }

    #[test]
    fn zero_signal_selects_empty_model() {
        let mut cfg = base_config();
        cfg.s0 = 0;
        cfg.signal = SignalSpec::Values { values: vec![] };
        cfg.exact_when_feasible = true;
        cfg.replications = 10;
        let m = run_experiment(&cfg).unwrap();
        assert!(m.exact_recovery_rate >= 0.8, "{}", m.exact_recovery_rate);
        assert!(m.per_replication.iter().all(|r| r.true_support.is_empty()));
    }

    #[test]
    fn chain_and_enumeration_agree() {
        let mut cfg = base_config();
        cfg.replications = 2;
        cfg.chain = ChainSettings::new(100_000, 0);
        let chain = run_experiment(&cfg).unwrap();
        cfg.exact_when_feasible = true;
        let exact = run_experiment(&cfg).unwrap();
        for (c, e) in chain.per_replication.iter().zip(&exact.per_replication) {
            assert_eq!(c.method, PosteriorMethod::Chain);
            assert_eq!(e.method, PosteriorMethod::Exact);
            assert!((c.posterior_mass_truth - e.posterior_mass_truth).abs() <= 0.05);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = base_config();
        cfg.s0 = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = base_config();
        cfg.schema_version = 99;
        assert!(cfg.validate().is_err());
        let mut cfg = base_config();
        cfg.signal = SignalSpec::Values { values: vec![1.0] };
        assert!(cfg.validate().is_err());
    }
}
