//! Metropolis-Hastings over supports with add/delete/swap neighbourhoods,
//! and exact enumeration of the model posterior for small `p`.
//!
//! Proposals are drawn uniformly from `N(S) = N_add(S) ∪ N_del(S) ∪ N_swap(S)`
//! without materialising the set: one uniform integer below `|N(S)|` is
//! decoded into a move class and the indices involved.

use std::collections::HashMap;

use itertools::Itertools;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ModelSupport};
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::marginal::{log_posterior_weight, LogWeight};
use crate::mle::FitCache;
use crate::prior::Hyperparams;

/// Largest number of supports [`enumerate_exact`] will visit.
pub const ENUMERATION_LIMIT: u128 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodCounts {
    pub n_add: usize,
    pub n_del: usize,
    pub n_swap: usize,
}

impl NeighborhoodCounts {
    pub fn total(&self) -> usize {
        self.n_add + self.n_del + self.n_swap
    }
}

pub fn neighborhood_counts(s: &ModelSupport, p: usize, s_max: usize) -> NeighborhoodCounts {
    let k = s.len();
    let free = p.saturating_sub(k);
    NeighborhoodCounts { n_add: if k < s_max { free } else { 0 }, n_del: k, n_swap: k * free }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub support: ModelSupport,
    /// `log q(S'|S) = −log|N(S)|`.
    pub log_q_fwd: f64,
    /// `log q(S|S') = −log|N(S')|`.
    pub log_q_rev: f64,
}

/// The `r`-th (0-based) index in `0..p` not contained in `s`.
fn nth_outside(s: &ModelSupport, r: usize) -> usize {
    let mut j = r;
    for &i in s.indices() {
        if i <= j {
            j += 1;
        } else {
            break;
        }
    }
    j
}

/// Decodes the `r`-th element of `N(S)` in the order add, delete, swap.
fn decode_move(s: &ModelSupport, p: usize, counts: &NeighborhoodCounts, r: usize) -> ModelSupport {
    if r < counts.n_add {
        return s.with(nth_outside(s, r));
    }
    let r = r - counts.n_add;
    if r < counts.n_del {
        return s.without(s.indices()[r]);
    }
    let r = r - counts.n_del;
    let free = p - s.len();
    let out = s.indices()[r / free];
    s.without(out).with(nth_outside(s, r % free))
}

/// Draws `S'` uniformly from `N(S)`.
pub fn propose(s: &ModelSupport, p: usize, s_max: usize, rng: &mut crate::Rng) -> Result<Proposal> {
    if s.len() > s_max {
        return Err(Error::InvalidSupport(format!("|S| = {} exceeds s_max = {s_max}", s.len())));
    }
    s.check_within(p)?;
    let fwd = neighborhood_counts(s, p, s_max);
    let total = fwd.total();
    if total == 0 {
        return Err(Error::EmptyNeighborhood);
    }
    let r = rng.random_range(0..total);
    let support = decode_move(s, p, &fwd, r);
    let rev = neighborhood_counts(&support, p, s_max).total();
    Ok(Proposal { support, log_q_fwd: -(total as f64).ln(), log_q_rev: -(rev as f64).ln() })
}

/// Every element of `N(S)`, in the order used by [`propose`].
pub fn neighborhood(s: &ModelSupport, p: usize, s_max: usize) -> Vec<ModelSupport> {
    let counts = neighborhood_counts(s, p, s_max);
    (0..counts.total()).map(|r| decode_move(s, p, &counts, r)).collect()
}

/// `log min{1, π̂(S') q(S|S') / (π̂(S) q(S'|S))}`.
pub fn log_acceptance(current: f64, proposed: f64, log_q_fwd: f64, log_q_rev: f64) -> f64 {
    if proposed == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    (proposed + log_q_rev - current - log_q_fwd).min(0.0)
}

/// Acceptance probability for a proposal from `current` with weight `proposed`.
pub fn acceptance_prob(current: f64, proposed: f64, log_q_fwd: f64, log_q_rev: f64) -> f64 {
    log_acceptance(current, proposed, log_q_fwd, log_q_rev).exp()
}

/// State of one chain. The chain owns its random stream.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub current: ModelSupport,
    pub current_logweight: LogWeight,
    pub iteration: u64,
    pub accepted: u64,
    rng: crate::Rng,
}

impl ChainState {
    /// Starts a chain at `init`; fails unless `init` has finite weight.
    pub fn new(
        init: ModelSupport,
        data: &Dataset,
        family: GlmFamily,
        h: &Hyperparams,
        cache: &FitCache,
        rng: crate::Rng,
    ) -> Result<Self> {
        init.check_within(data.p())?;
        let w = log_posterior_weight(&init, data, family, h, cache)?;
        if !w.is_finite() {
            return Err(Error::InvalidInit);
        }
        Ok(Self { current: init, current_logweight: w, iteration: 0, accepted: 0, rng })
    }
}

/// One Metropolis-Hastings update. Returns whether the proposal was accepted.
///
/// The acceptance uniform is drawn on every step so the random stream
/// advances identically whatever the outcome.
pub fn mh_step(
    state: &mut ChainState,
    data: &Dataset,
    family: GlmFamily,
    h: &Hyperparams,
    cache: &FitCache,
) -> Result<bool> {
    let prop = propose(&state.current, data.p(), h.s_max, &mut state.rng)?;
    let u: f64 = state.rng.random();
    let w = log_posterior_weight(&prop.support, data, family, h, cache)?;
    let log_a = log_acceptance(state.current_logweight.value, w.value, prop.log_q_fwd, prop.log_q_rev);
    state.iteration += 1;
    let accept = u.ln() < log_a;
    if accept {
        state.current = prop.support;
        state.current_logweight = w;
        state.accepted += 1;
    }
    Ok(accept)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSettings {
    /// Total iterations per chain, burn-in included.
    pub n_iter: usize,
    /// Defaults to `n_iter / 10`.
    #[serde(default)]
    pub n_burnin: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub chains: usize,
    /// Defaults to the empty model.
    #[serde(default)]
    pub init: Option<ModelSupport>,
}

fn one() -> usize {
    1
}

impl ChainSettings {
    pub fn new(n_iter: usize, seed: u64) -> Self {
        Self { n_iter, n_burnin: None, seed, chains: 1, init: None }
    }

    pub fn burnin(&self) -> usize {
        self.n_burnin.unwrap_or(self.n_iter / 10)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter <= self.burnin() {
            return Err(Error::InvalidConfig(format!(
                "n_iter ({}) must exceed n_burnin ({})",
                self.n_iter,
                self.burnin()
            )));
        }
        if self.chains == 0 {
            return Err(Error::InvalidConfig("at least one chain is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVisit {
    pub support: ModelSupport,
    pub visits: u64,
    pub frequency: f64,
    pub log_weight: f64,
    pub log_prior: f64,
    pub log_laplace: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub inclusion_prob: Vec<f64>,
    /// Visited models, most visited first (ties by support order).
    pub top_models: Vec<ModelVisit>,
    pub acceptance_rate: f64,
    pub n_iter: usize,
    pub n_burnin: usize,
    pub chains: usize,
    pub distinct_models: usize,
}

impl PosteriorSummary {
    fn from_counts(
        p: usize,
        counts: HashMap<ModelSupport, (u64, LogWeight)>,
        accepted: u64,
        proposed: u64,
        n_iter: usize,
        n_burnin: usize,
        chains: usize,
    ) -> Self {
        let total: u64 = counts.values().map(|c| c.0).sum();
        let mut incl = vec![0u64; p];
        for (s, (v, _)) in &counts {
            for &j in s.indices() {
                incl[j] += v;
            }
        }
        let mut top_models: Vec<ModelVisit> = counts
            .into_iter()
            .map(|(support, (visits, w))| ModelVisit {
                support,
                visits,
                frequency: visits as f64 / total as f64,
                log_weight: w.value,
                log_prior: w.log_prior,
                log_laplace: w.log_laplace,
            })
            .collect();
        top_models.sort_by(|a, b| b.visits.cmp(&a.visits).then_with(|| a.support.cmp(&b.support)));
        Self {
            inclusion_prob: incl.into_iter().map(|c| c as f64 / total as f64).collect(),
            distinct_models: top_models.len(),
            top_models,
            acceptance_rate: if proposed == 0 { 0.0 } else { accepted as f64 / proposed as f64 },
            n_iter,
            n_burnin,
            chains,
        }
    }

    /// Most visited model.
    pub fn modal_model(&self) -> Option<&ModelSupport> {
        self.top_models.first().map(|m| &m.support)
    }

    /// Post-burn-in visits across all chains.
    pub fn total_visits(&self) -> u64 {
        self.top_models.iter().map(|m| m.visits).sum()
    }

    /// Empirical frequency of each visited model.
    pub fn frequencies(&self) -> HashMap<ModelSupport, f64> {
        self.top_models.iter().map(|m| (m.support.clone(), m.frequency)).collect()
    }

    /// Keeps the `k` most visited models; inclusion probabilities are unaffected.
    pub fn truncate_top(&mut self, k: usize) {
        self.top_models.truncate(k);
    }
}

struct ChainRun {
    counts: HashMap<ModelSupport, (u64, LogWeight)>,
    accepted: u64,
    proposed: u64,
}

fn run_single(
    data: &Dataset,
    family: GlmFamily,
    h: &Hyperparams,
    settings: &ChainSettings,
    cache: &FitCache,
    stream: u64,
) -> Result<ChainRun> {
    let init = settings.init.clone().unwrap_or_default();
    let rng = crate::rng_for(settings.seed, stream);
    let mut state = ChainState::new(init, data, family, h, cache, rng)?;
    let burnin = settings.burnin();
    let mut counts: HashMap<ModelSupport, (u64, LogWeight)> = HashMap::new();
    for it in 0..settings.n_iter {
        mh_step(&mut state, data, family, h, cache)?;
        if it >= burnin {
            counts.entry(state.current.clone()).or_insert((0, state.current_logweight)).0 += 1;
        }
    }
    Ok(ChainRun { counts, accepted: state.accepted, proposed: state.iteration })
}

/// Runs `settings.chains` independent chains (in parallel) and pools their
/// post-burn-in visits. Chain `c` uses random stream `c` of `settings.seed`,
/// so the result does not depend on the thread count.
pub fn run_chain(
    data: &Dataset,
    family: GlmFamily,
    h: &Hyperparams,
    settings: &ChainSettings,
    cache: &FitCache,
) -> Result<PosteriorSummary> {
    settings.validate()?;
    h.validate(data.n(), data.p())?;
    if let Some(init) = &settings.init {
        if init.len() > h.s_max {
            return Err(Error::InvalidInit);
        }
    }
    let runs: Vec<ChainRun> = (0..settings.chains as u64)
        .into_par_iter()
        .map(|c| run_single(data, family, h, settings, cache, c))
        .collect::<Result<_>>()?;
    let mut counts: HashMap<ModelSupport, (u64, LogWeight)> = HashMap::new();
    let (mut accepted, mut proposed) = (0, 0);
    for run in runs {
        accepted += run.accepted;
        proposed += run.proposed;
        for (s, (v, w)) in run.counts {
            counts.entry(s).or_insert((0, w)).0 += v;
        }
    }
    Ok(PosteriorSummary::from_counts(
        data.p(),
        counts,
        accepted,
        proposed,
        settings.n_iter,
        settings.burnin(),
        settings.chains,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactModel {
    pub support: ModelSupport,
    pub probability: f64,
    pub log_weight: LogWeight,
}

/// Normalised posterior over every support of size at most `s_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPosterior {
    /// Valid models, most probable first.
    pub models: Vec<ExactModel>,
    pub inclusion_prob: Vec<f64>,
    /// Models excluded because their fit failed.
    pub excluded: usize,
    pub log_normalizer: f64,
}

impl ExactPosterior {
    pub fn probability(&self, s: &ModelSupport) -> f64 {
        self.models.iter().find(|m| &m.support == s).map_or(0.0, |m| m.probability)
    }

    pub fn as_map(&self) -> HashMap<ModelSupport, f64> {
        self.models.iter().map(|m| (m.support.clone(), m.probability)).collect()
    }

    /// Total variation distance to an empirical distribution.
    pub fn total_variation(&self, empirical: &HashMap<ModelSupport, f64>) -> f64 {
        let exact = self.as_map();
        let mut tv = 0.0;
        for (s, &q) in &exact {
            tv += (q - empirical.get(s).copied().unwrap_or(0.0)).abs();
        }
        for (s, &e) in empirical {
            if !exact.contains_key(s) {
                tv += e;
            }
        }
        0.5 * tv
    }
}

/// `Σ_{k ≤ s_max} C(p, k)`, saturating.
pub fn model_space_size(p: usize, s_max: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for k in 0..=s_max.min(p) {
        total = total.saturating_add(c);
        c = c.saturating_mul((p - k) as u128) / (k as u128 + 1);
    }
    total
}

/// Exact normalised posterior by enumeration; refuses model spaces larger
/// than [`ENUMERATION_LIMIT`].
pub fn enumerate_exact(
    data: &Dataset,
    family: GlmFamily,
    h: &Hyperparams,
    cache: &FitCache,
) -> Result<ExactPosterior> {
    let p = data.p();
    let count = model_space_size(p, h.s_max);
    if count > ENUMERATION_LIMIT {
        return Err(Error::GuardExceeded { count, limit: ENUMERATION_LIMIT });
    }
    let supports: Vec<ModelSupport> = (0..=h.s_max.min(p))
        .flat_map(|k| (0..p).combinations(k))
        .map(|c| ModelSupport::new(c).expect("combinations are distinct"))
        .collect();
    let weights: Vec<LogWeight> = supports
        .par_iter()
        .map(|s| log_posterior_weight(s, data, family, h, cache))
        .collect::<Result<_>>()?;
    let max = weights.iter().map(|w| w.value).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::InvalidInit);
    }
    let sum: f64 = weights.iter().filter(|w| w.is_finite()).map(|w| (w.value - max).exp()).sum();
    let log_normalizer = max + sum.ln();
    let mut excluded = 0;
    let mut models = Vec::new();
    let mut incl = vec![0.0; p];
    for (s, w) in supports.into_iter().zip(weights) {
        if !w.is_finite() {
            excluded += 1;
            continue;
        }
        let probability = (w.value - log_normalizer).exp();
        for &j in s.indices() {
            incl[j] += probability;
        }
        models.push(ExactModel { support: s, probability, log_weight: w });
    }
    models.sort_by(|a, b| b.probability.total_cmp(&a.probability).then_with(|| a.support.cmp(&b.support)));
    Ok(ExactPosterior { models, inclusion_prob: incl, excluded, log_normalizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    use nalgebra::{DMatrix, DVector};
    use rand_distr::StandardNormal;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn all_supports(p: usize, s_max: usize) -> Vec<ModelSupport> {
        (0..=s_max).flat_map(|k| (0..p).combinations(k)).map(|c| ModelSupport::new(c).unwrap()).collect()
    }

    /// Brute-force neighbourhood from the set definitions.
    fn brute_neighborhood(s: &ModelSupport, p: usize, s_max: usize) -> HashSet<ModelSupport> {
        all_supports(p, s_max)
            .into_iter()
            .filter(|t| {
                let sym: usize = (0..p).filter(|&j| s.contains(j) != t.contains(j)).count();
                let add = t.len() == s.len() + 1 && t.is_superset_of(s);
                let del = s.len() == t.len() + 1 && s.is_superset_of(t);
                let swap = t.len() == s.len() && sym == 2;
                add || del || swap
            })
            .collect()
    }

    fn toy_data(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = crate::rng_for(seed, 0);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |i, _| {
            let eta = 1.0 * x[(i, 0)] - 0.8 * x[(i, 2)];
            f64::from(rng.random_bool(1.0 / (1.0 + (-eta).exp())))
        });
        Dataset::for_family(GlmFamily::Logistic, x, y, None).unwrap()
    }

    #[test]
    fn counts_examples() {
        assert_eq!(neighborhood_counts(&ModelSupport::empty(), 7, 3), NeighborhoodCounts { n_add: 7, n_del: 0, n_swap: 0 });
        let s = ModelSupport::new(vec![2]).unwrap();
        let c = neighborhood_counts(&s, 5, 2);
        assert_eq!((c.n_add, c.n_del, c.n_swap, c.total()), (4, 1, 4, 9));
        let s = ModelSupport::new(vec![0, 3]).unwrap();
        assert_eq!(neighborhood_counts(&s, 5, 2).n_add, 0);
    }

    #[test]
    fn counts_and_decoding_match_brute_force() {
        for p in 1..=6 {
            for s_max in 1..=p.min(3) {
                for s in all_supports(p, s_max) {
                    let brute = brute_neighborhood(&s, p, s_max);
                    let listed = neighborhood(&s, p, s_max);
                    let set: HashSet<_> = listed.iter().cloned().collect();
                    assert_eq!(listed.len(), set.len(), "duplicates for {s} at p={p}");
                    assert_eq!(set, brute, "S={s} p={p} s_max={s_max}");
                    assert_eq!(neighborhood_counts(&s, p, s_max).total(), brute.len());
                }
            }
        }
    }

    #[test]
    fn neighbourhoods_are_symmetric() {
        let p = 5;
        let s_max = 3;
        for s in all_supports(p, s_max) {
            for t in neighborhood(&s, p, s_max) {
                assert!(t.len() <= s_max);
                assert!(neighborhood(&t, p, s_max).contains(&s), "{s} -> {t} not reversible");
            }
        }
    }

    #[test]
    fn proposals_are_uniform_over_neighbourhood() {
        let (p, s_max) = (6, 3);
        let s = ModelSupport::new(vec![1, 4]).unwrap();
        let nbhd = neighborhood(&s, p, s_max);
        let index: HashMap<_, _> = nbhd.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let mut freq = vec![0u64; nbhd.len()];
        let mut rng = crate::rng_for(2024, 0);
        let draws = 100_000;
        for _ in 0..draws {
            let prop = propose(&s, p, s_max, &mut rng).unwrap();
            assert_eq!(prop.log_q_fwd, -(nbhd.len() as f64).ln());
            assert_eq!(prop.log_q_rev, -(neighborhood_counts(&prop.support, p, s_max).total() as f64).ln());
            freq[index[&prop.support]] += 1;
        }
        let expected = draws as f64 / nbhd.len() as f64;
        let chi2: f64 = freq.iter().map(|&f| (f as f64 - expected).powi(2) / expected).sum();
        let dist = ChiSquared::new((nbhd.len() - 1) as f64).unwrap();
        let p_value = 1.0 - dist.cdf(chi2);
        assert!(p_value > 1e-3, "chi2 = {chi2}, p = {p_value}");
    }

    #[test]
    fn proposal_from_empty_neighbourhood_is_an_error() {
        let mut rng = crate::rng_for(0, 0);
        let s = ModelSupport::empty();
        assert!(matches!(propose(&s, 0, 2, &mut rng), Err(Error::EmptyNeighborhood)));
    }

    #[test]
    fn acceptance_rules() {
        assert_eq!(acceptance_prob(-3.0, f64::NEG_INFINITY, -1.0, -1.0), 0.0);
        assert_eq!(acceptance_prob(-3.0, -2.0, -2.0, -2.0), 1.0);
        let a = acceptance_prob(-2.0, -3.0, -2.0f64.ln(), -3.0f64.ln());
        assert!((a - (-1.0f64).exp() * 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn detailed_balance_holds_pairwise() {
        let data = toy_data(80, 5, 7);
        let h = Hyperparams::recommended(3);
        let cache = FitCache::for_family(GlmFamily::Logistic);
        let p = data.p();
        let w = |s: &ModelSupport| log_posterior_weight(s, &data, GlmFamily::Logistic, &h, &cache).unwrap().value;
        for s in all_supports(p, h.s_max) {
            let ws = w(&s);
            let qs = -(neighborhood_counts(&s, p, h.s_max).total() as f64).ln();
            for t in neighborhood(&s, p, h.s_max) {
                let wt = w(&t);
                let qt = -(neighborhood_counts(&t, p, h.s_max).total() as f64).ln();
                let lhs = ws + qs + log_acceptance(ws, wt, qs, qt);
                let rhs = wt + qt + log_acceptance(wt, ws, qt, qs);
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "{s} <-> {t}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn chain_is_deterministic_and_mixes() {
        let data = toy_data(100, 6, 8);
        let h = Hyperparams::recommended(3);
        let settings = ChainSettings::new(3_000, 11);
        let a = run_chain(&data, GlmFamily::Logistic, &h, &settings, &FitCache::for_family(GlmFamily::Logistic)).unwrap();
        let b = run_chain(&data, GlmFamily::Logistic, &h, &settings, &FitCache::for_family(GlmFamily::Logistic)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_visits(), 3_000 - 300);
        assert!(a.acceptance_rate > 0.0 && a.acceptance_rate < 1.0);
        assert!(a.inclusion_prob.iter().all(|&q| (0.0..=1.0).contains(&q)));
    }

    #[test]
    fn multiple_chains_pool_visits() {
        let data = toy_data(100, 6, 9);
        let h = Hyperparams::recommended(3);
        let mut settings = ChainSettings::new(1_000, 3);
        settings.chains = 3;
        settings.n_burnin = Some(200);
        let s = run_chain(&data, GlmFamily::Logistic, &h, &settings, &FitCache::for_family(GlmFamily::Logistic)).unwrap();
        assert_eq!(s.total_visits(), 3 * 800);
    }

    #[test]
    fn invalid_initial_state_is_rejected() {
        let data = toy_data(50, 4, 10);
        let h = Hyperparams::recommended(1);
        let mut settings = ChainSettings::new(100, 0);
        settings.init = Some(ModelSupport::new(vec![0, 1]).unwrap());
        let r = run_chain(&data, GlmFamily::Logistic, &h, &settings, &FitCache::for_family(GlmFamily::Logistic));
        assert!(matches!(r, Err(Error::InvalidInit)));
        settings.init = None;
        settings.n_burnin = Some(100);
        assert!(run_chain(&data, GlmFamily::Logistic, &h, &settings, &FitCache::for_family(GlmFamily::Logistic)).is_err());
    }

    #[test]
    fn exact_posterior_is_normalised() {
        let data = toy_data(80, 6, 12);
        let h = Hyperparams::recommended(3);
        let post = enumerate_exact(&data, GlmFamily::Logistic, &h, &FitCache::for_family(GlmFamily::Logistic)).unwrap();
        let total: f64 = post.models.iter().map(|m| m.probability).sum();
        assert!((total - 1.0).abs() <= 1e-12);
        for j in 0..data.p() {
            let direct: f64 = post.models.iter().filter(|m| m.support.contains(j)).map(|m| m.probability).sum();
            assert!((direct - post.inclusion_prob[j]).abs() <= 1e-15);
        }
    }

    #[test]
    fn exact_two_point_distribution() {
        let x = DMatrix::from_column_slice(6, 1, &[0.5, -1.0, 1.5, 0.2, -0.3, 1.0]);
        let y = DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let data = Dataset::new(x, y, None).unwrap();
        let h = Hyperparams::recommended(1);
        let cache = FitCache::for_family(GlmFamily::Logistic);
        let post = enumerate_exact(&data, GlmFamily::Logistic, &h, &cache).unwrap();
        assert_eq!(post.models.len(), 2);
        let s1 = ModelSupport::new(vec![0]).unwrap();
        let w0 = log_posterior_weight(&ModelSupport::empty(), &data, GlmFamily::Logistic, &h, &cache).unwrap().value;
        let w1 = log_posterior_weight(&s1, &data, GlmFamily::Logistic, &h, &cache).unwrap().value;
        let expect = 1.0 / (1.0 + (w0 - w1).exp());
        assert!((post.probability(&s1) - expect).abs() <= 1e-14);
    }

    #[test]
    fn enumeration_guard() {
        assert_eq!(model_space_size(5, 2), 1 + 5 + 10);
        assert_eq!(model_space_size(3, 10), 8);
        let data = toy_data(60, 60, 13);
        let h = Hyperparams::recommended(4);
        let r = enumerate_exact(&data, GlmFamily::Logistic, &h, &FitCache::for_family(GlmFamily::Logistic));
        assert!(matches!(r, Err(Error::GuardExceeded { .. })));
    }
}
