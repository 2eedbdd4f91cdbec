#![allow(dead_code)]

use glmsel::{Dataset, GlmFamily, ModelSupport};
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

pub const FAMILIES: [GlmFamily; 2] = [GlmFamily::Logistic, GlmFamily::Poisson];

pub fn gaussian(n: usize, p: usize, rng: &mut glmsel::Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random instance with responses drawn from the model at `theta0`.
pub fn simulated(family: GlmFamily, n: usize, theta0: &DVector<f64>, seed: u64) -> Dataset {
    let mut rng = glmsel::rng_for(seed, 0);
    let x = gaussian(n, theta0.len(), &mut rng);
    let y = glmsel::simulate::gen_response(family, &x, theta0, &mut rng).unwrap();
    Dataset::for_family(family, x, y, None).unwrap()
}

pub fn sparse_theta(p: usize, entries: &[(usize, f64)]) -> DVector<f64> {
    let mut t = DVector::zeros(p);
    for &(j, v) in entries {
        t[j] = v;
    }
    t
}

pub fn support(idx: &[usize]) -> ModelSupport {
    ModelSupport::new(idx.to_vec()).unwrap()
}

/// Five-point central difference of a scalar function along coordinate `j`.
pub fn central_diff(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, j: usize, h: f64) -> f64 {
    let at = |t: f64| {
        let mut y = x.clone();
        y[j] += t;
        f(&y)
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
