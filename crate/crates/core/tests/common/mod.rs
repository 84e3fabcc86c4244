#![allow(dead_code)]

use atr_core::objective::synthetic;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Instance {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub sigma: f64,
    pub radius: f64,
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..hi))
}

/// Random convex trust-region instance whose system matrix `H + σI` has
/// condition number at most `max_cond`, mixing interior and boundary
/// solutions and occasionally a singular `H`.
pub fn convex_instance(seed: u64, n: usize, max_cond: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cond = log_uniform(&mut rng, 0.0, max_cond.log10());
    let top = log_uniform(&mut rng, -1.0, 3.0);
    let low = top / cond;
    let system: Vec<f64> = (0..n).map(|i| low * cond.powf(i as f64 / (n - 1).max(1) as f64)).collect();
    let sigma = match rng.random_range(0..3) {
        0 => 0.0,
        1 => low,
        _ => low * rng.random::<f64>(),
    };
    let eigs: Vec<f64> = system.iter().map(|e| (e - sigma).max(0.0)).collect();
    let h = synthetic::with_spectrum(&eigs, rng.random());
    let h = (&h + h.transpose()) * 0.5;
    let scale = log_uniform(&mut rng, -3.0, 2.0);
    let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
    let reach = g.norm() / low;
    let radius = reach * log_uniform(&mut rng, -3.0, 0.5);
    Instance { h, g, sigma, radius }
}
