//! Seeded test-problem generators. The same seed always produces a
//! bitwise-identical problem.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, QuadraticProblem, SparseRow};
use crate::error::Result;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn label_from_margin(rng: &mut ChaCha8Rng, margin: f64) -> f64 {
    let p = 1.0 / (1.0 + (-margin).exp());
    if rng.random::<f64>() < p {
        1.0
    } else {
        -1.0
    }
}

/// Dense Gaussian design with labels drawn from a logistic model around a
/// random planted weight vector.
pub fn gaussian_logistic(n_samples: usize, n_features: usize, seed: u64) -> Dataset {
    let mut rng = rng(seed);
    let w: Vec<f64> = (0..n_features).map(|_| normal(&mut rng)).collect();
    let mut rows = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let row: SparseRow = (0..n_features).map(|j| (j, normal(&mut rng))).collect();
        let margin: f64 = row.iter().map(|&(j, v)| v * w[j]).sum::<f64>() / (n_features as f64).sqrt();
        labels.push(label_from_margin(&mut rng, 2.0 * margin));
        rows.push(row);
    }
    Dataset::new(rows, labels, n_features).expect("generator produces valid rows")
}

/// Category counts of the one-hot groups used by [`census_like`].
const CENSUS_GROUPS: [usize; 13] = [5, 8, 16, 16, 7, 14, 6, 5, 2, 10, 10, 10, 10];

/// Sparse binary design shaped like the "adult"/a1a benchmark: thirteen
/// one-hot encoded categorical attributes (119 features), one active
/// category per attribute, skewed category frequencies and roughly a
/// quarter positive labels.
pub fn census_like(n_samples: usize, seed: u64) -> Dataset {
    let mut rng = rng(seed);
    let n_features: usize = CENSUS_GROUPS.iter().sum();
    let w: Vec<f64> = (0..n_features).map(|_| 1.5 * normal(&mut rng)).collect();
    let mut rows = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut row: SparseRow = Vec::with_capacity(CENSUS_GROUPS.len());
        let mut offset = 0;
        for &size in &CENSUS_GROUPS {
            // geometric-like skew: category c has weight 0.6^c
            let total: f64 = (0..size).map(|c| 0.6f64.powi(c as i32)).sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = size - 1;
            for c in 0..size {
                u -= 0.6f64.powi(c as i32);
                if u <= 0.0 {
                    pick = c;
                    break;
                }
            }
            row.push((offset + pick, 1.0));
            offset += size;
        }
        let margin: f64 = row.iter().map(|&(j, _)| w[j]).sum::<f64>() / 2.0 - 1.2;
        labels.push(label_from_margin(&mut rng, margin));
        rows.push(row);
    }
    Dataset::new(rows, labels, n_features).expect("generator produces valid rows")
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng(seed);
    let g = DMatrix::from_fn(n, n, |_, _| normal(&mut rng));
    g.qr().q()
}

/// Symmetric matrix `Q diag(eigs) Qᵀ` with a random orthogonal `Q`.
pub fn with_spectrum(eigs: &[f64], seed: u64) -> DMatrix<f64> {
    let n = eigs.len();
    let q = random_orthogonal(n, seed);
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(eigs));
    let h = &q * d * q.transpose();
    (&h + h.transpose()) * 0.5
}

/// SPD quadratic with eigenvalues log-spaced on `[1/cond, 1]` and a random
/// linear term.
pub fn spd_quadratic(n: usize, cond: f64, seed: u64) -> Result<QuadraticProblem> {
    let eigs: Vec<f64> = (0..n)
        .map(|i| {
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 1.0 };
            cond.powf(t - 1.0)
        })
        .collect();
    let h = with_spectrum(&eigs, seed);
    let mut rng = rng(seed.wrapping_add(1));
    let b = DVector::from_fn(n, |_, _| normal(&mut rng));
    QuadraticProblem::new(h, b)
}
