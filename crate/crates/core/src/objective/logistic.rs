use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{check_dim, finite_or, Dataset, EvalCounters, Objective, Point, SparseRow};
use crate::error::{Error, Result};
use crate::linalg::power_iteration;

/// Ridge-regularized average logistic loss
/// `f(x) = (1/N) Σ log(1 + exp(-b_i a_iᵀx)) + (reg/2)||x||²`.
#[derive(Debug)]
pub struct LogisticProblem {
    data: Arc<Dataset>,
    reg: f64,
    counters: EvalCounters,
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn sparse_dot(row: &SparseRow, x: &Point) -> f64 {
    row.iter().map(|&(j, v)| v * x[j]).sum()
}

impl LogisticProblem {
    pub fn new(data: impl Into<Arc<Dataset>>, reg: f64) -> Result<Self> {
        if !(reg >= 0.0 && reg.is_finite()) {
            return Err(Error::InvalidConfig(format!("regularization must be >= 0, got {reg}")));
        }
        Ok(LogisticProblem { data: data.into(), reg, counters: EvalCounters::new() })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn shared_data(&self) -> Arc<Dataset> {
        Arc::clone(&self.data)
    }

    pub fn reg(&self) -> f64 {
        self.reg
    }

    fn inv_n(&self) -> f64 {
        1.0 / self.data.len().max(1) as f64
    }

    /// Spectral norm of `(1/N) Σ a_i a_iᵀ`, by power iteration on the sparse
    /// rows.
    pub fn gram_norm(&self) -> Result<f64> {
        if self.data.is_empty() {
            return Err(Error::EmptyData);
        }
        let inv_n = self.inv_n();
        let n = self.data.n_features();
        let (norm, _, _) = power_iteration(
            n,
            |v| {
                let mut out = DVector::zeros(n);
                for row in self.data.rows() {
                    let t = sparse_dot(row, v) * inv_n;
                    for &(j, a) in row {
                        out[j] += a * t;
                    }
                }
                out
            },
            1e-8,
            20_000,
        );
        Ok(norm)
    }

    /// Hessian-Lipschitz estimate `||(1/N) Σ a_i a_iᵀ|| · max_i ||a_i||`.
    pub fn lipschitz_estimate(&self) -> Result<f64> {
        let gram = self.gram_norm()?;
        let max_row = self
            .data
            .rows()
            .iter()
            .map(|r| r.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Ok(gram * max_row)
    }
}

impl Objective for LogisticProblem {
    fn dim(&self) -> usize {
        self.data.n_features()
    }

    fn value(&self, x: &Point) -> Result<f64> {
        self.counters.record_value();
        check_dim(self.dim(), x)?;
        let loss: f64 = self
            .data
            .rows()
            .iter()
            .zip(self.data.labels())
            .map(|(row, &b)| softplus(-b * sparse_dot(row, x)))
            .sum();
        finite_or("logistic value", loss * self.inv_n() + 0.5 * self.reg * x.norm_squared())
    }

    fn gradient(&self, x: &Point) -> Result<DVector<f64>> {
        self.counters.record_gradient();
        check_dim(self.dim(), x)?;
        let inv_n = self.inv_n();
        let mut g = x * self.reg;
        for (row, &b) in self.data.rows().iter().zip(self.data.labels()) {
            let coef = -b * sigmoid(-b * sparse_dot(row, x)) * inv_n;
            for &(j, a) in row {
                g[j] += coef * a;
            }
        }
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(Error::NumericalOverflow("logistic gradient"))
        }
    }

    fn hessian(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.counters.record_hessian();
        check_dim(self.dim(), x)?;
        let n = self.dim();
        let inv_n = self.inv_n();
        let mut h = DMatrix::<f64>::zeros(n, n);
        for (row, &b) in self.data.rows().iter().zip(self.data.labels()) {
            let t = b * sparse_dot(row, x);
            let w = sigmoid(t) * sigmoid(-t) * inv_n;
            if w == 0.0 {
                continue;
            }
            // lower triangle only, mirrored below
            for &(i, ai) in row {
                let wi = w * ai;
                for &(j, aj) in row {
                    if j > i {
                        break;
                    }
                    h[(i, j)] += wi * aj;
                }
            }
        }
        for i in 0..n {
            h[(i, i)] += self.reg;
            for j in 0..i {
                h[(j, i)] = h[(i, j)];
            }
        }
        if h.iter().all(|v| v.is_finite()) {
            Ok(h)
        } else {
            Err(Error::NumericalOverflow("logistic hessian"))
        }
    }

    fn counters(&self) -> &EvalCounters {
        &self.counters
    }
}
