//! Dense helpers shared by the subproblem solvers: shifted Cholesky
//! factorizations and power-iteration norm estimates.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cholesky factor of `H + shift * I`.
pub struct ShiftedFactor {
    chol: Cholesky<f64, Dyn>,
    shift: f64,
}

impl ShiftedFactor {
    /// Factorizes `h + shift * I`; `None` when the shifted matrix is not
    /// numerically positive definite.
    pub fn new(h: &DMatrix<f64>, shift: f64) -> Option<Self> {
        let mut m = h.clone();
        if shift != 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += shift;
            }
        }
        let chol = Cholesky::new(m)?;
        let l = chol.l_dirty();
        let diag_ok = (0..l.nrows()).all(|i| l[(i, i)].is_finite() && l[(i, i)] > 0.0);
        diag_ok.then_some(ShiftedFactor { chol, shift })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Ratio of the smallest to the largest squared pivot; a cheap
    /// reciprocal-condition proxy.
    pub fn pivot_ratio(&self) -> f64 {
        let l = self.chol.l_dirty();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..l.nrows() {
            let p = l[(i, i)] * l[(i, i)];
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if hi > 0.0 {
            lo / hi
        } else {
            0.0
        }
    }

    pub fn min_pivot(&self) -> f64 {
        let l = self.chol.l_dirty();
        (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min)
    }

    /// Solves `(H + shift I) x = rhs`.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    /// Solves `L w = rhs` with the lower Cholesky factor.
    pub fn solve_lower(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol
            .l_dirty()
            .solve_lower_triangular(rhs)
            .unwrap_or_else(|| DVector::from_element(rhs.len(), f64::NAN))
    }
}

/// Solves `(h + shift I) x = rhs` with one step of iterative refinement.
pub fn refined_solve(
    h: &DMatrix<f64>,
    shift: f64,
    factor: &ShiftedFactor,
    rhs: &DVector<f64>,
) -> DVector<f64> {
    let mut x = factor.solve(rhs);
    let resid = rhs - (h * &x + &x * shift);
    let corr = factor.solve(&resid);
    if corr.iter().all(|c| c.is_finite()) {
        x += corr;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    /// False when the power iteration hit its step limit and `value` is
    /// the Frobenius-norm fallback.
    pub converged: bool,
    pub iterations: usize,
}

/// Largest-magnitude eigenvalue of a symmetric operator by power iteration.
///
/// Stops when the eigen-residual `||A v - rho v||` drops below `tol * |rho|`.
/// The start vector is drawn from a fixed-seed generator so results are
/// reproducible.
pub fn power_iteration<F>(n: usize, matvec: F, tol: f64, max_iter: usize) -> (f64, bool, usize)
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    if n == 0 {
        return (0.0, true, 0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() + 0.5);
    v /= v.norm();
    let mut rho = 0.0;
    for it in 1..=max_iter {
        let w = matvec(&v);
        rho = v.dot(&w);
        let resid = (&w - &v * rho).norm();
        let wn = w.norm();
        if wn == 0.0 {
            return (0.0, true, it);
        }
        if resid <= tol * rho.abs() {
            return (rho.abs(), true, it);
        }
        v = w / wn;
    }
    (rho.abs(), false, max_iter)
}

/// Spectral norm of a symmetric matrix, falling back to the Frobenius norm
/// when power iteration fails to converge within `max_iter` steps.
pub fn symmetric_norm(h: &DMatrix<f64>, tol: f64, max_iter: usize) -> NormEstimate {
    let (value, converged, iterations) = power_iteration(h.nrows(), |v| h * v, tol, max_iter);
    if converged {
        NormEstimate { value, converged, iterations }
    } else {
        NormEstimate { value: h.norm(), converged, iterations }
    }
}

pub fn trace_mean(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows().max(1);
    h.trace() / n as f64
}
