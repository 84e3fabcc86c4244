use nalgebra::{DMatrix, DVector};

use super::{check_dim, finite_or, EvalCounters, Objective, Point};
use crate::error::{Error, Result};
use crate::linalg::ShiftedFactor;

/// `f(x) = ½ xᵀHx + bᵀx` with a symmetric positive semidefinite `H`.
#[derive(Debug)]
pub struct QuadraticProblem {
    h: DMatrix<f64>,
    b: DVector<f64>,
    known_min: Option<Point>,
    counters: EvalCounters,
}

impl QuadraticProblem {
    /// The minimizer `-H⁻¹b` is recorded whenever `H` is positive definite.
    pub fn new(h: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: h.ncols() });
        }
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        let scale = 1.0 + h.amax();
        for i in 0..n {
            for j in 0..i {
                if (h[(i, j)] - h[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidConfig("quadratic Hessian is not symmetric".into()));
                }
            }
        }
        let known_min = ShiftedFactor::new(&h, 0.0)
            .filter(|f| f.pivot_ratio() > 1e-14)
            .map(|f| -f.solve(&b));
        Ok(QuadraticProblem { h, b, known_min, counters: EvalCounters::new() })
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn known_min(&self) -> Option<&Point> {
        self.known_min.as_ref()
    }

    /// Optimal value, when the minimizer is known.
    pub fn known_min_value(&self) -> Option<f64> {
        self.known_min.as_ref().map(|x| 0.5 * x.dot(&(&self.h * x)) + self.b.dot(x))
    }
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &Point) -> Result<f64> {
        self.counters.record_value();
        check_dim(self.dim(), x)?;
        finite_or("quadratic value", 0.5 * x.dot(&(&self.h * x)) + self.b.dot(x))
    }

    fn gradient(&self, x: &Point) -> Result<DVector<f64>> {
        self.counters.record_gradient();
        check_dim(self.dim(), x)?;
        Ok(&self.h * x + &self.b)
    }

    fn hessian(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.counters.record_hessian();
        check_dim(self.dim(), x)?;
        Ok(self.h.clone())
    }

    fn counters(&self) -> &EvalCounters {
        &self.counters
    }
}
