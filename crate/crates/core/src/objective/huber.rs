use nalgebra::{DMatrix, DVector};

use super::{check_dim, finite_or, EvalCounters, Objective, Point};
use crate::error::Result;

/// `f(x) = Σ_i sqrt(1 + x_i²)`: convex and smooth, with curvature vanishing
/// away from the origin, where plain Newton overshoots.
#[derive(Debug)]
pub struct PseudoHuber {
    dim: usize,
    counters: EvalCounters,
}

impl PseudoHuber {
    pub fn new(dim: usize) -> Self {
        PseudoHuber { dim, counters: EvalCounters::new() }
    }

    /// A valid Hessian-Lipschitz constant: `max |d³/dt³ sqrt(1+t²)|`.
    pub fn lipschitz_constant(&self) -> f64 {
        // |3t(1+t²)^{-5/2}| peaks at t = 1/2
        3.0 * 0.5 * (1.25f64).powf(-2.5)
    }
}

impl Objective for PseudoHuber {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Point) -> Result<f64> {
        self.counters.record_value();
        check_dim(self.dim, x)?;
        finite_or("pseudo-Huber value", x.iter().map(|t| t.hypot(1.0)).sum())
    }

    fn gradient(&self, x: &Point) -> Result<DVector<f64>> {
        self.counters.record_gradient();
        check_dim(self.dim, x)?;
        Ok(x.map(|t| t / t.hypot(1.0)))
    }

    fn hessian(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.counters.record_hessian();
        check_dim(self.dim, x)?;
        Ok(DMatrix::from_diagonal(&x.map(|t| t.hypot(1.0).powi(-3))))
    }

    fn counters(&self) -> &EvalCounters {
        &self.counters
    }
}
