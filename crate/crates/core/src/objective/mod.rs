//! Smooth convex objectives with counted value, gradient and Hessian
//! evaluations.

mod huber;
mod libsvm;
mod logistic;
mod quadratic;
pub mod synthetic;

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_norm, NormEstimate};

pub use libsvm::{load_libsvm, parse_libsvm, write_libsvm, Dataset, LabelMode, LibsvmOptions, SparseRow};
pub use huber::PseudoHuber;
pub use logistic::LogisticProblem;
pub use quadratic::QuadraticProblem;

/// A point in the search space.
pub type Point = DVector<f64>;

/// Evaluation counters shared by all solver runs on one problem instance.
#[derive(Debug, Default)]
pub struct EvalCounters {
    n_value: AtomicU64,
    n_gradient: AtomicU64,
    n_hessian: AtomicU64,
    n_factorizations: AtomicU64,
}

/// Plain copy of [`EvalCounters`] at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CounterSnapshot {
    pub n_value: u64,
    pub n_gradient: u64,
    pub n_hessian: u64,
    pub n_factorizations: u64,
}

impl EvalCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_value(&self) {
        self.n_value.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_gradient(&self) {
        self.n_gradient.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_hessian(&self) {
        self.n_hessian.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_factorizations(&self, n: u64) {
        self.n_factorizations.fetch_add(n, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            n_value: self.n_value.load(Ordering::Relaxed),
            n_gradient: self.n_gradient.load(Ordering::Relaxed),
            n_hessian: self.n_hessian.load(Ordering::Relaxed),
            n_factorizations: self.n_factorizations.load(Ordering::Relaxed),
        }
    }
}

impl std::ops::Sub for CounterSnapshot {
    type Output = CounterSnapshot;

    fn sub(self, rhs: CounterSnapshot) -> CounterSnapshot {
        CounterSnapshot {
            n_value: self.n_value - rhs.n_value,
            n_gradient: self.n_gradient - rhs.n_gradient,
            n_hessian: self.n_hessian - rhs.n_hessian,
            n_factorizations: self.n_factorizations - rhs.n_factorizations,
        }
    }
}

/// Twice-differentiable objective with evaluation counters.
///
/// Implementations must be pure: the same `x` always yields the same
/// outputs. Every call to `value`, `gradient` or `hessian` increments the
/// matching counter by exactly one.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Point) -> Result<f64>;
    fn gradient(&self, x: &Point) -> Result<DVector<f64>>;
    fn hessian(&self, x: &Point) -> Result<DMatrix<f64>>;
    fn counters(&self) -> &EvalCounters;
}

pub(crate) fn check_dim(expected: usize, x: &Point) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}

pub(crate) fn finite_or(what: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericalOverflow(what))
    }
}

/// Runtime stand-in for the global Hessian bound: `||∇²f(x0)||` by power
/// iteration (tol 1e-6, at most 500 steps, Frobenius fallback).
pub fn hessian_norm_bound(problem: &dyn Objective, x0: &Point) -> Result<NormEstimate> {
    let h = problem.hessian(x0)?;
    Ok(hessian_norm_of(&h))
}

/// Same estimate as [`hessian_norm_bound`] for an already evaluated Hessian.
pub fn hessian_norm_of(h: &DMatrix<f64>) -> NormEstimate {
    symmetric_norm(h, 1e-6, 500)
}
