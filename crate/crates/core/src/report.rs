//! Run results and per-iteration telemetry shared by all solvers.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::Error;
use crate::objective::{CounterSnapshot, Objective, Point};

/// Runtime checks and timing switches shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Telemetry {
    /// Check algorithmic invariants per step and record violations.
    pub invariants: bool,
    /// Fill `wall_ns` in trace rows. Off by default so traces are
    /// reproducible byte for byte.
    pub wall_clock: bool,
}

impl Default for Telemetry {
    fn default() -> Self {
        Telemetry { invariants: true, wall_clock: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Global,
    DirectAccept,
    Diving,
    Bisection,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Global => "Global",
            Phase::DirectAccept => "DirectAccept",
            Phase::Diving => "Diving",
            Phase::Bisection => "Bisection",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Global" => Ok(Phase::Global),
            "DirectAccept" => Ok(Phase::DirectAccept),
            "Diving" => Ok(Phase::Diving),
            "Bisection" => Ok(Phase::Bisection),
            other => Err(format!("unknown phase {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Termination {
    /// `||∇f|| <= ε` at the returned point.
    GradTol,
    /// An early-termination certificate fired inside a subroutine.
    EarlyTerminate,
    MaxIterations,
    /// The run stopped on an error; the payload is [`Error::kind`].
    Error(String),
}

impl Termination {
    pub fn from_error(e: &Error) -> Self {
        Termination::Error(e.kind().to_string())
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, Termination::GradTol | Termination::EarlyTerminate)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::GradTol => f.write_str("GradTol"),
            Termination::EarlyTerminate => f.write_str("EarlyTerminate"),
            Termination::MaxIterations => f.write_str("MaxIterations"),
            Termination::Error(kind) => write!(f, "Error({kind})"),
        }
    }
}

/// One outer iteration. Row `outer_k = 0` describes the starting point;
/// row `k > 0` describes `x_k` and the step that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub method: String,
    pub outer_k: usize,
    /// Subproblem oracle calls spent in this iteration.
    pub inner_calls: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub mu: f64,
    pub step_norm: f64,
    /// Cumulative Hessian evaluations of this run.
    pub n_hessian: u64,
    /// Cumulative factorizations of this run.
    pub n_factorizations: u64,
    pub phase: Phase,
    pub wall_ns: u64,
}

/// Local-detection bookkeeping for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct LdRecord {
    pub outer_k: usize,
    pub track: Phase,
    pub early_terminate: bool,
    /// Gradient norms `||∇f(z_i)||` along the diving path, starting at `y`.
    pub diving_grad_norms: Vec<f64>,
    pub diving_budget: usize,
    pub diving_success: bool,
    pub bisection_calls: usize,
    /// `μ₊ = σ` passed in from the outer loop.
    pub mu_plus: f64,
    pub kappa_h: f64,
    /// `μ / ||d||` of the returned step (ET = false only).
    pub ratio: Option<f64>,
}

/// Estimating-sequence sample after an accepted (non-terminal) update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateSample {
    pub k: usize,
    /// `A_k` at the new index.
    pub big_a: f64,
    pub f_x: f64,
    pub phi_star: f64,
    pub mu: f64,
    pub step_norm: f64,
    pub phase: Phase,
}

/// Ratio bracketing and bisection outcome of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct RnbRecord {
    pub outer_k: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub step_norm: f64,
    pub oracle_calls: usize,
    pub restarts: usize,
    pub early_terminate: bool,
    /// `ψ(σ, y(σ)) = ||(∇²f(y) + σI)⁻¹∇f(y)|| / σ` at the returned σ.
    pub psi: f64,
    pub big_a: f64,
    pub a: f64,
    pub v_after: Option<Point>,
    pub x_after: Point,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub local_detections: Vec<LdRecord>,
    pub estimates: Vec<EstimateSample>,
    pub rnb: Vec<RnbRecord>,
    /// Free-form notes such as estimate refreshes or bracket restarts.
    pub notes: Vec<String>,
    /// `(||(H + μI)d + g|| / ||g||)` per cubic subproblem solve.
    pub cubic_residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub method: String,
    pub final_point: Point,
    pub final_value: f64,
    pub final_grad_norm: f64,
    pub termination: Termination,
    pub iterations: usize,
    /// Counter deltas accumulated during this run.
    pub counters: CounterSnapshot,
    pub trace: Vec<TraceRow>,
    /// Invariant violations detected by telemetry; empty on a clean run.
    pub violations: Vec<String>,
    pub diagnostics: Diagnostics,
}

/// Bookkeeping shared by the solver loops.
pub(crate) struct Recorder<'p> {
    pub problem: &'p dyn Objective,
    pub method: String,
    start: CounterSnapshot,
    started_at: Instant,
    wall_clock: bool,
    pub trace: Vec<TraceRow>,
    pub violations: Vec<String>,
    pub diagnostics: Diagnostics,
    /// Lowest gradient norm seen so far, as (point, f, ||g||).
    best: Option<(Point, f64, f64)>,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct StepInfo {
    pub inner_calls: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub mu: f64,
    pub step_norm: f64,
}

impl<'p> Recorder<'p> {
    pub fn new(problem: &'p dyn Objective, method: impl Into<String>, wall_clock: bool) -> Self {
        Recorder {
            problem,
            method: method.into(),
            start: problem.counters().snapshot(),
            started_at: Instant::now(),
            wall_clock,
            trace: Vec::new(),
            violations: Vec::new(),
            diagnostics: Diagnostics::default(),
            best: None,
        }
    }

    pub fn counters(&self) -> CounterSnapshot {
        self.problem.counters().snapshot() - self.start
    }

    pub fn row(&mut self, outer_k: usize, x: &Point, f: f64, grad_norm: f64, step: StepInfo, phase: Phase) {
        let c = self.counters();
        let wall_ns = if self.wall_clock { self.started_at.elapsed().as_nanos() as u64 } else { 0 };
        self.trace.push(TraceRow {
            method: self.method.clone(),
            outer_k,
            inner_calls: step.inner_calls,
            f,
            grad_norm,
            sigma: step.sigma,
            lambda: step.lambda,
            mu: step.mu,
            step_norm: step.step_norm,
            n_hessian: c.n_hessian,
            n_factorizations: c.n_factorizations,
            phase,
            wall_ns,
        });
        if self.best.as_ref().is_none_or(|b| grad_norm < b.2) {
            self.best = Some((x.clone(), f, grad_norm));
        }
    }

    /// Report at the given final point.
    pub fn finish(self, point: Point, f: f64, grad_norm: f64, termination: Termination, iterations: usize) -> Report {
        let counters = self.counters();
        Report {
            method: self.method,
            final_point: point,
            final_value: f,
            final_grad_norm: grad_norm,
            termination,
            iterations,
            counters,
            trace: self.trace,
            violations: self.violations,
            diagnostics: self.diagnostics,
        }
    }

    /// Report at the best recorded iterate (used for MaxIterations and
    /// mid-run errors).
    pub fn finish_best(mut self, termination: Termination, iterations: usize) -> Report {
        let (point, f, g) = self.best.take().unwrap_or_else(|| {
            let n = self.problem.dim();
            (Point::zeros(n), f64::NAN, f64::NAN)
        });
        self.finish(point, f, g, termination, iterations)
    }
}
