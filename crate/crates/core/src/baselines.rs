//! Reference second-order methods: plain Newton, the unaccelerated
//! trust-region method, cubic regularized Newton and its accelerated
//! variant.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::atr_local::{extrapolate, sigma_radius, weight_big_a, EstSeqState};
use crate::error::{Error, Result};
use crate::linalg::{refined_solve, ShiftedFactor};
use crate::objective::{check_dim, Objective, Point};
use crate::report::{EstimateSample, Phase, Recorder, Report, StepInfo, Telemetry, Termination};
use crate::trs::{solve_trs, unconstrained_step, TrsRequest};

const MAX_CUBIC_STEPS: usize = 100;
/// Consecutive increases of `f` after which Newton is declared divergent.
const DIVERGENCE_STREAK: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineMethod {
    Newton,
    /// Trust region with `M/2`.
    Utr1,
    /// Trust region with `M`.
    Utr2,
    Cubic,
    CubicAccel,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 5] = [
        BaselineMethod::Newton,
        BaselineMethod::Utr1,
        BaselineMethod::Utr2,
        BaselineMethod::Cubic,
        BaselineMethod::CubicAccel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::Newton => "Newton",
            BaselineMethod::Utr1 => "UTR1",
            BaselineMethod::Utr2 => "UTR2",
            BaselineMethod::Cubic => "Cubic",
            BaselineMethod::CubicAccel => "CubicA",
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        BaselineMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown baseline {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub epsilon: f64,
    /// Hessian-Lipschitz estimate. `Utr1` runs with half of it.
    pub m: f64,
    pub max_outer: usize,
    pub method: BaselineMethod,
    pub telemetry: Telemetry,
}

impl BaselineConfig {
    pub fn new(method: BaselineMethod, epsilon: f64, m: f64) -> Self {
        BaselineConfig { epsilon, m, max_outer: 10_000, method, telemetry: Telemetry::default() }
    }

    /// Lipschitz constant the method actually runs with.
    pub fn effective_m(&self) -> f64 {
        match self.method {
            BaselineMethod::Utr1 => 0.5 * self.m,
            _ => self.m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::InvalidConfig(format!("M must be finite and > 0, got {}", self.m)));
        }
        Ok(())
    }
}

/// Minimizer of `gᵀd + ½dᵀHd + (M/6)||d||³`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicStep {
    pub d: DVector<f64>,
    /// Root `t = ||d||` of `||(H + (Mt/2)I)⁻¹g|| = t`.
    pub t: f64,
    /// `M t / 2`.
    pub mu: f64,
    pub n_factorizations: usize,
    /// `||(H + (M||d||/2)I)d + g|| / ||g||`.
    pub residual: f64,
}

/// Solves the cubic model by a safeguarded Newton iteration on
/// `1/||d(t)|| - 1/t`, which is increasing and concave in `t`. The root lies
/// in `[0, √(2||g||/M)]`.
pub fn cubic_step(h: &DMatrix<f64>, g: &DVector<f64>, m: f64) -> Result<CubicStep> {
    let n = g.len();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: h.nrows() });
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidConfig(format!("cubic coefficient must be > 0, got {m}")));
    }
    let gnorm = g.norm();
    if gnorm == 0.0 {
        return Ok(CubicStep { d: DVector::zeros(n), t: 0.0, mu: 0.0, n_factorizations: 0, residual: 0.0 });
    }
    let finish = |d: DVector<f64>, fact: usize| {
        let dn = d.norm();
        let mu = 0.5 * m * dn;
        let residual = (h * &d + &d * mu + g).norm() / gnorm;
        CubicStep { d, t: dn, mu, n_factorizations: fact, residual }
    };

    let (mut lo, mut hi) = (0.0f64, (2.0 * gnorm / m).sqrt());
    let mut t = hi;
    let mut fact = 0;
    for _ in 0..MAX_CUBIC_STEPS {
        let shift = 0.5 * m * t;
        fact += 1;
        let Some(factor) = ShiftedFactor::new(h, shift) else {
            lo = t;
            t = 0.5 * (lo + hi);
            continue;
        };
        let d = -refined_solve(h, shift, &factor, g);
        let dn = d.norm();
        if (dn - t).abs() <= 1e-12 * t {
            return Ok(finish(d, fact));
        }
        if dn > t {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(finish(d, fact));
        }
        let w = factor.solve_lower(&d);
        let value = 1.0 / dn - 1.0 / t;
        let slope = 0.5 * m * w.norm_squared() / dn.powi(3) + 1.0 / (t * t);
        let next = t - value / slope;
        t = if next.is_finite() && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    Err(Error::MaxIterations { what: "cubic secular equation", limit: MAX_CUBIC_STEPS, best: None })
}

/// Validates the run and records the starting row.
fn start_run(rec: &mut Recorder<'_>, cfg: &BaselineConfig, x0: &Point) -> Result<(f64, DVector<f64>)> {
    let problem = rec.problem;
    cfg.validate()?;
    check_dim(problem.dim(), x0)?;
    let (f0, g0) = (problem.value(x0)?, problem.gradient(x0)?);
    rec.row(0, x0, f0, g0.norm(), StepInfo::default(), Phase::Global);
    Ok((f0, g0))
}

/// Runs any baseline selected by `cfg.method`.
pub fn run_baseline(problem: &dyn Objective, cfg: &BaselineConfig, x0: &Point) -> Report {
    match cfg.method {
        BaselineMethod::Newton => run_newton(problem, cfg, x0),
        BaselineMethod::Utr1 | BaselineMethod::Utr2 => run_utr(problem, cfg, x0),
        BaselineMethod::Cubic => run_cubic_newton(problem, cfg, x0),
        BaselineMethod::CubicAccel => run_cubic_accel(problem, cfg, x0),
    }
}

/// Plain iteration `x_{k+1} = x_k + step(x_k)` shared by Newton, UTR and
/// cubic Newton.
fn run_plain<F>(
    problem: &dyn Objective,
    cfg: &BaselineConfig,
    x0: &Point,
    name: &str,
    detect_divergence: bool,
    mut step: F,
) -> Report
where
    F: FnMut(&DMatrix<f64>, &DVector<f64>, &mut Recorder<'_>) -> Result<(DVector<f64>, StepInfo)>,
{
    let mut rec = Recorder::new(problem, name, cfg.telemetry.wall_clock);
    let (f0, g0) = match start_run(&mut rec, cfg, x0) {
        Ok(v) => v,
        Err(e) => return rec.finish(x0.clone(), f64::NAN, f64::NAN, Termination::from_error(&e), 0),
    };
    if g0.norm() <= cfg.epsilon {
        let gn = g0.norm();
        return rec.finish(x0.clone(), f0, gn, Termination::GradTol, 0);
    }
    let (mut x, mut f, mut g) = (x0.clone(), f0, g0);
    let mut increases = 0;
    for k in 0..cfg.max_outer {
        let attempt = (|| -> Result<(Point, f64, DVector<f64>, StepInfo)> {
            let h = problem.hessian(&x)?;
            let (d, info) = step(&h, &g, &mut rec)?;
            let x_next = &x + d;
            let f_next = problem.value(&x_next)?;
            let g_next = problem.gradient(&x_next)?;
            Ok((x_next, f_next, g_next, info))
        })();
        let (x_next, f_next, g_next, info) = match attempt {
            Ok(v) => v,
            Err(e) => return rec.finish_best(Termination::from_error(&e), k),
        };
        let gn = g_next.norm();
        rec.row(k + 1, &x_next, f_next, gn, info, Phase::Global);
        if detect_divergence {
            increases = if f_next > f { increases + 1 } else { 0 };
            if increases >= DIVERGENCE_STREAK {
                return rec.finish(x_next, f_next, gn, Termination::from_error(&Error::Diverged), k + 1);
            }
        }
        if gn <= cfg.epsilon {
            return rec.finish(x_next, f_next, gn, Termination::GradTol, k + 1);
        }
        (x, f, g) = (x_next, f_next, g_next);
    }
    rec.finish_best(Termination::MaxIterations, cfg.max_outer)
}

/// Undamped Newton's method.
pub fn run_newton(problem: &dyn Objective, cfg: &BaselineConfig, x0: &Point) -> Report {
    run_plain(problem, cfg, x0, "Newton", true, |h, g, rec| {
        rec.problem.counters().record_factorizations(1);
        let d = unconstrained_step(h, g, 0.0)?;
        let info = StepInfo { inner_calls: 1, step_norm: d.norm(), ..StepInfo::default() };
        Ok((d, info))
    })
}

/// Unaccelerated trust-region method with `σ_k = M r_k ∝ ||∇f(x_k)||^{1/2}`.
pub fn run_utr(problem: &dyn Objective, cfg: &BaselineConfig, x0: &Point) -> Report {
    let m = cfg.effective_m();
    run_plain(problem, cfg, x0, cfg.method.name(), false, |h, g, rec| {
        let (sigma, radius) = sigma_radius(g.norm(), m);
        let sol = solve_trs(&TrsRequest::new(h, g, sigma, radius))?;
        rec.problem.counters().record_factorizations(sol.n_factorizations as u64);
        let info = StepInfo {
            inner_calls: 1,
            sigma,
            lambda: sol.lambda,
            mu: sol.mu(sigma),
            step_norm: sol.step_norm(),
        };
        Ok((sol.d, info))
    })
}

/// Cubic regularized Newton with coefficient `M`.
pub fn run_cubic_newton(problem: &dyn Objective, cfg: &BaselineConfig, x0: &Point) -> Report {
    let m = cfg.m;
    run_plain(problem, cfg, x0, "Cubic", false, |h, g, rec| {
        let step = cubic_step(h, g, m)?;
        rec.problem.counters().record_factorizations(step.n_factorizations as u64);
        rec.diagnostics.cubic_residuals.push(step.residual);
        let info = StepInfo { inner_calls: 1, mu: step.mu, step_norm: step.t, ..StepInfo::default() };
        Ok((step.d, info))
    })
}

/// Next point, its value and gradient, and the step telemetry.
type AccelStep = (Point, f64, DVector<f64>, StepInfo);

/// Accelerated cubic Newton: the estimating-sequence scaffold of the
/// accelerated trust-region method with the cubic step at `y_k`.
///
/// The cubic model uses coefficient `2M`, which gives `μ = M||d||` and keeps
/// the same model function valid.
pub fn run_cubic_accel(problem: &dyn Objective, cfg: &BaselineConfig, x0: &Point) -> Report {
    let (eps, m) = (cfg.epsilon, cfg.m);
    let mut rec = Recorder::new(problem, "CubicA", cfg.telemetry.wall_clock);
    let (f0, g0) = match start_run(&mut rec, cfg, x0) {
        Ok((f, g)) => (f, g.norm()),
        Err(e) => return rec.finish(x0.clone(), f64::NAN, f64::NAN, Termination::from_error(&e), 0),
    };
    if g0 <= eps {
        return rec.finish(x0.clone(), f0, g0, Termination::GradTol, 0);
    }
    let mut state = EstSeqState::new(x0.clone());
    for k in 0..cfg.max_outer {
        let y = extrapolate(&state.x, &state.v, state.k);
        let attempt = (|| -> Result<Option<AccelStep>> {
            let gy = problem.gradient(&y)?;
            if gy.norm() <= eps {
                return Ok(None);
            }
            let hy = problem.hessian(&y)?;
            let step = cubic_step(&hy, &gy, 2.0 * m)?;
            problem.counters().record_factorizations(step.n_factorizations as u64);
            rec.diagnostics.cubic_residuals.push(step.residual);
            let x_next = &y + &step.d;
            let f_next = problem.value(&x_next)?;
            let g_next = problem.gradient(&x_next)?;
            let info = StepInfo { inner_calls: 1, mu: step.mu, step_norm: step.t, ..StepInfo::default() };
            Ok(Some((x_next, f_next, g_next, info)))
        })();
        let (x_next, f_next, g_next, info) = match attempt {
            Ok(Some(v)) => v,
            Ok(None) => {
                let res = problem.value(&y).and_then(|f| Ok((f, problem.gradient(&y)?.norm())));
                return match res {
                    Ok((f, gn)) => {
                        if k > 0 {
                            rec.row(k + 1, &y, f, gn, StepInfo::default(), Phase::Global);
                        }
                        rec.finish(y, f, gn, Termination::GradTol, k)
                    }
                    Err(e) => rec.finish_best(Termination::from_error(&e), k),
                };
            }
            Err(e) => return rec.finish_best(Termination::from_error(&e), k),
        };
        let gn = g_next.norm();
        rec.row(k + 1, &x_next, f_next, gn, info, Phase::Global);
        if gn <= eps {
            return rec.finish(x_next, f_next, gn, Termination::GradTol, k + 1);
        }
        state = state.update_dual_averaging(&g_next, f_next, &x_next, m);
        if cfg.telemetry.invariants {
            let big_a = weight_big_a(state.k);
            let phi_star = state.phi_star(m);
            if big_a * f_next > phi_star + 1e-7 * (1.0 + phi_star.abs()) {
                rec.violations.push(format!(
                    "k={}: A_k f(x_k) = {:e} exceeds phi_k* = {phi_star:e}",
                    state.k,
                    big_a * f_next
                ));
            }
            rec.diagnostics.estimates.push(EstimateSample {
                k: state.k,
                big_a,
                f_x: f_next,
                phi_star,
                mu: info.mu,
                step_norm: info.step_norm,
                phase: Phase::Global,
            });
        }
    }
    rec.finish_best(Termination::MaxIterations, cfg.max_outer)
}
