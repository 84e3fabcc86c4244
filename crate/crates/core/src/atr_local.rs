//! Accelerated trust-region method with local detection.
//!
//! Each outer step extrapolates `y_k` between the primal iterate and the
//! estimating-sequence minimizer, solves the regularized trust-region
//! subproblem at `y_k` with `σ_k = M r_k ∝ ||∇f(y_k)||^{1/2}`, and, when the
//! multiplier vanishes, hands control to local detection: an early-exit
//! test, a budgeted Newton dive, and a bisection over the radius that
//! restores `M||d|| <= μ <= 2M||d||`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{refined_solve, ShiftedFactor};
use crate::objective::{hessian_norm_of, Objective, Point};
use crate::report::{EstimateSample, LdRecord, Phase, Recorder, Report, StepInfo, Telemetry, Termination};
use crate::trs::{solve_trs, unconstrained_step, TrsRequest};

/// Relative slack allowed on `M||d|| <= μ <= 2M||d||` before a violation is
/// recorded.
pub const RATIO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AtrLdConfig {
    pub epsilon: f64,
    /// Hessian-Lipschitz constant.
    pub m: f64,
    /// Hessian norm bound; estimated from `∇²f(x0)` when `None`.
    pub kappa_h: Option<f64>,
    pub max_outer: usize,
    pub lambda_zero_tol: f64,
    pub bisection_max: usize,
    pub telemetry: Telemetry,
}

impl AtrLdConfig {
    pub fn new(epsilon: f64, m: f64) -> Self {
        AtrLdConfig {
            epsilon,
            m,
            kappa_h: None,
            max_outer: 10_000,
            lambda_zero_tol: 1e-8,
            bisection_max: 100,
            telemetry: Telemetry::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::InvalidConfig(format!("M must be finite and > 0, got {}", self.m)));
        }
        if let Some(k) = self.kappa_h {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::InvalidConfig(format!("kappa_h must be finite and >= 0, got {k}")));
            }
        }
        Ok(())
    }
}

/// `y = k/(k+3) x + 3/(k+3) v`.
pub fn extrapolate(x: &Point, v: &Point, k: usize) -> Point {
    let kf = k as f64;
    x * (kf / (kf + 3.0)) + v * (3.0 / (kf + 3.0))
}

/// `(σ, r) = (√(2M)/2 · ||g||^{1/2}, ||g||^{1/2} / √(2M))`, so `σ = M r`.
pub fn sigma_radius(g_norm: f64, m: f64) -> (f64, f64) {
    let s = g_norm.sqrt();
    let root = (2.0 * m).sqrt();
    (0.5 * root * s, s / root)
}

/// `a_k = (k+1)(k+2)/2`.
pub fn weight_a(k: usize) -> f64 {
    let k = k as f64;
    (k + 1.0) * (k + 2.0) / 2.0
}

/// `A_k = k(k+1)(k+2)/6 = Σ_{i<k} a_i`.
pub fn weight_big_a(k: usize) -> f64 {
    let k = k as f64;
    k * (k + 1.0) * (k + 2.0) / 6.0
}

/// Estimating-sequence state. The model function is
/// `φ_k(x) = (M/8)||x - x0||³ + c + <s, x>`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstSeqState {
    pub k: usize,
    pub x: Point,
    pub v: Point,
    pub s: DVector<f64>,
    pub c: f64,
    pub x0: Point,
}

impl EstSeqState {
    pub fn new(x0: Point) -> Self {
        EstSeqState { k: 0, x: x0.clone(), v: x0.clone(), s: DVector::zeros(x0.len()), c: 0.0, x0 }
    }

    /// Folds `∇f(x_{k+1})` into the model and moves to index `k + 1`.
    pub fn update_dual_averaging(&self, grad_next: &DVector<f64>, f_next: f64, x_next: &Point, m: f64) -> EstSeqState {
        let a = weight_a(self.k);
        let s = &self.s + grad_next * a;
        let c = self.c + a * (f_next - grad_next.dot(x_next));
        let sn = s.norm();
        let v = if sn > 0.0 { &self.x0 - &s * (8.0 / (3.0 * m * sn)).sqrt() } else { self.x0.clone() };
        EstSeqState { k: self.k + 1, x: x_next.clone(), v, s, c, x0: self.x0.clone() }
    }

    /// `φ_k(x)`.
    pub fn phi_at(&self, x: &Point, m: f64) -> f64 {
        (m / 8.0) * (x - &self.x0).norm().powi(3) + self.c + self.s.dot(x)
    }

    /// `φ_k* = φ_k(v_k)`.
    pub fn phi_star(&self, m: f64) -> f64 {
        self.phi_at(&self.v, m)
    }
}

/// Result of a Newton dive.
#[derive(Debug, Clone, PartialEq)]
pub struct Diving {
    pub point: Point,
    pub success: bool,
    pub steps: usize,
    /// `||∇f(z_i)||` for `i = 0..=steps`.
    pub grad_norms: Vec<f64>,
    pub aborted: bool,
}

/// `⌈log₂(||∇f(y)|| / ε)⌉`, clamped at zero.
pub fn diving_budget(g_norm: f64, eps: f64) -> usize {
    if g_norm <= eps {
        0
    } else {
        (g_norm / eps).log2().ceil().max(0.0) as usize
    }
}

/// Newton direction `-H⁻¹g`, allowing a diagonal shift of at most
/// `1e-8 ||H||`. Returns the direction (if any) and the number of
/// factorization attempts.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> (Option<DVector<f64>>, usize) {
    let hn = h.norm();
    let floor = h.nrows().max(1) as f64 * f64::EPSILON;
    let mut attempts = 0;
    for shift in [0.0, 1e-10 * hn, 1e-8 * hn] {
        attempts += 1;
        if let Some(f) = ShiftedFactor::new(h, shift) {
            if f.pivot_ratio() >= floor {
                return (Some(-refined_solve(h, shift, &f, g)), attempts);
            }
        }
    }
    (None, attempts)
}

/// Newton's method from `y` for at most `max_iters` steps, stopping as soon
/// as `||∇f(z_i)|| <= eps`.
pub fn local_diving(problem: &dyn Objective, y: &Point, eps: f64, max_iters: usize) -> Result<Diving> {
    let g = problem.gradient(y)?;
    let h = problem.hessian(y)?;
    dive_from(problem, y, g, h, eps, max_iters)
}

fn dive_from(
    problem: &dyn Objective,
    y: &Point,
    g: DVector<f64>,
    h: DMatrix<f64>,
    eps: f64,
    max_iters: usize,
) -> Result<Diving> {
    let mut z = y.clone();
    let mut grad_norms = vec![g.norm()];
    if grad_norms[0] <= eps {
        return Ok(Diving { point: z, success: true, steps: 0, grad_norms, aborted: false });
    }
    let (mut g, mut h) = (g, Some(h));
    for i in 1..=max_iters {
        let hz = match h.take() {
            Some(h) => h,
            None => problem.hessian(&z)?,
        };
        let (dir, attempts) = newton_direction(&hz, &g);
        problem.counters().record_factorizations(attempts as u64);
        let Some(dir) = dir else {
            return Ok(Diving { point: z, success: false, steps: i - 1, grad_norms, aborted: true });
        };
        let next = &z + dir;
        let g_next = match problem.gradient(&next) {
            Ok(g) => g,
            Err(Error::NumericalOverflow(_)) => {
                return Ok(Diving { point: z, success: false, steps: i - 1, grad_norms, aborted: true });
            }
            Err(e) => return Err(e),
        };
        let gn = g_next.norm();
        let prev = *grad_norms.last().expect("nonempty");
        grad_norms.push(gn);
        z = next;
        g = g_next;
        if gn <= eps {
            return Ok(Diving { point: z, success: true, steps: i, grad_norms, aborted: false });
        }
        if !(gn <= 0.999 * prev) {
            return Ok(Diving { point: z, success: false, steps: i, grad_norms, aborted: true });
        }
    }
    Ok(Diving { point: z, success: false, steps: max_iters, grad_norms, aborted: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdOutcome {
    pub point: Point,
    pub early_terminate: bool,
    pub track: Phase,
    /// Step from `y`; empty for a diving exit.
    pub step: DVector<f64>,
    pub mu: f64,
    pub oracle_calls: usize,
    /// `∇f(point)` when it was evaluated on the way.
    pub gradient: Option<DVector<f64>>,
    pub record: LdRecord,
}

/// Local detection at `y`, evaluating `∇f(y)` and `∇²f(y)`.
///
/// `kappa_h` is the Hessian norm bound used by the early-exit test.
pub fn local_detection(
    problem: &dyn Objective,
    y: &Point,
    mu_plus: f64,
    d_plus: &DVector<f64>,
    cfg: &AtrLdConfig,
    kappa_h: f64,
) -> Result<LdOutcome> {
    let g = problem.gradient(y)?;
    let h = problem.hessian(y)?;
    detect(problem, y, &g, &h, mu_plus, d_plus, cfg, kappa_h)
}

#[allow(clippy::too_many_arguments)]
fn detect(
    problem: &dyn Objective,
    y: &Point,
    g: &DVector<f64>,
    h: &DMatrix<f64>,
    mu_plus: f64,
    d_plus: &DVector<f64>,
    cfg: &AtrLdConfig,
    kappa_h: f64,
) -> Result<LdOutcome> {
    let (eps, m) = (cfg.epsilon, cfg.m);
    let dp = d_plus.norm();
    let budget = diving_budget(g.norm(), eps);
    let mut record = LdRecord {
        outer_k: 0,
        track: Phase::DirectAccept,
        early_terminate: false,
        diving_grad_norms: Vec::new(),
        diving_budget: budget,
        diving_success: false,
        bisection_calls: 0,
        mu_plus,
        kappa_h,
        ratio: None,
    };

    // (a) tiny step: y + d₊ already meets the tolerance
    let threshold = (eps / (2.0 * kappa_h)).min((eps / m).sqrt());
    if dp <= threshold {
        let point = y + d_plus;
        let gp = problem.gradient(&point)?;
        if gp.norm() <= eps {
            record.early_terminate = true;
            return Ok(LdOutcome {
                point,
                early_terminate: true,
                track: Phase::DirectAccept,
                step: d_plus.clone(),
                mu: mu_plus,
                oracle_calls: 0,
                gradient: Some(gp),
                record,
            });
        }
    }

    // Track 1
    let dive = dive_from(problem, y, g.clone(), h.clone(), eps, budget)?;
    record.diving_grad_norms = dive.grad_norms.clone();
    record.diving_success = dive.success;
    if dive.success {
        record.track = Phase::Diving;
        record.early_terminate = true;
        return Ok(LdOutcome {
            point: dive.point,
            early_terminate: true,
            track: Phase::Diving,
            step: DVector::zeros(0),
            mu: 0.0,
            oracle_calls: dive.steps,
            gradient: None,
            record,
        });
    }
    let mut calls = dive.steps;

    // Track 2
    if mu_plus <= 2.0 * m * dp {
        record.ratio = Some(mu_plus / dp);
        return Ok(LdOutcome {
            point: y + d_plus,
            early_terminate: false,
            track: Phase::DirectAccept,
            step: d_plus.clone(),
            mu: mu_plus,
            oracle_calls: calls,
            gradient: None,
            record,
        });
    }
    record.track = Phase::Bisection;
    let mut r_lo = dp;
    let mut r_hi = unconstrained_step(h, g, m * dp)?.norm();
    problem.counters().record_factorizations(1);
    for bisections in 1..=cfg.bisection_max {
        if r_hi - r_lo < 1e-15 * r_hi {
            return Err(Error::BisectionStall {
                calls: bisections - 1,
                detail: format!("radius bracket [{r_lo:e}, {r_hi:e}] collapsed"),
            });
        }
        let r = 0.5 * (r_lo + r_hi);
        let sol = solve_trs(&TrsRequest::new(h, g, 0.0, r))?;
        problem.counters().record_factorizations(sol.n_factorizations as u64);
        calls += 1;
        record.bisection_calls = bisections;
        let dn = sol.step_norm();
        let ratio = if dn > 0.0 { sol.lambda / dn } else { f64::INFINITY };
        if ratio < m {
            r_hi = r;
        } else if ratio > 2.0 * m {
            r_lo = r;
        } else {
            record.ratio = Some(ratio);
            return Ok(LdOutcome {
                point: y + &sol.d,
                early_terminate: false,
                track: Phase::Bisection,
                mu: sol.lambda,
                step: sol.d,
                oracle_calls: calls,
                gradient: None,
                record,
            });
        }
    }
    Err(Error::BisectionStall {
        calls: cfg.bisection_max,
        detail: format!("no ratio in [M, 2M] after {} bisections on [{r_lo:e}, {r_hi:e}]", cfg.bisection_max),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome<S> {
    Continue(S),
    Terminated { point: Point, f: f64, grad_norm: f64, reason: Termination },
}

/// Telemetry of one outer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub sigma: f64,
    pub lambda: f64,
    pub mu: f64,
    pub step_norm: f64,
    pub phase: Phase,
    pub inner_calls: usize,
    pub local_detection: Option<LdRecord>,
    pub estimate: Option<EstimateSample>,
    pub violations: Vec<String>,
    /// The step stopped at `y_k` without taking a step.
    pub stopped_at_y: bool,
    /// `f` and `||∇f||` at the new iterate.
    pub f_next: f64,
    pub grad_norm_next: f64,
}

/// One outer iteration of the accelerated method.
pub fn step_variant1(
    state: &EstSeqState,
    problem: &dyn Objective,
    cfg: &AtrLdConfig,
    kappa_h: &mut Option<f64>,
) -> Result<(StepOutcome<EstSeqState>, StepReport)> {
    let (eps, m) = (cfg.epsilon, cfg.m);
    let k = state.k;
    let mut info = StepReport {
        sigma: 0.0,
        lambda: 0.0,
        mu: 0.0,
        step_norm: 0.0,
        phase: Phase::Global,
        inner_calls: 0,
        local_detection: None,
        estimate: None,
        violations: Vec::new(),
        stopped_at_y: false,
        f_next: f64::NAN,
        grad_norm_next: f64::NAN,
    };

    let y = extrapolate(&state.x, &state.v, k);
    let gy = problem.gradient(&y)?;
    let gn = gy.norm();
    if gn <= eps {
        let f = problem.value(&y)?;
        info.stopped_at_y = true;
        return Ok((StepOutcome::Terminated { point: y, f, grad_norm: gn, reason: Termination::GradTol }, info));
    }
    let hy = problem.hessian(&y)?;
    let kappa = *kappa_h.get_or_insert_with(|| hessian_norm_of(&hy).value);

    let (sigma, radius) = sigma_radius(gn, m);
    let sol = solve_trs(&TrsRequest::new(&hy, &gy, sigma, radius))?;
    problem.counters().record_factorizations(sol.n_factorizations as u64);
    info.sigma = sigma;
    info.lambda = sol.lambda;
    info.inner_calls = 1;

    let (x_next, mu, step_norm, phase, known_grad) = if sol.lambda <= cfg.lambda_zero_tol * sigma.max(1.0) {
        let mu_plus = sol.mu(sigma);
        let out = detect(problem, &y, &gy, &hy, mu_plus, &sol.d, cfg, kappa)?;
        info.inner_calls += out.oracle_calls;
        let mut record = out.record.clone();
        record.outer_k = k + 1;
        info.local_detection = Some(record);
        info.phase = out.track;
        if out.early_terminate {
            let g = match out.gradient {
                Some(g) => g,
                None => problem.gradient(&out.point)?,
            };
            let f = problem.value(&out.point)?;
            let grad_norm = g.norm();
            if cfg.telemetry.invariants && grad_norm > eps {
                info.violations.push(format!("k={}: early exit with ||g|| = {grad_norm:e} > eps", k + 1));
            }
            info.mu = out.mu;
            info.step_norm = out.step.norm();
            return Ok((
                StepOutcome::Terminated { point: out.point, f, grad_norm, reason: Termination::EarlyTerminate },
                info,
            ));
        }
        let sn = out.step.norm();
        (out.point, out.mu, sn, out.track, out.gradient)
    } else {
        let sn = sol.step_norm();
        (&y + &sol.d, sol.mu(sigma), sn, Phase::Global, None)
    };
    info.mu = mu;
    info.step_norm = step_norm;
    info.phase = phase;
    if cfg.telemetry.invariants {
        let lo = m * step_norm;
        if mu < lo * (1.0 - RATIO_TOL) || mu > 2.0 * lo * (1.0 + RATIO_TOL) {
            info.violations.push(format!(
                "k={}: ratio mu/||d|| = {:e} outside [M, 2M] = [{m:e}, {:e}] ({phase})",
                k + 1,
                mu / step_norm,
                2.0 * m
            ));
        }
    }

    let g_next = match known_grad {
        Some(g) => g,
        None => problem.gradient(&x_next)?,
    };
    let f_next = problem.value(&x_next)?;
    let grad_norm = g_next.norm();
    info.f_next = f_next;
    info.grad_norm_next = grad_norm;
    if grad_norm <= eps {
        return Ok((StepOutcome::Terminated { point: x_next, f: f_next, grad_norm, reason: Termination::GradTol }, info));
    }
    let next = state.update_dual_averaging(&g_next, f_next, &x_next, m);
    if cfg.telemetry.invariants {
        let big_a = weight_big_a(next.k);
        let phi_star = next.phi_star(m);
        if big_a * f_next > phi_star + 1e-7 * (1.0 + phi_star.abs()) {
            info.violations.push(format!(
                "k={}: A_k f(x_k) = {:e} exceeds phi_k* = {phi_star:e}",
                next.k,
                big_a * f_next
            ));
        }
        info.estimate = Some(EstimateSample { k: next.k, big_a, f_x: f_next, phi_star, mu, step_norm, phase });
    }
    Ok((StepOutcome::Continue(next), info))
}

/// Runs the accelerated method from `x0`.
pub fn run_variant1(problem: &dyn Objective, cfg: &AtrLdConfig, x0: &Point) -> Report {
    run_variant1_named(problem, cfg, x0, "ATR-I")
}

pub(crate) fn run_variant1_named(problem: &dyn Objective, cfg: &AtrLdConfig, x0: &Point, name: &str) -> Report {
    let mut rec = Recorder::new(problem, name, cfg.telemetry.wall_clock);
    if let Err(e) = cfg.validate().and_then(|_| crate::objective::check_dim(problem.dim(), x0)) {
        return rec.finish(x0.clone(), f64::NAN, f64::NAN, Termination::from_error(&e), 0);
    }
    let start = problem.value(x0).and_then(|f| Ok((f, problem.gradient(x0)?.norm())));
    let (f0, g0) = match start {
        Ok(v) => v,
        Err(e) => return rec.finish(x0.clone(), f64::NAN, f64::NAN, Termination::from_error(&e), 0),
    };
    rec.row(0, x0, f0, g0, StepInfo::default(), Phase::Global);
    if g0 <= cfg.epsilon {
        return rec.finish(x0.clone(), f0, g0, Termination::GradTol, 0);
    }

    let mut kappa = cfg.kappa_h;
    let mut state = EstSeqState::new(x0.clone());
    for k in 0..cfg.max_outer {
        let (outcome, info) = match step_variant1(&state, problem, cfg, &mut kappa) {
            Ok(v) => v,
            Err(e) => return rec.finish_best(Termination::from_error(&e), k),
        };
        if k == 0 {
            if let Some(kh) = kappa {
                rec.diagnostics.notes.push(format!("kappa_h = {kh:e}"));
            }
        }
        rec.violations.extend(info.violations.iter().cloned());
        if let Some(ld) = info.local_detection.clone() {
            rec.diagnostics.local_detections.push(ld);
        }
        if let Some(s) = info.estimate {
            rec.diagnostics.estimates.push(s);
        }
        let step = StepInfo {
            inner_calls: info.inner_calls,
            sigma: info.sigma,
            lambda: info.lambda,
            mu: info.mu,
            step_norm: info.step_norm,
        };
        match outcome {
            StepOutcome::Continue(next) => {
                state = next;
                rec.row(k + 1, &state.x, info.f_next, info.grad_norm_next, step, info.phase);
            }
            StepOutcome::Terminated { point, f, grad_norm, reason } => {
                if info.stopped_at_y && k == 0 {
                    return rec.finish(point, f, grad_norm, reason, 0);
                }
                rec.row(k + 1, &point, f, grad_norm, step, info.phase);
                return rec.finish(point, f, grad_norm, reason, k + 1);
            }
        }
    }
    rec.finish_best(Termination::MaxIterations, cfg.max_outer)
}
