//! Accelerated trust-region extragradient method.
//!
//! The primal regularizer `σ` fixes both the weight `a(σ)` and the
//! extrapolation point `y(σ)`; a bisection over `σ` (ratio bracketing and
//! bisection) looks for the value at which the trust-region multiplier and
//! step satisfy `0 <= λ <= (θ-1)σ` and `||d|| >= (η/M)σ`.

use nalgebra::DVector;

use crate::atr_local::StepOutcome;
use crate::error::{Error, Result};
use crate::objective::{check_dim, hessian_norm_of, Objective, Point};
use crate::report::{Phase, Recorder, Report, RnbRecord, StepInfo, Telemetry, Termination};
use crate::trs::{solve_trs, TrsRequest, TrsSolution};

/// Relative slack on the acceptance window before a violation is recorded.
pub const WINDOW_TOL: f64 = 1e-8;

/// How the upper bracket `σ₊ = √(M G₀ / η)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum G0Policy {
    UserSupplied(f64),
    /// `G₀ = c κ̂ D₀ + (M/2) c² D₀²` with `c = 4/√(3γ) + 1`; needs `d0`.
    FromD0,
    /// Start from `G₀ = ||∇f(x0)||` and double `σ₊` whenever the bracket
    /// test `||∇f(y(σ₊))|| <= G₀` fails.
    AdaptiveDoubling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtrEgConfig {
    pub epsilon: f64,
    pub m: f64,
    pub theta: f64,
    pub eta: f64,
    pub gamma: f64,
    /// Estimate of `||x0 - x*||`.
    pub d0: Option<f64>,
    pub g0_policy: G0Policy,
    /// Hessian norm bound for [`G0Policy::FromD0`]; estimated at `x0` when
    /// `None`.
    pub kappa_h: Option<f64>,
    pub max_outer: usize,
    pub bisection_max: usize,
    pub max_restarts: usize,
    pub lambda_zero_tol: f64,
    pub telemetry: Telemetry,
}

impl AtrEgConfig {
    pub fn new(epsilon: f64, m: f64) -> Self {
        AtrEgConfig {
            epsilon,
            m,
            theta: 2.0,
            eta: 0.5,
            gamma: 0.5,
            d0: None,
            g0_policy: G0Policy::AdaptiveDoubling,
            kappa_h: None,
            max_outer: 10_000,
            bisection_max: 64,
            max_restarts: 10,
            lambda_zero_tol: 1e-8,
            telemetry: Telemetry::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("M must be finite and > 0, got {}", self.m));
        }
        if !(self.theta > 1.0 && self.theta.is_finite()) {
            return bad(format!("theta must be > 1, got {}", self.theta));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0 / self.theta) {
            return bad(format!("gamma must lie in (0, 1/theta], got {}", self.gamma));
        }
        match self.g0_policy {
            G0Policy::UserSupplied(g) if !(g > 0.0 && g.is_finite()) => {
                return bad(format!("G0 must be finite and > 0, got {g}"));
            }
            G0Policy::FromD0 if !self.d0.is_some_and(|d| d > 0.0 && d.is_finite()) => {
                return bad("the FromD0 policy needs d0 > 0".into());
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtraState {
    pub k: usize,
    pub x: Point,
    pub v: Point,
    pub big_a: f64,
}

impl ExtraState {
    pub fn new(x0: Point) -> Self {
        ExtraState { k: 0, x: x0.clone(), v: x0, big_a: 0.0 }
    }
}

/// Positive root of `σa² = A + a`.
pub fn a_of_sigma(big_a: f64, sigma: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * big_a * sigma).sqrt()) / (2.0 * sigma)
}

/// `y(σ) = A/(A+a) x + a/(A+a) v` with `a = a(σ)`.
pub fn y_of_sigma(x: &Point, v: &Point, big_a: f64, sigma: f64) -> Point {
    let a = a_of_sigma(big_a, sigma);
    let t = big_a + a;
    x * (big_a / t) + v * (a / t)
}

/// `G₀ = c κ̂ D₀ + (M/2) c² D₀²` with `c = 4/√(3γ) + 1`.
pub fn g0_from_d0(kappa_h: f64, d0: f64, m: f64, gamma: f64) -> f64 {
    let c = 4.0 / (3.0 * gamma).sqrt() + 1.0;
    c * kappa_h * d0 + 0.5 * m * c * c * d0 * d0
}

/// Lower end `σ₋ = √(2Mε/(1+2θ))`.
pub fn sigma_minus(cfg: &AtrEgConfig) -> f64 {
    (2.0 * cfg.m * cfg.epsilon / (1.0 + 2.0 * cfg.theta)).sqrt()
}

/// Upper end `σ₊ = √(M G₀/η)`.
pub fn sigma_plus(cfg: &AtrEgConfig, g0: f64) -> f64 {
    (cfg.m * g0 / cfg.eta).sqrt()
}

/// Initial bracket. `kappa_h` is only used by [`G0Policy::FromD0`].
pub fn bracket_init(cfg: &AtrEgConfig, grad_norm_x0: f64, kappa_h: f64) -> Result<(f64, f64)> {
    let g0 = match cfg.g0_policy {
        G0Policy::UserSupplied(g) => g,
        G0Policy::FromD0 => {
            let d0 = cfg.d0.ok_or_else(|| Error::InvalidConfig("the FromD0 policy needs d0".into()))?;
            g0_from_d0(kappa_h, d0, cfg.m, cfg.gamma)
        }
        G0Policy::AdaptiveDoubling => grad_norm_x0,
    };
    let (lo, hi) = (sigma_minus(cfg), sigma_plus(cfg, g0));
    if !(lo < hi) {
        return Err(Error::BracketError { lower: lo, upper: hi });
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaClass {
    /// `λ = 0` and `||d|| < (η/M)σ`: σ is too large.
    StepTooSmall,
    /// `λ > (θ-1)σ`: σ is too small.
    LambdaTooLarge,
    Accept,
}

pub fn classify_sigma(lambda: f64, d: &DVector<f64>, sigma: f64, cfg: &AtrEgConfig) -> SigmaClass {
    if lambda <= cfg.lambda_zero_tol * sigma && d.norm() < cfg.eta / cfg.m * sigma {
        SigmaClass::StepTooSmall
    } else if lambda > (cfg.theta - 1.0) * sigma {
        SigmaClass::LambdaTooLarge
    } else {
        SigmaClass::Accept
    }
}

/// `ψ(σ, y) = ||(∇²f(y) + σI)⁻¹∇f(y)|| / σ`.
pub fn psi(problem: &dyn Objective, sigma: f64, y: &Point) -> Result<f64> {
    let g = problem.gradient(y)?;
    if g.norm() == 0.0 {
        return Ok(0.0);
    }
    let h = problem.hessian(y)?;
    let d = crate::trs::unconstrained_step(&h, &g, sigma)?;
    problem.counters().record_factorizations(1);
    Ok(d.norm() / sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnbOutcome {
    pub x_next: Point,
    pub y: Point,
    pub sigma: f64,
    pub lambda: f64,
    pub d: DVector<f64>,
    pub early_terminate: bool,
    pub oracle_calls: usize,
    pub restarts: usize,
    /// `ψ(σ, y(σ))` at the returned σ, from the same solve.
    pub psi: f64,
}

/// Upper bracket carried across outer iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub sigma_plus: f64,
    /// `G₀` implied by `σ₊` (`η σ₊² / M`).
    pub g0: f64,
}

struct Probe {
    y: Point,
    sol: TrsSolution,
}

fn probe(problem: &dyn Objective, x: &Point, v: &Point, big_a: f64, sigma: f64, m: f64) -> Result<Probe> {
    let y = y_of_sigma(x, v, big_a, sigma);
    let g = problem.gradient(&y)?;
    let h = problem.hessian(&y)?;
    let sol = solve_trs(&TrsRequest::new(&h, &g, sigma, sigma / m))?;
    problem.counters().record_factorizations(sol.n_factorizations as u64);
    Ok(Probe { y, sol })
}

fn outcome(p: Probe, sigma: f64, early_terminate: bool, calls: usize, restarts: usize) -> RnbOutcome {
    RnbOutcome {
        x_next: &p.y + &p.sol.d,
        psi: p.sol.unconstrained_norm / sigma,
        y: p.y,
        sigma,
        lambda: p.sol.lambda,
        d: p.sol.d,
        early_terminate,
        oracle_calls: calls,
        restarts,
    }
}

/// Ratio bracketing and bisection over σ. `bracket` holds the current upper
/// end and is enlarged in place under [`G0Policy::AdaptiveDoubling`].
pub fn rnb_search(
    problem: &dyn Objective,
    x: &Point,
    v: &Point,
    big_a: f64,
    cfg: &AtrEgConfig,
    bracket: &mut Bracket,
) -> Result<RnbOutcome> {
    let (m, theta) = (cfg.m, cfg.theta);
    let s_lo = sigma_minus(cfg);
    let first = probe(problem, x, v, big_a, s_lo, m)?;
    let mut calls = 1;
    if first.sol.lambda <= (theta - 1.0) * s_lo {
        return Ok(outcome(first, s_lo, true, calls, 0));
    }

    let adaptive = matches!(cfg.g0_policy, G0Policy::AdaptiveDoubling);
    let mut restarts = 0;
    loop {
        if adaptive {
            // ||(H + σI)⁻¹g|| <= ||g||/σ, so ||∇f(y(σ₊))|| <= G₀ = ησ₊²/M keeps the
            // step at σ₊ inside the ball and shorter than (η/M)σ₊
            let mut doublings = 0;
            loop {
                let y_hi = y_of_sigma(x, v, big_a, bracket.sigma_plus);
                let g_hi = problem.gradient(&y_hi)?.norm();
                if g_hi < bracket.g0 {
                    break;
                }
                if doublings == cfg.max_restarts {
                    return Err(Error::BracketError { lower: s_lo, upper: bracket.sigma_plus });
                }
                doublings += 1;
                bracket.sigma_plus *= 2.0;
                bracket.g0 = cfg.eta * bracket.sigma_plus * bracket.sigma_plus / m;
            }
        }
        let (mut lo, mut hi) = (s_lo, bracket.sigma_plus);
        if !(lo < hi) {
            return Err(Error::BracketError { lower: lo, upper: hi });
        }
        for _ in 0..cfg.bisection_max {
            if hi - lo < 1e-15 * hi {
                break;
            }
            let sigma = 0.5 * (lo + hi);
            let p = probe(problem, x, v, big_a, sigma, m)?;
            calls += 1;
            match classify_sigma(p.sol.lambda, &p.sol.d, sigma, cfg) {
                SigmaClass::StepTooSmall => hi = sigma,
                SigmaClass::LambdaTooLarge => lo = sigma,
                SigmaClass::Accept => return Ok(outcome(p, sigma, false, calls, restarts)),
            }
        }
        if !adaptive || restarts == cfg.max_restarts {
            return Err(Error::BisectionStall {
                calls,
                detail: format!("no acceptable sigma in [{lo:e}, {hi:e}] after {restarts} restarts"),
            });
        }
        restarts += 1;
        bracket.sigma_plus *= 2.0;
        bracket.g0 = cfg.eta * bracket.sigma_plus * bracket.sigma_plus / m;
    }
}

/// Telemetry of one outer step.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtraStepReport {
    pub rnb: RnbRecord,
    pub f_next: f64,
    pub grad_norm_next: f64,
    pub violations: Vec<String>,
}

/// One outer iteration of the extragradient method.
pub fn step_variant2(
    state: &ExtraState,
    problem: &dyn Objective,
    cfg: &AtrEgConfig,
    bracket: &mut Bracket,
) -> Result<(StepOutcome<ExtraState>, ExtraStepReport)> {
    let out = rnb_search(problem, &state.x, &state.v, state.big_a, cfg, bracket)?;
    let g_next = problem.gradient(&out.x_next)?;
    let f_next = problem.value(&out.x_next)?;
    let grad_norm = g_next.norm();
    let a = a_of_sigma(state.big_a, out.sigma);
    let mut violations = Vec::new();
    let k1 = state.k + 1;
    let mut rnb = RnbRecord {
        outer_k: k1,
        sigma: out.sigma,
        lambda: out.lambda,
        step_norm: out.d.norm(),
        oracle_calls: out.oracle_calls,
        restarts: out.restarts,
        early_terminate: out.early_terminate,
        psi: out.psi,
        big_a: state.big_a,
        a,
        v_after: None,
        x_after: out.x_next.clone(),
    };

    if out.early_terminate {
        if cfg.telemetry.invariants && grad_norm > cfg.epsilon {
            violations.push(format!("k={k1}: early exit with ||g|| = {grad_norm:e} > eps"));
        }
        let report = ExtraStepReport { rnb, f_next, grad_norm_next: grad_norm, violations };
        let done = StepOutcome::Terminated {
            point: out.x_next,
            f: f_next,
            grad_norm,
            reason: Termination::EarlyTerminate,
        };
        return Ok((done, report));
    }

    if cfg.telemetry.invariants {
        let (sigma, lambda, dn) = (out.sigma, out.lambda, rnb.step_norm);
        if lambda < 0.0 || lambda > (cfg.theta - 1.0) * sigma * (1.0 + WINDOW_TOL) {
            violations.push(format!("k={k1}: lambda = {lambda:e} outside [0, (theta-1) sigma], sigma = {sigma:e}"));
        }
        if dn < cfg.eta / cfg.m * sigma * (1.0 - WINDOW_TOL) {
            violations.push(format!("k={k1}: ||d|| = {dn:e} below (eta/M) sigma = {:e}", cfg.eta / cfg.m * sigma));
        }
        if out.oracle_calls > cfg.bisection_max * (cfg.max_restarts + 1) + 1 {
            violations.push(format!("k={k1}: {} oracle calls in one search", out.oracle_calls));
        }
    }

    if grad_norm <= cfg.epsilon {
        let report = ExtraStepReport { rnb, f_next, grad_norm_next: grad_norm, violations };
        let done = StepOutcome::Terminated { point: out.x_next, f: f_next, grad_norm, reason: Termination::GradTol };
        return Ok((done, report));
    }

    let v = &state.v - &g_next * (cfg.gamma * a);
    let big_a = state.big_a + a;
    rnb.v_after = Some(v.clone());
    rnb.big_a = big_a;
    let next = ExtraState { k: k1, x: out.x_next, v, big_a };
    Ok((StepOutcome::Continue(next), ExtraStepReport { rnb, f_next, grad_norm_next: grad_norm, violations }))
}

/// Runs the extragradient method from `x0`.
pub fn run_variant2(problem: &dyn Objective, cfg: &AtrEgConfig, x0: &Point) -> Report {
    let mut rec = Recorder::new(problem, "ATR-II", cfg.telemetry.wall_clock);
    if let Err(e) = cfg.validate().and_then(|_| check_dim(problem.dim(), x0)) {
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

    let kappa = match (cfg.g0_policy, cfg.kappa_h) {
        (G0Policy::FromD0, None) => match problem.hessian(x0) {
            Ok(h) => hessian_norm_of(&h).value,
            Err(e) => return rec.finish(x0.clone(), f0, g0, Termination::from_error(&e), 0),
        },
        (_, k) => k.unwrap_or(0.0),
    };
    let mut bracket = match bracket_init(cfg, g0, kappa) {
        Ok((_, hi)) => Bracket { sigma_plus: hi, g0: cfg.eta * hi * hi / cfg.m },
        Err(e) => return rec.finish(x0.clone(), f0, g0, Termination::from_error(&e), 0),
    };
    rec.diagnostics.notes.push(format!("sigma_plus = {:e}", bracket.sigma_plus));

    let mut state = ExtraState::new(x0.clone());
    for k in 0..cfg.max_outer {
        let before = bracket.sigma_plus;
        let (outcome, info) = match step_variant2(&state, problem, cfg, &mut bracket) {
            Ok(v) => v,
            Err(e) => return rec.finish_best(Termination::from_error(&e), k),
        };
        if bracket.sigma_plus != before {
            rec.diagnostics
                .notes
                .push(format!("k={}: sigma_plus raised {before:e} -> {:e}", k + 1, bracket.sigma_plus));
        }
        rec.violations.extend(info.violations.iter().cloned());
        let step = StepInfo {
            inner_calls: info.rnb.oracle_calls,
            sigma: info.rnb.sigma,
            lambda: info.rnb.lambda,
            mu: info.rnb.sigma + info.rnb.lambda,
            step_norm: info.rnb.step_norm,
        };
        rec.diagnostics.rnb.push(info.rnb);
        match outcome {
            StepOutcome::Continue(next) => {
                state = next;
                rec.row(k + 1, &state.x, info.f_next, info.grad_norm_next, step, Phase::Global);
            }
            StepOutcome::Terminated { point, f, grad_norm, reason } => {
                rec.row(k + 1, &point, f, grad_norm, step, Phase::Global);
                return rec.finish(point, f, grad_norm, reason, k + 1);
            }
        }
    }
    rec.finish_best(Termination::MaxIterations, cfg.max_outer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{synthetic, QuadraticProblem};
    use nalgebra::DMatrix;

    fn p(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    #[test]
    fn weight_examples() {
        assert_eq!(a_of_sigma(0.0, 4.0), 0.25);
        assert_eq!(a_of_sigma(2.0, 1.0), 2.0);
        for (big_a, sigma) in [(0.0, 1e-6), (3.5, 0.2), (1e6, 7.0), (12.0, 1e3)] {
            let a = a_of_sigma(big_a, sigma);
            assert!((sigma * a * a - (big_a + a)).abs() <= 1e-12 * (big_a + a + 1.0));
        }
    }

    #[test]
    fn curve_examples() {
        let (x, v) = (p(&[1.0, 0.0]), p(&[0.0, 1.0]));
        assert_eq!(y_of_sigma(&x, &v, 0.0, 0.3), v);
        assert!((y_of_sigma(&x, &x, 5.0, 0.3) - &x).norm() < 1e-15);
        assert!((y_of_sigma(&x, &v, 2.0, 1.0) - p(&[0.5, 0.5])).norm() < 1e-15);
    }

    #[test]
    fn bracket_examples() {
        let mut cfg = AtrEgConfig::new(0.5, 2.0);
        assert!((sigma_minus(&cfg) - 0.4f64.sqrt()).abs() < 1e-15);
        cfg.g0_policy = G0Policy::UserSupplied(8.0);
        let (lo, hi) = bracket_init(&cfg, 1.0, 0.0).unwrap();
        assert!((lo - 0.4f64.sqrt()).abs() < 1e-15);
        assert!((hi - 32f64.sqrt()).abs() < 1e-14);
        cfg.g0_policy = G0Policy::UserSupplied(0.01);
        assert!(matches!(bracket_init(&cfg, 1.0, 0.0), Err(Error::BracketError { .. })));
        cfg.epsilon = 1e-300;
        assert!(sigma_minus(&cfg) < 1e-149);
    }

    #[test]
    fn bound_from_distance() {
        let c = 4.0 / (1.5f64).sqrt() + 1.0;
        assert!((g0_from_d0(2.0, 1.0, 4.0, 0.5) - (2.0 * c + 2.0 * c * c)).abs() < 1e-12);
        let mut cfg = AtrEgConfig::new(1e-6, 1.0);
        cfg.g0_policy = G0Policy::FromD0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn classification_cases() {
        let cfg = AtrEgConfig::new(1e-6, 2.0);
        let sigma = 3.0;
        let window = cfg.eta / cfg.m * sigma;
        let d_small = DVector::from_element(1, 0.4 * window);
        assert_eq!(classify_sigma(0.0, &d_small, sigma, &cfg), SigmaClass::StepTooSmall);
        let d_bound = DVector::from_element(1, sigma / cfg.m);
        assert_eq!(classify_sigma(1.5 * (cfg.theta - 1.0) * sigma, &d_bound, sigma, &cfg), SigmaClass::LambdaTooLarge);
        assert_eq!(classify_sigma(0.5 * (cfg.theta - 1.0) * sigma, &d_bound, sigma, &cfg), SigmaClass::Accept);
    }

    #[test]
    fn psi_closed_forms() {
        let q = QuadraticProblem::new(DMatrix::zeros(2, 2), p(&[3.0, 4.0])).unwrap();
        let y = p(&[0.1, 0.2]);
        assert!((psi(&q, 2.0, &y).unwrap() - 5.0 / 4.0).abs() < 1e-14);
        let q = QuadraticProblem::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        assert_eq!(psi(&q, 1.0, &DVector::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn first_accepted_weight() {
        let q = synthetic::spd_quadratic(6, 50.0, 2).unwrap();
        let cfg = AtrEgConfig::new(1e-8, 1.0);
        let x0 = DVector::from_element(6, 3.0);
        let g0 = q.gradient(&x0).unwrap().norm();
        let (_, hi) = bracket_init(&cfg, g0, 0.0).unwrap();
        let mut br = Bracket { sigma_plus: hi, g0: cfg.eta * hi * hi / cfg.m };
        let (out, info) = step_variant2(&ExtraState::new(x0), &q, &cfg, &mut br).unwrap();
        let StepOutcome::Continue(next) = out else { panic!("terminated on the first step") };
        assert!((next.big_a - 1.0 / info.rnb.sigma).abs() <= 1e-12 * next.big_a);
        assert!(info.violations.is_empty(), "{:?}", info.violations);
    }

    #[test]
    fn stationary_start_stops_at_once() {
        let q = synthetic::spd_quadratic(5, 10.0, 4).unwrap();
        let r = run_variant2(&q, &AtrEgConfig::new(1e-8, 1.0), q.known_min().unwrap());
        assert!(r.termination.is_converged());
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn first_probe_certifies_near_stationary_point() {
        let q = synthetic::spd_quadratic(4, 10.0, 8).unwrap();
        let x = q.known_min().unwrap() + DVector::from_element(4, 1e-12);
        let cfg = AtrEgConfig::new(1e-8, 1.0);
        let mut br = Bracket { sigma_plus: 10.0, g0: 50.0 };
        let out = rnb_search(&q, &x, &x, 0.0, &cfg, &mut br).unwrap();
        assert!(out.early_terminate);
        assert_eq!(out.oracle_calls, 1);
        assert!(q.gradient(&out.x_next).unwrap().norm() <= cfg.epsilon);
    }

    #[test]
    fn converges_on_spd_quadratic() {
        let q = synthetic::spd_quadratic(10, 1e3, 5).unwrap();
        let r = run_variant2(&q, &AtrEgConfig::new(1e-8, 1.0), &DVector::zeros(10));
        assert!(r.termination.is_converged(), "{:?}", r.termination);
        assert!(r.final_grad_norm <= 1e-8);
        assert!(r.violations.is_empty(), "{:?}", r.violations);
        let a: Vec<f64> = r.diagnostics.rnb.iter().filter(|x| !x.early_terminate).map(|x| x.big_a).collect();
        assert!(a.windows(2).all(|w| w[1] > w[0]));
    }
}
