//! Property checks over the built-in problems, run by `atr check`.

use std::sync::Arc;

use atr_core::atr_extra::{run_variant2, AtrEgConfig};
use atr_core::atr_local::{run_variant1, AtrLdConfig};
use atr_core::objective::{synthetic, LogisticProblem, Objective, Point, PseudoHuber};
use atr_core::report::{Report, Termination};
use atr_core::trs::{eigen_reference_solve, solve_trs, verify_kkt, TrsRequest};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trace::{parse_rows, write_rows};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, failures: Vec<String>, summary: String) -> Self {
        let pass = failures.is_empty();
        let detail = if pass {
            summary
        } else {
            let shown: Vec<&str> = failures.iter().take(3).map(String::as_str).collect();
            format!("{} failure(s); {}", failures.len(), shown.join("; "))
        };
        CheckResult { name, pass, detail }
    }
}

fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Point {
    DVector::from_fn(n, |_, _| scale * rng.random_range(-1.0..1.0))
}

/// Central differences of the value against the gradient, and of the
/// gradient against the Hessian.
pub fn finite_difference_errors(p: &dyn Objective, x: &Point) -> (f64, f64) {
    let n = p.dim();
    let g = p.gradient(x).expect("gradient");
    let h = p.hessian(x).expect("hessian");
    let mut g_fd = DVector::zeros(n);
    let mut h_fd = DMatrix::zeros(n, n);
    for i in 0..n {
        let step = 1e-5 * x[i].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += step;
        xm[i] -= step;
        g_fd[i] = (p.value(&xp).unwrap() - p.value(&xm).unwrap()) / (2.0 * step);
        let col = (p.gradient(&xp).unwrap() - p.gradient(&xm).unwrap()) / (2.0 * step);
        h_fd.set_column(i, &col);
    }
    let h_err = (&h - &h_fd).norm() / h.norm().max(1.0);
    (rel_err(&g, &g_fd), h_err)
}

pub fn shipped_problems(seed: u64) -> Vec<(&'static str, Box<dyn Objective>)> {
    let logistic = |d| Box::new(LogisticProblem::new(Arc::new(d), 1e-4).expect("valid dataset")) as Box<dyn Objective>;
    vec![
        ("gaussian-logistic", logistic(synthetic::gaussian_logistic(80, 6, seed))),
        ("census-logistic", logistic(synthetic::census_like(150, seed))),
        ("quadratic", Box::new(synthetic::spd_quadratic(8, 1e3, seed).expect("valid spectrum"))),
        ("pseudo-huber", Box::new(PseudoHuber::new(5))),
    ]
}

fn check_derivatives(seed: u64, points: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    for (name, p) in shipped_problems(seed) {
        for _ in 0..points {
            let x = random_point(&mut rng, p.dim(), 2.0);
            let (ge, he) = finite_difference_errors(p.as_ref(), &x);
            worst = (worst.0.max(ge), worst.1.max(he));
            if ge > 1e-6 || he > 1e-5 {
                failures.push(format!("{name}: gradient {ge:e}, Hessian {he:e}"));
            }
        }
    }
    CheckResult::new("derivatives", failures, format!("worst gradient {:.1e}, Hessian {:.1e}", worst.0, worst.1))
}

/// Random convex instance with `cond(H + σI) <= 1e8`.
fn trs_instance(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DVector<f64>, f64, f64) {
    let n = rng.random_range(2..=30);
    let cond = 10f64.powf(rng.random_range(0.0..8.0));
    let low = 10f64.powf(rng.random_range(-1.0..3.0)) / cond;
    let sigma = if rng.random_bool(0.3) { 0.0 } else { low * rng.random::<f64>() };
    let eigs: Vec<f64> =
        (0..n).map(|i| (low * cond.powf(i as f64 / (n - 1) as f64) - sigma).max(0.0)).collect();
    let h = synthetic::with_spectrum(&eigs, rng.random());
    let h = (&h + h.transpose()) * 0.5;
    let scale = 10f64.powf(rng.random_range(-3.0..2.0));
    let g = random_point(rng, n, scale);
    let radius = g.norm() / low * 10f64.powf(rng.random_range(-3.0..0.5));
    (h, g, sigma, radius)
}

fn check_trs(seed: u64, cases: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..cases {
        let (h, g, sigma, radius) = trs_instance(&mut rng);
        let req = TrsRequest::new(&h, &g, sigma, radius);
        let (sol, reference) = match (solve_trs(&req), eigen_reference_solve(&req)) {
            (Ok(a), Ok(b)) => (a, b),
            (a, b) => {
                failures.push(format!("case {i}: {:?} / {:?}", a.err(), b.err()));
                continue;
            }
        };
        let kkt = verify_kkt(&req, &sol).max();
        worst = worst.max(kkt);
        if kkt > 1e-8 {
            failures.push(format!("case {i}: KKT residual {kkt:e}"));
        }
        if (sol.lambda - reference.lambda).abs() > 1e-6 * (1.0 + sol.lambda) {
            failures.push(format!("case {i}: lambda {:e} vs reference {:e}", sol.lambda, reference.lambda));
        }
    }
    CheckResult::new("trs-kkt", failures, format!("{cases} instances, worst KKT residual {worst:.1e}"))
}

/// Ratio window of accepted steps, read back from the trace.
pub fn ratio_failures(report: &Report, m: f64) -> Vec<String> {
    let mut rows = &report.trace[..];
    if report.termination == Termination::EarlyTerminate {
        rows = &rows[..rows.len().saturating_sub(1)];
    }
    rows.iter()
        .skip(1)
        .filter(|r| {
            let lo = m * r.step_norm;
            r.mu < lo * (1.0 - 1e-8) || r.mu > 2.0 * lo * (1.0 + 1e-8)
        })
        .map(|r| format!("k={}: mu/||d|| = {:e} ({})", r.outer_k, r.mu / r.step_norm, r.phase))
        .collect()
}

pub fn bisection_budget_failures(report: &Report, eps: f64) -> Vec<String> {
    report
        .diagnostics
        .local_detections
        .iter()
        .filter(|ld| ld.bisection_calls as f64 > 2.0 * ((ld.kappa_h + ld.mu_plus) / eps).log2() + 10.0)
        .map(|ld| format!("k={}: {} bisection calls", ld.outer_k, ld.bisection_calls))
        .collect()
}

pub fn sandwich_failures(report: &Report) -> Vec<String> {
    report
        .diagnostics
        .estimates
        .iter()
        .filter(|s| s.big_a * s.f_x > s.phi_star + 1e-7 * (1.0 + s.phi_star.abs()))
        .map(|s| format!("k={}: A f = {:e} > phi* = {:e}", s.k, s.big_a * s.f_x, s.phi_star))
        .collect()
}

pub fn window_failures(report: &Report, cfg: &AtrEgConfig) -> Vec<String> {
    let mut out = Vec::new();
    for r in report.diagnostics.rnb.iter() {
        if r.oracle_calls > 64 {
            out.push(format!("k={}: {} oracle calls", r.outer_k, r.oracle_calls));
        }
        if r.early_terminate {
            continue;
        }
        let tol = 1e-8;
        if r.lambda < -tol * r.sigma || r.lambda > (cfg.theta - 1.0) * r.sigma * (1.0 + tol) {
            out.push(format!("k={}: lambda {:e} outside [0, (theta-1) sigma]", r.outer_k, r.lambda));
        }
        if r.step_norm < cfg.eta / cfg.m * r.sigma * (1.0 - tol) {
            out.push(format!("k={}: ||d|| {:e} below eta sigma / M", r.outer_k, r.step_norm));
        }
    }
    out
}

/// The report's Hessian count against the problem's own counter and the
/// trace's last cumulative value.
pub fn counter_failures(report: &Report, problem: &dyn Objective, before: u64) -> Vec<String> {
    let delta = problem.counters().snapshot().n_hessian - before;
    let mut out = Vec::new();
    if report.counters.n_hessian != delta {
        out.push(format!("{}: report {} vs counter delta {delta}", report.method, report.counters.n_hessian));
    }
    if let Some(last) = report.trace.last() {
        if last.n_hessian != report.counters.n_hessian {
            out.push(format!("{}: trace {} vs report {}", report.method, last.n_hessian, report.counters.n_hessian));
        }
    }
    if report.trace.windows(2).any(|w| w[1].n_hessian < w[0].n_hessian) {
        out.push(format!("{}: trace counter decreases", report.method));
    }
    out
}

struct Runs {
    v1: Vec<(Report, f64, f64)>,
    v2: Vec<(Report, AtrEgConfig)>,
    counters: Vec<String>,
}

fn solver_runs(seed: u64) -> Runs {
    let eps = 1e-8;
    let mut runs = Runs { v1: Vec::new(), v2: Vec::new(), counters: Vec::new() };
    let logistic = LogisticProblem::new(Arc::new(synthetic::gaussian_logistic(200, 10, seed)), 1e-4).expect("valid");
    let m_log = logistic.lipschitz_estimate().expect("estimate");
    let quad = synthetic::spd_quadratic(10, 1e3, seed).expect("valid");
    let problems: [(&dyn Objective, f64); 2] = [(&logistic, m_log), (&quad, 1.0)];
    for (p, m) in problems {
        let x0 = DVector::zeros(p.dim());
        let before = p.counters().snapshot().n_hessian;
        let r1 = run_variant1(p, &AtrLdConfig::new(eps, m), &x0);
        runs.counters.extend(counter_failures(&r1, p, before));
        runs.v1.push((r1, m, eps));
        let cfg = AtrEgConfig::new(eps, m);
        let before = p.counters().snapshot().n_hessian;
        let r2 = run_variant2(p, &cfg, &x0);
        runs.counters.extend(counter_failures(&r2, p, before));
        runs.v2.push((r2, cfg));
    }
    runs
}

fn check_determinism_and_round_trip(seed: u64) -> (CheckResult, CheckResult) {
    let trace = || {
        let p = synthetic::spd_quadratic(6, 50.0, seed).expect("valid");
        run_variant1(&p, &AtrLdConfig::new(1e-8, 1.0), &DVector::zeros(6)).trace
    };
    let (a, b) = (trace(), trace());
    let mut bytes = (Vec::new(), Vec::new());
    write_rows(&a, &mut bytes.0).expect("in-memory write");
    write_rows(&b, &mut bytes.1).expect("in-memory write");
    let det = if bytes.0 == bytes.1 { vec![] } else { vec!["traces differ between identical runs".to_string()] };
    let rt = match parse_rows(bytes.0.as_slice()) {
        Ok(back) if back == a => vec![],
        Ok(_) => vec!["parsed trace differs".to_string()],
        Err(e) => vec![e.to_string()],
    };
    (
        CheckResult::new("determinism", det, format!("{} rows, identical bytes", a.len())),
        CheckResult::new("trace-round-trip", rt, "parse(write(t)) == t".into()),
    )
}

/// Runs every check. `quick` shrinks the random sample sizes.
pub fn run_checks(seed: u64, quick: bool) -> Vec<CheckResult> {
    let mut out = vec![
        check_derivatives(seed, if quick { 5 } else { 25 }),
        check_trs(seed, if quick { 50 } else { 300 }),
    ];
    let runs = solver_runs(seed);
    let collect = |f: &dyn Fn(&Report, f64, f64) -> Vec<String>| -> Vec<String> {
        runs.v1.iter().flat_map(|(r, m, eps)| f(r, *m, *eps)).collect()
    };
    let steps: usize = runs.v1.iter().map(|(r, ..)| r.iterations).sum();
    out.push(CheckResult::new("v1-ratio", collect(&|r, m, _| ratio_failures(r, m)), format!("{steps} steps")));
    let lds: usize = runs.v1.iter().map(|(r, ..)| r.diagnostics.local_detections.len()).sum();
    out.push(CheckResult::new(
        "v1-bisection-budget",
        collect(&|r, _, eps| bisection_budget_failures(r, eps)),
        format!("{lds} local detections"),
    ));
    out.push(CheckResult::new("v1-sandwich", collect(&|r, _, _| sandwich_failures(r)), format!("{steps} steps")));
    let v2: Vec<String> = runs.v2.iter().flat_map(|(r, c)| window_failures(r, c)).collect();
    let calls: usize = runs.v2.iter().map(|(r, _)| r.diagnostics.rnb.len()).sum();
    out.push(CheckResult::new("v2-window", v2, format!("{calls} searches")));
    let converged: Vec<String> = runs
        .v1
        .iter()
        .map(|(r, ..)| r)
        .chain(runs.v2.iter().map(|(r, _)| r))
        .filter(|r| !r.termination.is_converged())
        .map(|r| format!("{} ended with {}", r.method, r.termination))
        .collect();
    out.push(CheckResult::new("convergence", converged, "all runs reached the tolerance".into()));
    out.push(CheckResult::new("counters", runs.counters, "reports match problem counters".into()));
    let (det, rt) = check_determinism_and_round_trip(seed);
    out.push(det);
    out.push(rt);
    out
}
