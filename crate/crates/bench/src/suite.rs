//! Runs every configured method on one problem and persists the traces.

use std::path::{Path, PathBuf};

use atr_core::atr_extra::{run_variant2, AtrEgConfig};
use atr_core::atr_local::{run_variant1, AtrLdConfig};
use atr_core::baselines::{run_baseline, BaselineConfig};
use atr_core::objective::Objective;
use atr_core::report::Report;
use rayon::prelude::*;

use crate::config::{ConfigError, Method, RunConfig};
use crate::problem::Prepared;
use crate::trace::write_trace;

#[derive(Debug)]
pub struct Cell {
    pub method: Method,
    pub report: Report,
    pub trace_path: Option<PathBuf>,
    /// Set when the trace could not be written.
    pub trace_error: Option<String>,
}

#[derive(Debug)]
pub struct SuiteOutput {
    pub problem_tag: String,
    pub m: f64,
    pub cells: Vec<Cell>,
}

/// Runs `method` on `problem` from `x0` with the settings in `cfg`.
pub fn run_method(method: Method, problem: &dyn Objective, cfg: &RunConfig, m: f64, x0: &nalgebra::DVector<f64>) -> Report {
    match method {
        Method::AtrLocal => {
            let mut c = AtrLdConfig::new(cfg.epsilon, m);
            c.max_outer = cfg.max_outer;
            c.telemetry = cfg.telemetry;
            run_variant1(problem, &c, x0)
        }
        Method::AtrExtra => {
            let mut c = AtrEgConfig::new(cfg.epsilon, m);
            c.max_outer = cfg.max_outer;
            c.telemetry = cfg.telemetry;
            c.theta = cfg.theta;
            c.eta = cfg.eta;
            c.gamma = cfg.gamma;
            c.g0_policy = cfg.g0_policy;
            c.d0 = cfg.d0;
            run_variant2(problem, &c, x0)
        }
        Method::Baseline(b) => {
            let mut c = BaselineConfig::new(b, cfg.epsilon, m);
            c.max_outer = cfg.max_outer;
            c.telemetry = cfg.telemetry;
            run_baseline(problem, &c, x0)
        }
    }
}

pub fn trace_file_name(tag: &str, method: Method) -> String {
    format!("{tag}_{}.csv", method.name())
}

/// Runs all methods of `cfg` from `x0 = 0`, at most `cfg.jobs` at a time.
/// Failures inside a run end up in that run's report.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteOutput, ConfigError> {
    let prepared = Prepared::from_config(cfg)?;
    let m = prepared.resolve_m(cfg.m_policy)?;
    let tag = cfg.problem.tag(cfg.seed);
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| ConfigError::new("out_dir", format!("cannot create {}: {e}", dir.display())))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| ConfigError::new("jobs", e.to_string()))?;
    let x0 = prepared.start();
    let cells = pool.install(|| {
        cfg.methods
            .par_iter()
            .map(|&method| {
                let problem = prepared.instance();
                let report = run_method(method, problem.as_ref(), cfg, m, &x0);
                let (trace_path, trace_error) = match &cfg.out_dir {
                    None => (None, None),
                    Some(dir) => persist(&report, dir, &tag, method),
                };
                Cell { method, report, trace_path, trace_error }
            })
            .collect()
    });
    Ok(SuiteOutput { problem_tag: tag, m, cells })
}

fn persist(report: &Report, dir: &Path, tag: &str, method: Method) -> (Option<PathBuf>, Option<String>) {
    let path = dir.join(trace_file_name(tag, method));
    match write_trace(report, &path) {
        Ok(()) => (Some(path), None),
        Err(e) => (None, Some(format!("{}: {e}", path.display()))),
    }
}
