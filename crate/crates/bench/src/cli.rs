//! The `atr` command line.
//!
//! Exit codes: 0 on success, 1 when an invariant check fails (or, with
//! `--strict`, when a run does not converge), 2 on bad flags or config.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use atr_core::trs::{solve_trs, verify_kkt, TrsRequest};
use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use crate::check::run_checks;
use crate::config::parse_config;
use crate::suite::run_suite;
use crate::summary::{self, SummaryRow};
use crate::trace::read_trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "atr", about = "Accelerated trust-region solvers and benchmark suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every configured method on one problem.
    Run(RunArgs),
    /// Property checks over the built-in problems.
    Check {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Smaller random samples.
        #[arg(long)]
        quick: bool,
    },
    /// Solve one trust-region subproblem. The file holds the rows of H,
    /// then g on the last line.
    Trs {
        matrix: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long)]
        radius: f64,
    },
    /// Tables from trace files.
    Summarize {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Print comma-separated output instead of the aligned table.
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated method names.
    #[arg(long)]
    methods: Option<String>,
    /// LIBSVM data file.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also fail when a run stops without converging.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    jobs: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> BTreeMap<String, String> {
        let mut kv = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.insert(k.to_string(), v);
            }
        };
        put("epsilon", self.epsilon.map(|e| e.to_string()));
        put("methods", self.methods.clone());
        put("data", self.data.as_ref().map(|p| p.display().to_string()));
        put("out_dir", self.out.as_ref().map(|p| p.display().to_string()));
        put("seed", self.seed.map(|s| s.to_string()));
        put("jobs", self.jobs.map(|j| j.to_string()));
        if self.strict {
            put("strict", Some("true".into()));
        }
        kv
    }
}

pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match cli.command {
        Command::Run(args) => cmd_run(&args, out, err),
        Command::Check { seed, quick } => cmd_check(seed, quick, out),
        Command::Trs { matrix, sigma, radius } => cmd_trs(&matrix, sigma, radius, out, err),
        Command::Summarize { traces, csv } => cmd_summarize(&traces, csv, out, err),
    }
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let parsed = match parse_config(args.config.as_deref(), &args.overrides()) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    for w in &parsed.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let cfg = parsed.config;
    let suite = match run_suite(&cfg) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut code = EXIT_OK;
    for cell in &suite.cells {
        let r = &cell.report;
        for v in &r.violations {
            let _ = writeln!(err, "violation [{}]: {v}", r.method);
            code = EXIT_VIOLATION;
        }
        if let Some(e) = &cell.trace_error {
            let _ = writeln!(err, "error: cannot write trace {e}");
            code = EXIT_VIOLATION;
        }
        if !r.termination.is_converged() {
            let _ = writeln!(err, "note: {} stopped with {}", r.method, r.termination);
            if cfg.strict {
                code = EXIT_VIOLATION;
            }
        }
    }
    let reports: Vec<_> = suite.cells.iter().map(|c| c.report.clone()).collect();
    let rows = summary::summarize(&reports);
    let _ = writeln!(out, "problem {} (M = {:e})", suite.problem_tag, suite.m);
    let _ = write!(out, "{}", summary::table(&rows));
    if let Some(dir) = &cfg.out_dir {
        let path = dir.join(format!("{}_summary.csv", suite.problem_tag));
        if let Err(e) = std::fs::write(&path, summary::csv(&rows)) {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            code = EXIT_VIOLATION;
        }
    }
    code
}

fn cmd_check(seed: u64, quick: bool, out: &mut dyn Write) -> i32 {
    let results = run_checks(seed, quick);
    for r in &results {
        let _ = writeln!(out, "{} {:<20} {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if results.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

/// Whitespace-separated numbers; blank lines and `#` comments are skipped.
pub fn parse_matrix_file(text: &str) -> Result<(DMatrix<f64>, DVector<f64>), String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| format!("line {}: cannot parse {s:?}", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let Some(g) = rows.pop() else {
        return Err("empty matrix file".into());
    };
    let n = g.len();
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!("expected {n} rows of {n} entries before the gradient line"));
    }
    let h = DMatrix::from_row_iterator(n, n, rows.into_iter().flatten());
    Ok((h, DVector::from_vec(g)))
}

fn cmd_trs(path: &Path, sigma: f64, radius: f64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let parsed = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))
        .and_then(|t| parse_matrix_file(&t));
    let (h, g) = match parsed {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let req = TrsRequest::new(&h, &g, sigma, radius);
    match solve_trs(&req) {
        Ok(sol) => {
            let d: Vec<String> = sol.d.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "d = [{}]", d.join(", "));
            let _ = writeln!(out, "lambda = {:e}", sol.lambda);
            let _ = writeln!(out, "kkt_residual = {:e}", verify_kkt(&req, &sol).max());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_CONFIG
        }
    }
}

fn cmd_summarize(paths: &[PathBuf], csv: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut rows = Vec::new();
    for p in paths {
        match read_trace(p) {
            Ok(t) => match SummaryRow::from_trace(&t) {
                Some(r) => rows.push(r),
                None => {
                    let _ = writeln!(err, "error: {} has no rows", p.display());
                    return EXIT_CONFIG;
                }
            },
            Err(e) => {
                let _ = writeln!(err, "error: {}: {e}", p.display());
                return EXIT_CONFIG;
            }
        }
    }
    let rows = summary::sorted(rows);
    let _ = write!(out, "{}", if csv { summary::csv(&rows) } else { summary::table(&rows) });
    EXIT_OK
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_cli(std::iter::once("atr").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn bad_flag_prints_usage() {
        let (code, _, err) = run(&["run", "--bogus"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn help_is_not_an_error() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("summarize"));
    }

    #[test]
    fn missing_methods_is_a_config_error() {
        let (code, _, err) = run(&["run", "--epsilon", "1e-6"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("methods"));
    }

    #[test]
    fn matrix_file_format() {
        let (h, g) = parse_matrix_file("# H\n2 0\n0 4\n\n1, -1\n").unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]));
        assert_eq!(g, DVector::from_vec(vec![1.0, -1.0]));
        assert!(parse_matrix_file("1 2\n3\n").is_err());
        assert!(parse_matrix_file("").is_err());
        assert!(parse_matrix_file("1 x\n").is_err());
    }
}
