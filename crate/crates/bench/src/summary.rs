//! Per-method cost tables.

use std::fmt::Write as _;

use atr_core::report::{Report, TraceRow};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub n_hessian: u64,
    pub n_factorizations: u64,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub final_f: f64,
    /// Empty when built from a trace file.
    pub termination: String,
}

impl SummaryRow {
    pub fn from_report(r: &Report) -> Self {
        SummaryRow {
            method: r.method.clone(),
            n_hessian: r.counters.n_hessian,
            n_factorizations: r.counters.n_factorizations,
            iterations: r.iterations,
            final_grad_norm: r.final_grad_norm,
            final_f: r.final_value,
            termination: r.termination.to_string(),
        }
    }

    /// Totals come from the cumulative counters of the last row.
    pub fn from_trace(rows: &[TraceRow]) -> Option<Self> {
        let last = rows.last()?;
        Some(SummaryRow {
            method: last.method.clone(),
            n_hessian: last.n_hessian,
            n_factorizations: last.n_factorizations,
            iterations: last.outer_k,
            final_grad_norm: last.grad_norm,
            final_f: last.f,
            termination: String::new(),
        })
    }
}

const COLUMNS: [&str; 7] = ["method", "n_hessian", "n_factorizations", "iterations", "final_grad_norm", "final_f", "termination"];

fn cells(r: &SummaryRow) -> [String; 7] {
    [
        r.method.clone(),
        r.n_hessian.to_string(),
        r.n_factorizations.to_string(),
        r.iterations.to_string(),
        format!("{:.3e}", r.final_grad_norm),
        format!("{:.10e}", r.final_f),
        r.termination.clone(),
    ]
}

/// Sorts by Hessian evaluations, ascending; ties keep their input order.
pub fn sorted(mut rows: Vec<SummaryRow>) -> Vec<SummaryRow> {
    rows.sort_by_key(|r| r.n_hessian);
    rows
}

pub fn table(rows: &[SummaryRow]) -> String {
    let body: Vec<[String; 7]> = rows.iter().map(cells).collect();
    let mut width: Vec<usize> = COLUMNS.iter().map(|c| c.len()).collect();
    for row in &body {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cols: &[String]| {
        let parts: Vec<String> = cols
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 || i == 6 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &COLUMNS.map(String::from));
    for row in &body {
        line(&mut out, row);
    }
    out
}

pub fn csv(rows: &[SummaryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.n_hessian.to_string(),
            r.n_factorizations.to_string(),
            r.iterations.to_string(),
            format!("{:e}", r.final_grad_norm),
            format!("{:e}", r.final_f),
            r.termination.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn summarize(reports: &[Report]) -> Vec<SummaryRow> {
    sorted(reports.iter().map(SummaryRow::from_report).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, n_hessian: u64) -> SummaryRow {
        SummaryRow {
            method: method.into(),
            n_hessian,
            n_factorizations: 2 * n_hessian,
            iterations: 3,
            final_grad_norm: 1e-7,
            final_f: 0.25,
            termination: "GradTol".into(),
        }
    }

    #[test]
    fn single_row_table() {
        let t = table(&[row("UTR2", 5)]);
        assert_eq!(t.lines().count(), 2);
        assert!(t.lines().nth(1).unwrap().starts_with("UTR2"));
    }

    #[test]
    fn sorted_by_hessians() {
        let rows = sorted(vec![row("a", 9), row("b", 1), row("c", 4), row("d", 1)]);
        let names: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(names, ["b", "d", "c", "a"]);
    }

    #[test]
    fn table_columns_align() {
        let t = table(&[row("ATR-II", 120), row("Newton", 3)]);
        let end = t.lines().next().unwrap().find("n_hessian").unwrap() + "n_hessian".len();
        for line in t.lines() {
            assert!(line.as_bytes()[end - 1] != b' ');
            assert_eq!(line.as_bytes()[end], b' ');
        }
    }

    #[test]
    fn csv_has_fixed_header() {
        let c = csv(&[row("Cubic", 1)]);
        assert_eq!(c.lines().next().unwrap(), COLUMNS.join(","));
        assert_eq!(c.lines().count(), 2);
    }
}
