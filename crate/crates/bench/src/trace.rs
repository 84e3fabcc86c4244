//! Comma-separated trace files, one row per outer iteration.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use atr_core::report::{Report, TraceRow};

pub const HEADER: [&str; 13] = [
    "method",
    "outer_k",
    "inner_calls",
    "f",
    "grad_norm",
    "sigma",
    "lambda",
    "mu",
    "step_norm",
    "n_hessian",
    "n_factorizations",
    "phase",
    "wall_ns",
];

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("trace row {row}: bad `{column}` value {value:?}")]
    Field { row: usize, column: &'static str, value: String },
    #[error("unexpected trace header {0:?}")]
    Header(Vec<String>),
}

/// Shortest representation that parses back to the same bits.
fn float(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_rows<W: Write>(rows: &[TraceRow], out: W) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.outer_k.to_string(),
            r.inner_calls.to_string(),
            float(r.f),
            float(r.grad_norm),
            float(r.sigma),
            float(r.lambda),
            float(r.mu),
            float(r.step_norm),
            r.n_hessian.to_string(),
            r.n_factorizations.to_string(),
            r.phase.to_string(),
            r.wall_ns.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(report: &Report, path: &Path) -> Result<(), TraceError> {
    let file = BufWriter::new(File::create(path)?);
    write_rows(&report.trace, file)
}

pub fn parse_rows<R: Read>(input: R) -> Result<Vec<TraceRow>, TraceError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(TraceError::Header(header));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        fn num<T: std::str::FromStr>(row: usize, column: &'static str, s: &str) -> Result<T, TraceError> {
            s.parse().map_err(|_| TraceError::Field { row, column, value: s.to_string() })
        }
        let row = i + 1;
        rows.push(TraceRow {
            method: field(0).to_string(),
            outer_k: num(row, HEADER[1], field(1))?,
            inner_calls: num(row, HEADER[2], field(2))?,
            f: num(row, HEADER[3], field(3))?,
            grad_norm: num(row, HEADER[4], field(4))?,
            sigma: num(row, HEADER[5], field(5))?,
            lambda: num(row, HEADER[6], field(6))?,
            mu: num(row, HEADER[7], field(7))?,
            step_norm: num(row, HEADER[8], field(8))?,
            n_hessian: num(row, HEADER[9], field(9))?,
            n_factorizations: num(row, HEADER[10], field(10))?,
            phase: num(row, HEADER[11], field(11))?,
            wall_ns: num(row, HEADER[12], field(12))?,
        });
    }
    Ok(rows)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, TraceError> {
    parse_rows(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use atr_core::report::Phase;

    fn row(k: usize) -> TraceRow {
        TraceRow {
            method: "ATR-I".into(),
            outer_k: k,
            inner_calls: 2,
            f: 0.1 + k as f64,
            grad_norm: 1e-300,
            sigma: f64::MIN_POSITIVE,
            lambda: 0.0,
            mu: -0.0,
            step_norm: 1.0 / 3.0,
            n_hessian: 7,
            n_factorizations: 11,
            phase: Phase::Bisection,
            wall_ns: 0,
        }
    }

    #[test]
    fn header_only_for_empty_trace() {
        let mut buf = Vec::new();
        write_rows(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", HEADER.join(",")));
    }

    #[test]
    fn floats_survive_round_trip() {
        let rows = vec![row(0), row(1)];
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        let back = parse_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        assert_eq!(back[0].mu.to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(matches!(parse_rows("a,b\n1,2\n".as_bytes()), Err(TraceError::Header(_))));
    }
}
