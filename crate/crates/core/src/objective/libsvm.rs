//! LIBSVM sparse text format.
//!
//! ```text
//! +1 1:0.5 3:-2   # optional comment
//! -1
//! ```
//!
//! Feature indices are 1-based in the file and 0-based in memory.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Sparse row as `(index, value)` pairs sorted by index.
pub type SparseRow = Vec<(usize, f64)>;

/// Binary classification data with labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<SparseRow>,
    labels: Vec<f64>,
    n_features: usize,
}

impl Dataset {
    pub fn new(rows: Vec<SparseRow>, labels: Vec<f64>, n_features: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidConfig(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, (row, &b)) in rows.iter().zip(&labels).enumerate() {
            if b != 1.0 && b != -1.0 {
                return Err(Error::Label { line: i + 1, label: b });
            }
            let sorted = row.windows(2).all(|w| w[0].0 < w[1].0);
            let in_range = row.iter().all(|&(j, v)| j < n_features && v.is_finite());
            if !sorted || !in_range {
                return Err(Error::InvalidConfig(format!(
                    "row {i} has unsorted, duplicate, non-finite or out-of-range entries"
                )));
            }
        }
        Ok(Dataset { rows, labels, n_features })
    }

    /// Dense rows convenience constructor.
    pub fn from_dense(rows: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        let sparse = rows
            .iter()
            .map(|r| r.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect())
            .collect();
        Dataset::new(sparse, labels, n)
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Copy with every feature value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Dataset {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| (j, v * c)).collect())
            .collect();
        Dataset { rows, labels: self.labels.clone(), n_features: self.n_features }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    /// Map the two distinct labels to -1 (smaller) and +1 (larger).
    #[default]
    Normalize,
    /// Reject any label outside `{-1, +1}`.
    Strict,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LibsvmOptions {
    pub label_mode: LabelMode,
    /// Overrides the feature count inferred from the largest index.
    pub n_features: Option<usize>,
}

pub fn load_libsvm(path: impl AsRef<Path>, options: LibsvmOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_libsvm(&text, options)
}

pub fn parse_libsvm(text: &str, options: LibsvmOptions) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    let mut line_numbers = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let content = match line.find('#') {
            Some(p) => &line[..p],
            None => line,
        };
        let mut tokens = tokens_with_columns(content);
        let Some((col, label_tok)) = tokens.next() else {
            continue;
        };
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(lineno, col, format!("invalid label {label_tok:?}")))?;

        let mut row: SparseRow = Vec::new();
        for (col, tok) in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, col, format!("expected <index>:<value>, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| parse_err(lineno, col, format!("invalid feature index {idx:?}")))?;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(lineno, col, format!("invalid feature value {val:?}")))?;
            row.push((idx - 1, val));
            max_index = max_index.max(idx);
        }
        row.sort_by_key(|&(j, _)| j);
        if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(parse_err(lineno, 1, format!("duplicate feature index {}", w[0].0 + 1)));
        }
        rows.push(row);
        raw_labels.push(label);
        line_numbers.push(lineno);
    }

    let n_features = match options.n_features {
        Some(n) if n < max_index => {
            return Err(Error::InvalidConfig(format!(
                "n_features override {n} is smaller than the largest index {max_index}"
            )))
        }
        Some(n) => n,
        None => max_index,
    };
    let labels = map_labels(&raw_labels, &line_numbers, options.label_mode)?;
    Dataset::new(rows, labels, n_features)
}

fn map_labels(raw: &[f64], lines: &[usize], mode: LabelMode) -> Result<Vec<f64>> {
    let is_pm1 = |b: f64| b == 1.0 || b == -1.0;
    if let Some(i) = raw.iter().position(|&b| !is_pm1(b)) {
        if mode == LabelMode::Strict {
            return Err(Error::Label { line: lines[i], label: raw[i] });
        }
    } else {
        return Ok(raw.to_vec());
    }

    let mut distinct: Vec<f64> = Vec::new();
    for (i, &b) in raw.iter().enumerate() {
        if !distinct.contains(&b) {
            if distinct.len() == 2 {
                return Err(Error::Label { line: lines[i], label: b });
            }
            distinct.push(b);
        }
    }
    if distinct.len() < 2 {
        // a single label outside {-1, +1} has no defined mapping
        return Err(Error::Label { line: lines[0], label: raw[0] });
    }
    let low = distinct[0].min(distinct[1]);
    Ok(raw.iter().map(|&b| if b == low { -1.0 } else { 1.0 }).collect())
}

/// Serializes a dataset so that [`parse_libsvm`] reproduces it exactly.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    for (row, &b) in data.rows().iter().zip(data.labels()) {
        out.write_all(if b > 0.0 { b"+1" } else { b"-1" })?;
        for &(j, v) in row {
            write!(out, " {}:{}", j + 1, v)?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn parse_err(line: usize, column: usize, message: String) -> Error {
    Error::Parse { line, column, message }
}

/// Whitespace-separated tokens with their 1-based starting column.
fn tokens_with_columns(s: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = s;
    let mut offset = 0usize;
    std::iter::from_fn(move || {
        let trimmed = rest.trim_start();
        offset += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return None;
        }
        let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let tok = &trimmed[..end];
        let col = offset + 1;
        offset += end;
        rest = &trimmed[end..];
        Some((col, tok))
    })
}
