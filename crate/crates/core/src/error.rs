use std::path::PathBuf;

use thiserror::Error;

use crate::trs::TrsSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NumericalOverflow(&'static str),

    #[error("dataset has no rows")]
    EmptyData,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("line {line}: label {label} is not in {{-1, +1}}")]
    Label { line: usize, label: f64 },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("shifted Hessian is not positive semidefinite (min pivot {min_pivot:e})")]
    NotConvex { min_pivot: f64 },

    #[error("linear system is singular to working precision")]
    SingularSystem,

    #[error("{what} exceeded {limit} iterations")]
    MaxIterations {
        what: &'static str,
        limit: usize,
        best: Option<Box<TrsSolution>>,
    },

    #[error("bisection stalled after {calls} oracle calls: {detail}")]
    BisectionStall { calls: usize, detail: String },

    #[error("invalid bracket: sigma_minus {lower:e} >= sigma_plus {upper:e}")]
    BracketError { lower: f64, upper: f64 },

    #[error("iterates diverged")]
    Diverged,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Short stable tag used in reports and trace summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NumericalOverflow(_) => "NumericalOverflow",
            Error::EmptyData => "EmptyData",
            Error::Parse { .. } => "ParseError",
            Error::Label { .. } => "LabelError",
            Error::Io { .. } => "Io",
            Error::NotConvex { .. } => "NotConvex",
            Error::SingularSystem => "SingularSystem",
            Error::MaxIterations { .. } => "MaxIterations",
            Error::BisectionStall { .. } => "BisectionStall",
            Error::BracketError { .. } => "BracketError",
            Error::Diverged => "Diverged",
            Error::InvalidConfig(_) => "InvalidConfig",
        }
    }
}
