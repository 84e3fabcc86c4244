//! Benchmark harness for the accelerated trust-region solvers: run
//! configuration, the method-by-problem suite, trace files, summaries, the
//! property checks and the `atr` command line.

pub mod check;
pub mod cli;
pub mod config;
pub mod problem;
pub mod suite;
pub mod summary;
pub mod trace;
