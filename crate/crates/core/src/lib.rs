//! Accelerated trust-region methods for convex problems with Lipschitz
//! continuous Hessians, together with the reference baselines they are
//! measured against.

pub mod error;
pub mod linalg;
pub mod objective;
pub mod report;
pub mod trs;
pub mod atr_local;
pub mod atr_extra;
pub mod baselines;

pub use error::{Error, Result};
