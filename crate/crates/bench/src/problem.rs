//! Turns a [`ProblemSpec`] into fresh problem instances.
//!
//! Every suite cell gets its own instance so its evaluation counters only
//! see that cell's run; logistic instances share one dataset.

use std::sync::Arc;

use atr_core::objective::{
    load_libsvm, synthetic, Dataset, LibsvmOptions, LogisticProblem, Objective, PseudoHuber, QuadraticProblem,
};
use nalgebra::DVector;

use crate::config::{ConfigError, MPolicy, ProblemSpec, RunConfig};

pub enum Prepared {
    Logistic { data: Arc<Dataset>, reg: f64 },
    Quadratic(QuadraticProblem),
    Huber(usize),
}

impl Prepared {
    pub fn from_config(cfg: &RunConfig) -> Result<Prepared, ConfigError> {
        let logistic = |data: Dataset| Prepared::Logistic { data: Arc::new(data), reg: cfg.reg };
        Ok(match &cfg.problem {
            ProblemSpec::Libsvm(path) => {
                let data = load_libsvm(path, LibsvmOptions::default()).map_err(|e| ConfigError::new("data", e.to_string()))?;
                logistic(data)
            }
            ProblemSpec::Gaussian { n_samples, n_features } => {
                logistic(synthetic::gaussian_logistic(*n_samples, *n_features, cfg.seed))
            }
            ProblemSpec::Census { n_samples } => logistic(synthetic::census_like(*n_samples, cfg.seed)),
            ProblemSpec::Quadratic { dim, cond } => Prepared::Quadratic(
                synthetic::spd_quadratic(*dim, *cond, cfg.seed).map_err(|e| ConfigError::new("cond", e.to_string()))?,
            ),
            ProblemSpec::Huber { dim } => Prepared::Huber(*dim),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Prepared::Logistic { data, .. } => data.n_features(),
            Prepared::Quadratic(q) => q.h().nrows(),
            Prepared::Huber(n) => *n,
        }
    }

    /// A new instance with zeroed counters.
    pub fn instance(&self) -> Box<dyn Objective> {
        match self {
            Prepared::Logistic { data, reg } => {
                Box::new(LogisticProblem::new(Arc::clone(data), *reg).expect("validated at construction"))
            }
            Prepared::Quadratic(q) => {
                Box::new(QuadraticProblem::new(q.h().clone(), q.b().clone()).expect("validated at construction"))
            }
            Prepared::Huber(n) => Box::new(PseudoHuber::new(*n)),
        }
    }

    /// The problem's own Hessian-Lipschitz estimate, when it has one.
    pub fn paper_estimate(&self) -> Result<Option<f64>, ConfigError> {
        match self {
            Prepared::Logistic { data, reg } => {
                let p = LogisticProblem::new(Arc::clone(data), *reg).map_err(|e| ConfigError::new("reg", e.to_string()))?;
                p.lipschitz_estimate().map(Some).map_err(|e| ConfigError::new("data", e.to_string()))
            }
            Prepared::Quadratic(_) => Ok(None),
            Prepared::Huber(n) => Ok(Some(PseudoHuber::new(*n).lipschitz_constant())),
        }
    }

    /// Resolves the M policy. Quadratics have no natural estimate and need
    /// an explicit value.
    pub fn resolve_m(&self, policy: MPolicy) -> Result<f64, ConfigError> {
        let paper = || {
            self.paper_estimate()?.ok_or_else(|| ConfigError::new("m_policy", "this problem needs an explicit M"))
        };
        let m = match policy {
            MPolicy::Explicit(m) => m,
            MPolicy::PaperEstimate => paper()?,
            MPolicy::HalfPaperEstimate => 0.5 * paper()?,
        };
        if !(m > 0.0 && m.is_finite()) {
            return Err(ConfigError::new("m_policy", format!("resolved M = {m} is not positive")));
        }
        Ok(m)
    }

    pub fn start(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }
}
