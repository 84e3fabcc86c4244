//! Run configuration: a flat `key = value` file merged with command-line
//! overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use atr_core::atr_extra::G0Policy;
use atr_core::baselines::BaselineMethod;
use atr_core::report::Telemetry;

pub const OUT_DIR_ENV: &str = "ATR_OUT_DIR";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { key: key.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Libsvm(PathBuf),
    /// Dense Gaussian features with logistic labels.
    Gaussian { n_samples: usize, n_features: usize },
    /// One-hot encoded categorical features in the style of the adult data.
    Census { n_samples: usize },
    Quadratic { dim: usize, cond: f64 },
    Huber { dim: usize },
}

impl ProblemSpec {
    /// Short tag used in file names.
    pub fn tag(&self, seed: u64) -> String {
        match self {
            ProblemSpec::Libsvm(p) => p.file_stem().map_or("libsvm".into(), |s| s.to_string_lossy().into_owned()),
            ProblemSpec::Gaussian { n_samples, n_features } => format!("gaussian{n_samples}x{n_features}s{seed}"),
            ProblemSpec::Census { n_samples } => format!("census{n_samples}s{seed}"),
            ProblemSpec::Quadratic { dim, .. } => format!("quadratic{dim}s{seed}"),
            ProblemSpec::Huber { dim } => format!("huber{dim}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MPolicy {
    PaperEstimate,
    HalfPaperEstimate,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    AtrLocal,
    AtrExtra,
    Baseline(BaselineMethod),
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::AtrLocal,
        Method::AtrExtra,
        Method::Baseline(BaselineMethod::Newton),
        Method::Baseline(BaselineMethod::Utr1),
        Method::Baseline(BaselineMethod::Utr2),
        Method::Baseline(BaselineMethod::Cubic),
        Method::Baseline(BaselineMethod::CubicAccel),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::AtrLocal => "ATR-I",
            Method::AtrExtra => "ATR-II",
            Method::Baseline(b) => b.name(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "atr-i" | "atr1" | "v1" => Ok(Method::AtrLocal),
            "atr-ii" | "atr2" | "v2" => Ok(Method::AtrExtra),
            other => other.parse::<BaselineMethod>().map(Method::Baseline).map_err(|_| format!("unknown method {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub seed: u64,
    pub reg: f64,
    pub methods: Vec<Method>,
    pub epsilon: f64,
    pub m_policy: MPolicy,
    pub out_dir: Option<PathBuf>,
    pub telemetry: Telemetry,
    pub jobs: usize,
    pub max_outer: usize,
    pub strict: bool,
    pub theta: f64,
    pub eta: f64,
    pub gamma: f64,
    pub g0_policy: G0Policy,
    pub d0: Option<f64>,
}

/// Parsed configuration plus the keys that were not recognized.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

const KNOWN_KEYS: &[&str] = &[
    "problem", "data", "n_samples", "n_features", "dim", "cond", "seed", "reg", "methods", "epsilon", "m_policy",
    "m", "out_dir", "invariants", "wall_clock", "jobs", "max_outer", "strict", "theta", "eta", "gamma", "g0", "d0",
];

/// Reads `key = value` lines. `#` starts a comment; later keys win.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::new(format!("line {}", i + 1), format!("expected `key = value`, got {line:?}")));
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn get<T: FromStr>(kv: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, ConfigError> {
    match kv.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| ConfigError::new(key, format!("cannot parse {v:?}"))),
    }
}

fn get_bool(kv: &BTreeMap<String, String>, key: &str, default: bool) -> Result<bool, ConfigError> {
    match kv.get(key).map(|s| s.to_ascii_lowercase()) {
        None => Ok(default),
        Some(v) => match v.as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            _ => Err(ConfigError::new(key, format!("expected a boolean, got {v:?}"))),
        },
    }
}

/// Builds a [`RunConfig`] from merged key-value pairs. `env_out_dir` is the
/// fallback output directory.
pub fn from_kv(kv: &BTreeMap<String, String>, env_out_dir: Option<PathBuf>) -> Result<Parsed, ConfigError> {
    let warnings = kv
        .keys()
        .filter(|k| !KNOWN_KEYS.contains(&k.as_str()))
        .map(|k| format!("unknown key `{k}` ignored"))
        .collect();

    let kind = match (kv.get("problem"), kv.get("data")) {
        (Some(p), _) => p.to_ascii_lowercase(),
        (None, Some(_)) => "libsvm".into(),
        (None, None) => "gaussian".into(),
    };
    let problem = match kind.as_str() {
        "libsvm" => {
            let path = kv.get("data").ok_or_else(|| ConfigError::new("data", "libsvm problems need a data path"))?;
            ProblemSpec::Libsvm(PathBuf::from(path))
        }
        "gaussian" => ProblemSpec::Gaussian {
            n_samples: get(kv, "n_samples", 500)?,
            n_features: get(kv, "n_features", 50)?,
        },
        "census" => ProblemSpec::Census { n_samples: get(kv, "n_samples", 1605)? },
        "quadratic" => ProblemSpec::Quadratic { dim: get(kv, "dim", 20)?, cond: get(kv, "cond", 1e3)? },
        "huber" => ProblemSpec::Huber { dim: get(kv, "dim", 10)? },
        other => return Err(ConfigError::new("problem", format!("unknown problem {other:?}"))),
    };

    let methods = match kv.get("methods") {
        None => return Err(ConfigError::new("methods", "no methods given")),
        Some(list) => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse::<Method>().map_err(|e| ConfigError::new("methods", e)))
            .collect::<Result<Vec<_>, _>>()?,
    };
    if methods.is_empty() {
        return Err(ConfigError::new("methods", "no methods given"));
    }

    let epsilon: f64 = get(kv, "epsilon", 1e-6)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ConfigError::new("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    let m_policy = match (kv.get("m_policy").map(|s| s.to_ascii_lowercase()), kv.get("m")) {
        (_, Some(v)) => MPolicy::Explicit(v.parse().map_err(|_| ConfigError::new("m", format!("cannot parse {v:?}")))?),
        (None, None) => MPolicy::PaperEstimate,
        (Some(p), None) => match p.as_str() {
            "paper" | "paperestimate" => MPolicy::PaperEstimate,
            "half" | "halfpaperestimate" => MPolicy::HalfPaperEstimate,
            other => MPolicy::Explicit(
                other.parse().map_err(|_| ConfigError::new("m_policy", format!("expected paper, half or a number, got {other:?}")))?,
            ),
        },
    };
    if let MPolicy::Explicit(m) = m_policy {
        if !(m > 0.0 && m.is_finite()) {
            return Err(ConfigError::new("m", format!("must be finite and > 0, got {m}")));
        }
    }
    let g0_policy = match kv.get("g0").map(|s| s.to_ascii_lowercase()) {
        None => G0Policy::AdaptiveDoubling,
        Some(v) => match v.as_str() {
            "adaptive" => G0Policy::AdaptiveDoubling,
            "d0" => G0Policy::FromD0,
            other => G0Policy::UserSupplied(
                other.parse().map_err(|_| ConfigError::new("g0", format!("expected adaptive, d0 or a number, got {other:?}")))?,
            ),
        },
    };
    let d0 = match kv.get("d0") {
        None => None,
        Some(v) => Some(v.parse().map_err(|_| ConfigError::new("d0", format!("cannot parse {v:?}")))?),
    };
    let theta = get(kv, "theta", 2.0)?;
    let config = RunConfig {
        problem,
        seed: get(kv, "seed", 7)?,
        reg: get(kv, "reg", 1e-4)?,
        methods,
        epsilon,
        m_policy,
        out_dir: kv.get("out_dir").map(PathBuf::from).or(env_out_dir),
        telemetry: Telemetry {
            invariants: get_bool(kv, "invariants", true)?,
            wall_clock: get_bool(kv, "wall_clock", false)?,
        },
        jobs: get(kv, "jobs", 1)?,
        max_outer: get(kv, "max_outer", 10_000)?,
        strict: get_bool(kv, "strict", false)?,
        theta,
        eta: get(kv, "eta", 0.5)?,
        gamma: get(kv, "gamma", 1.0 / theta)?,
        g0_policy,
        d0,
    };
    if config.jobs == 0 {
        return Err(ConfigError::new("jobs", "must be at least 1"));
    }
    Ok(Parsed { config, warnings })
}

/// Reads the optional config file, applies `overrides` on top and resolves
/// the output directory fallback from the environment.
pub fn parse_config(path: Option<&Path>, overrides: &BTreeMap<String, String>) -> Result<Parsed, ConfigError> {
    let mut kv = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", p.display())))?;
            parse_kv(&text)?
        }
        None => BTreeMap::new(),
    };
    for (k, v) in overrides {
        kv.insert(k.clone(), v.clone());
    }
    from_kv(&kv, std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
}
