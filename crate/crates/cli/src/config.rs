//! Run configuration read from a TOML file.
//!
//! ```toml
//! command = "compare"          # iterate | flow | oracle | compare | properties
//! seed = 24301
//!
//! [instance]
//! kind = "pdirichlet1d"
//! p = 3.0
//! n = 31
//!
//! [scheme]
//! rtol = 1e-10
//! tau = 1e-3
//!
//! [output]
//! dir = "runs/pdirichlet"
//! ```

use std::path::{Path, PathBuf};

use nlrq::{CoeffVec, FlowOptions, IterationOptions, ProblemInstance, ProblemKind, ProblemSpec};
use serde::Deserialize;

/// Seed used when neither the file nor the command line sets one.
pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Iterate,
    Flow,
    Oracle,
    Compare,
    Properties,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Iterate => "iterate",
            Command::Flow => "flow",
            Command::Oracle => "oracle",
            Command::Compare => "compare",
            Command::Properties => "properties",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub seed: Option<u64>,
    pub instance: Option<InstanceConfig>,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub kind: String,
    /// Required except for the matrix kind, where it defaults to 2.
    pub p: Option<f64>,
    /// Grid size; the matrix kind takes its size from `matrix`.
    pub n: Option<usize>,
    pub length: Option<f64>,
    pub s: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub rtol: Option<f64>,
    pub dtol: Option<f64>,
    /// Outer iterations, or flow steps.
    pub max_iters: Option<usize>,
    pub tau: Option<f64>,
    pub t_end: Option<f64>,
    pub grad_tol: Option<f64>,
    /// Starting vector; defaults to the instance's own.
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

/// A configuration problem, reported with the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid `{}`: {}", self.key, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError { key: key.to_string(), reason: reason.into() }
}

impl From<nlrq::Error> for ConfigError {
    fn from(e: nlrq::Error) -> Self {
        match e {
            nlrq::Error::Config { key, reason } => ConfigError { key, reason },
            other => bad("instance", other.to_string()),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(parse_error)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.command != Command::Properties && self.instance.is_none() {
            return Err(bad("instance", format!("section required by `{}`", self.command.name())));
        }
        if let Some(inst) = &self.instance {
            inst.spec()?.build()?;
        }
        let s = &self.scheme;
        for (key, v) in [("rtol", s.rtol), ("dtol", s.dtol), ("tau", s.tau), ("t_end", s.t_end), ("grad_tol", s.grad_tol)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(bad(key, format!("must be positive and finite, got {v}")));
                }
            }
        }
        if s.max_iters == Some(0) {
            return Err(bad("max_iters", "must be at least 1"));
        }
        if let (Some(tau), Some(t_end)) = (s.tau, s.t_end) {
            if t_end < tau {
                return Err(bad("t_end", format!("must be at least tau = {tau}")));
            }
        }
        if let Some(init) = &s.initial {
            let dim = self.instance.as_ref().map(|i| i.spec().and_then(|s| Ok(s.build()?.dim())));
            match dim {
                Some(Ok(dim)) if dim != init.len() => {
                    return Err(bad("initial", format!("has {} entries, the instance has {dim}", init.len())));
                }
                _ => {}
            }
            if init.iter().any(|v| !v.is_finite()) {
                return Err(bad("initial", "entries must be finite"));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn iteration_options(&self) -> IterationOptions {
        let mut o = IterationOptions::default();
        let s = &self.scheme;
        o.rtol = s.rtol.unwrap_or(o.rtol);
        o.dtol = s.dtol.unwrap_or(o.dtol);
        o.max_iters = s.max_iters.unwrap_or(o.max_iters);
        o.solver.grad_tol = s.grad_tol.unwrap_or(o.solver.grad_tol);
        o
    }

    pub fn flow_options(&self) -> FlowOptions {
        let mut o = FlowOptions::default();
        let s = &self.scheme;
        o.rtol = s.rtol.unwrap_or(o.rtol);
        o.dtol = s.dtol.unwrap_or(o.dtol);
        o.max_steps = s.max_iters.unwrap_or(o.max_steps);
        o.tau = s.tau;
        o.t_end = s.t_end;
        o.solver.grad_tol = s.grad_tol.unwrap_or(o.solver.grad_tol);
        o
    }

    /// The configured starting vector, or the instance default.
    pub fn initial(&self, problem: &ProblemInstance) -> CoeffVec {
        match &self.scheme.initial {
            Some(v) => CoeffVec::new(v.clone()).expect("validated"),
            None => problem.default_initial(),
        }
    }
}

impl InstanceConfig {
    pub fn spec(&self) -> Result<ProblemSpec, ConfigError> {
        let kind = ProblemKind::from_name(&self.kind).ok_or_else(|| {
            let names: Vec<_> = ProblemKind::ALL.iter().map(|k| k.name()).collect();
            bad("kind", format!("unknown kind `{}`; expected one of {}", self.kind, names.join(", ")))
        })?;
        let mut spec = if kind == ProblemKind::MatrixQuadratic {
            let rows = self.matrix.clone().ok_or_else(|| bad("matrix", "required by the matrix kind"))?;
            if rows.is_empty() {
                return Err(bad("matrix", "must have at least one row"));
            }
            if self.n.is_some_and(|n| n != rows.len()) {
                return Err(bad("n", "does not match the matrix size"));
            }
            let mut spec = ProblemSpec::matrix(rows);
            spec.p = self.p.unwrap_or(2.0);
            spec
        } else {
            if self.matrix.is_some() {
                return Err(bad("matrix", format!("not used by the `{}` kind", self.kind)));
            }
            let p = self.p.ok_or_else(|| bad("p", "required"))?;
            let n = self.n.ok_or_else(|| bad("n", "required"))?;
            ProblemSpec::new(kind, p, n)
        };
        if let Some(v) = self.length {
            spec = spec.with_length(v);
        }
        if let Some(v) = self.s {
            spec = spec.with_s(v);
        }
        if let Some(v) = self.beta {
            spec = spec.with_beta(v);
        }
        if let Some(v) = self.epsilon {
            spec = spec.with_epsilon(v);
        }
        Ok(spec)
    }

    pub fn build(&self) -> Result<ProblemInstance, ConfigError> {
        Ok(self.spec()?.build()?)
    }
}

/// Extracts the key path from a TOML error where one is available.
fn parse_error(e: toml::de::Error) -> ConfigError {
    let message = e.message().to_string();
    let key = ["unknown field `", "missing field `", "unknown variant `"]
        .iter()
        .find_map(|prefix| {
            let rest = message.split(prefix).nth(1)?;
            Some(rest.split('`').next()?.to_string())
        })
        .unwrap_or_else(|| "config".to_string());
    ConfigError { key, reason: message }
}
