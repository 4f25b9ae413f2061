use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::envelope::default_p0;
use crate::error::{FieldlabError, Result};
use crate::nonlinearity::{make_power_nonlinearity, KirchhoffFunction, Nonlinearity, SamplingGrid};
use crate::shooter::ShootingOptions;
use crate::transfer::TransferOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Check,
    Solve,
    Envelope,
    Transfer,
    Sweep,
    Verify,
}

/// How `f` is given in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FSpec {
    Power { mu: f64, p: f64 },
    Tabulated { t: Vec<f64>, f: Vec<f64>, #[serde(default)] omega: Option<f64> },
}

impl FSpec {
    pub fn build(&self, dimension: usize) -> Result<Nonlinearity> {
        match self {
            FSpec::Power { mu, p } => make_power_nonlinearity(*mu, *p, dimension),
            FSpec::Tabulated { t, f, omega } => Nonlinearity::tabulated(t.clone(), f.clone(), *omega),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvelopeConfig {
    pub p0: Option<f64>,
    pub t_max: f64,
    pub points: usize,
    pub m0: f64,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self { p0: None, t_max: 10.0, points: 10_000, m0: 1.0 }
    }
}

impl EnvelopeConfig {
    pub fn p0(&self, dimension: usize) -> f64 {
        self.p0.unwrap_or_else(|| default_p0(dimension))
    }
}

/// A complete run description, read from one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub f: FSpec,
    #[serde(default = "KirchhoffFunction::unit")]
    pub m: KirchhoffFunction,
    /// Family over `q` for sweeps; defaults to `m`.
    #[serde(default)]
    pub q_family: Option<KirchhoffFunction>,
    #[serde(default)]
    pub q_grid: Vec<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub shooting: ShootingOptions,
    #[serde(default)]
    pub transfer: TransferOptions,
    #[serde(default)]
    pub envelope: EnvelopeConfig,
    #[serde(default)]
    pub sampling: SamplingGrid,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_n_max() -> usize {
    3
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from(".fieldlab-cache")
}

fn default_output() -> PathBuf {
    PathBuf::from("fieldlab-out")
}

fn config_err(e: impl std::fmt::Display) -> FieldlabError {
    FieldlabError::Config(e.to_string())
}

/// Sets `a.b.c = value` in a JSON tree, creating objects along the way.
/// The value is parsed as JSON when possible and kept as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{assignment}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_err(format!("bad override path `{path}`")));
    }
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| config_err(format!("`{path}`: `{key}` is not inside an object")))?;
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| config_err(format!("`{path}` does not address an object field")))?;
    obj.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn from_value(doc: Value) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_value(doc).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let mut doc: Value = serde_json::from_str(&text).map_err(config_err)?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        Self::from_value(doc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(config_err(format!("dimension must be at least 2, got {}", self.dimension)));
        }
        let io = &self.shooting.integrator;
        let positive = [io.atol, io.rtol, io.max_step, self.shooting.bisection_tol, self.shooting.tail_rel];
        if positive.iter().any(|x| !(*x > 0.0)) {
            return Err(config_err("tolerances must be positive"));
        }
        if self.q_grid.windows(2).any(|w| !(w[1] > w[0])) || self.q_grid.iter().any(|q| !(*q > 0.0)) {
            return Err(config_err("q_grid must be positive and strictly increasing"));
        }
        if self.n_max == 0 || self.n_max > self.shooting.family_cap {
            return Err(config_err(format!(
                "n_max must lie in 1..={}, got {}",
                self.shooting.family_cap, self.n_max
            )));
        }
        Ok(())
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        self.f.build(self.dimension).map_err(|e| match e {
            FieldlabError::ConditionViolated { .. } | FieldlabError::InvalidParameter(_) => config_err(e),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn dotted_overrides() {
        let mut doc = json!({"dimension": 3, "f": {"family": "power", "mu": 1.0, "p": 3.0}});
        apply_override(&mut doc, "shooting.integrator.atol=1e-11").unwrap();
        apply_override(&mut doc, "dimension=2").unwrap();
        apply_override(&mut doc, "output=some/dir").unwrap();
        let cfg = RunConfig::from_value(doc).unwrap();
        assert_eq!(cfg.dimension, 2);
        assert_eq!(cfg.shooting.integrator.atol, 1e-11);
        assert_eq!(cfg.output, PathBuf::from("some/dir"));
        assert!(cfg.m.is_unit());
    }

    #[test]
    fn invalid_configs() {
        let base = json!({"dimension": 3, "f": {"family": "power", "mu": 1.0, "p": 3.0}});
        for o in ["dimension=1", "q_grid=[0.2,0.1]", "shooting.bisection_tol=0", "n_max=9", "bogus=1"] {
            let mut doc = base.clone();
            apply_override(&mut doc, o).unwrap();
            assert!(matches!(RunConfig::from_value(doc), Err(FieldlabError::Config(_))), "{o}");
        }
        assert!(apply_override(&mut base.clone(), "novalue").is_err());
    }
}
