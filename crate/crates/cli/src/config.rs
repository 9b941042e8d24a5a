//! Sweep configuration file.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use opsplit::solvers::{Method, DEFAULT_BLOWUP};

use crate::error::CliError;

pub const SEED_ENV: &str = "OPSPLIT_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Zeros,
    Random,
}

fn default_max_iter() -> usize {
    10_000
}
fn default_tol() -> f64 {
    1e-8
}
fn default_blowup() -> f64 {
    DEFAULT_BLOWUP
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("opsplit-out")
}
fn default_init() -> Init {
    Init::Random
}
fn yes() -> bool {
    true
}

/// The on-disk form. Absent grids mean "each method's default step".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub methods: Vec<String>,
    pub problems: Vec<String>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_blowup")]
    pub blowup: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_init")]
    pub init: Init,
    #[serde(default)]
    pub je_alpha: Option<f64>,
    #[serde(default = "yes")]
    pub track_dist: bool,
    #[serde(default = "yes")]
    pub lyapunov: bool,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub raw: SweepConfig,
    pub methods: Vec<Method>,
}

impl SweepConfig {
    pub fn parse(bytes: &[u8]) -> Result<SweepConfig, CliError> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let key = match path.as_str() {
                "." => missing_field(&inner.to_string()).unwrap_or_else(|| ".".into()),
                p => p.to_string(),
            };
            CliError::config(key, inner.to_string())
        })
    }

    pub fn validate(self, env_seed: Option<&str>) -> Result<Sweep, CliError> {
        let mut raw = self;
        if let Some(s) = env_seed {
            raw.seed = s
                .trim()
                .parse()
                .map_err(|_| CliError::config(SEED_ENV, format!("not an unsigned integer: `{s}`")))?;
        }
        if raw.methods.is_empty() {
            return Err(CliError::config("methods", "must list at least one method"));
        }
        let methods = raw
            .methods
            .iter()
            .map(|m| m.parse::<Method>().map_err(|e| CliError::config("methods", e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if raw.problems.is_empty() {
            return Err(CliError::config("problems", "must list at least one problem"));
        }
        for (key, grid) in [("gamma", &raw.gamma), ("beta", &raw.beta)] {
            if let Some(g) = grid {
                if g.is_empty() {
                    return Err(CliError::config(key, "grid must be nonempty when given"));
                }
                if let Some(bad) = g.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    return Err(CliError::config(key, format!("entries must be positive, got {bad}")));
                }
            }
        }
        if !(raw.tol > 0.0) {
            return Err(CliError::config("tol", "must be positive"));
        }
        if raw.max_iter == 0 {
            return Err(CliError::config("max_iter", "must be positive"));
        }
        if !(raw.blowup > 0.0) {
            return Err(CliError::config("blowup", "must be positive"));
        }
        if let Some(a) = raw.je_alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(CliError::config("je_alpha", "must be positive"));
            }
        }
        if methods.contains(&Method::JohnstoneEckstein) && raw.je_alpha.is_none() {
            return Err(CliError::config("je_alpha", "required when methods include `je`"));
        }
        Ok(Sweep { raw, methods })
    }
}

/// serde reports a missing field at the parent path; recover its name.
fn missing_field(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("missing field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(json: &str) -> String {
        let r = SweepConfig::parse(json.as_bytes()).and_then(|c| c.validate(None));
        match r {
            Err(CliError::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn offending_keys_are_named() {
        assert_eq!(key_of(r#"{"methods": [], "problems": ["x"]}"#), "methods");
        assert_eq!(key_of(r#"{"problems": ["x"]}"#), "methods");
        assert_eq!(key_of(r#"{"methods": ["frdr"], "problems": []}"#), "problems");
        assert_eq!(key_of(r#"{"methods": ["what"], "problems": ["x"]}"#), "methods");
        assert_eq!(key_of(r#"{"methods": ["frdr"], "problems": ["x"], "gamma": []}"#), "gamma");
        assert_eq!(key_of(r#"{"methods": ["frdr"], "problems": ["x"], "tol": 0}"#), "tol");
        assert_eq!(key_of(r#"{"methods": ["frdr"], "problems": ["x"], "tol": "a"}"#), "tol");
        assert_eq!(key_of(r#"{"methods": ["je"], "problems": ["x"]}"#), "je_alpha");
        assert_eq!(key_of(r#"{"methods": ["frdr"], "problems": ["x"], "init": "ones"}"#), "init");
    }

    #[test]
    fn env_seed_overrides() {
        let c = SweepConfig::parse(br#"{"methods": ["frdr"], "problems": ["x"], "seed": 3}"#).unwrap();
        assert_eq!(c.clone().validate(None).unwrap().raw.seed, 3);
        assert_eq!(c.clone().validate(Some("17")).unwrap().raw.seed, 17);
        assert!(c.validate(Some("x")).is_err());
    }
}
