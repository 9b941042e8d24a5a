//! Problem sources: a JSON file path or `builder:NAME:ARGS`.
//!
//! | NAME | ARGS |
//! |---|---|
//! | `counterexample` | `GAMMA,MU,OMEGA` |
//! | `condition_i` | `DIM,KAPPA,MU,SEED` |
//! | `condition_ii` | `M,BASE_DIM,MU,SEED` |
//! | `random` | `DIM,MU,SEED` |

use std::path::Path;
use std::str::FromStr;

use opsplit::problems::{
    build_condition_i, build_condition_ii_consensus, build_counterexample, build_random_general,
    load, CounterexampleParams,
};
use opsplit::ProblemInstance;

use crate::error::CliError;

const PREFIX: &str = "builder:";

pub fn load_source(spec: &str, base: &Path) -> Result<ProblemInstance, CliError> {
    let fail = |message: String| CliError::ProblemLoad {
        source_name: spec.to_string(),
        message,
    };
    match spec.strip_prefix(PREFIX) {
        Some(rest) => build(rest).map_err(fail),
        None => {
            let path = base.join(spec);
            let bytes = std::fs::read(&path).map_err(|e| fail(e.to_string()))?;
            load(&bytes).map_err(|e| fail(e.to_string()))
        }
    }
}

fn args<T: FromStr>(raw: &str, n: usize, usage: &str) -> Result<Vec<T>, String> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} arguments {usage}, got `{raw}`"));
    }
    parts
        .iter()
        .map(|p| p.parse::<T>().map_err(|_| format!("cannot parse `{p}` in {usage}")))
        .collect()
}

fn build(rest: &str) -> Result<ProblemInstance, String> {
    let (name, raw) = rest.split_once(':').unwrap_or((rest, ""));
    let lib = |e: opsplit::Error| e.to_string();
    match name {
        "counterexample" => {
            let v: Vec<f64> = args(raw, 3, "GAMMA,MU,OMEGA")?;
            build_counterexample(CounterexampleParams::new(v[0], v[1], v[2]).map_err(lib)?).map_err(lib)
        }
        "condition_i" => {
            let v: Vec<f64> = args(raw, 4, "DIM,KAPPA,MU,SEED")?;
            build_condition_i(as_count(v[0])?, v[1], v[2], as_count(v[3])? as u64).map_err(lib)
        }
        "condition_ii" => {
            let v: Vec<f64> = args(raw, 4, "M,BASE_DIM,MU,SEED")?;
            build_condition_ii_consensus(as_count(v[0])?, as_count(v[1])?, v[2], as_count(v[3])? as u64)
                .map_err(lib)
        }
        "random" => {
            let v: Vec<f64> = args(raw, 3, "DIM,MU,SEED")?;
            build_random_general(as_count(v[0])?, v[1], as_count(v[2])? as u64).map_err(lib)
        }
        other => Err(format!(
            "unknown builder `{other}` (expected counterexample, condition_i, condition_ii, random)"
        )),
    }
}

fn as_count(v: f64) -> Result<usize, String> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(format!("expected a nonnegative integer, got {v}"))
    }
}
