//! `validate`: the invariant suite on one instance.

use std::path::Path;

use opsplit::analysis::properties::{check_instance, CheckResult};

use crate::config::SEED_ENV;
use crate::error::CliError;
use crate::source::load_source;

/// Prints one PASS/FAIL line per check and returns the results.
pub fn cmd_validate(spec: &str) -> Result<Vec<CheckResult>, CliError> {
    let problem = load_source(spec, Path::new("."))?;
    let seed = match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::config(SEED_ENV, format!("not an unsigned integer: `{s}`")))?,
        Err(_) => 0,
    };
    let results = check_instance(&problem, seed);
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {}", r.name, r.detail);
    }
    Ok(results)
}
