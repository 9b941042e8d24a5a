//! `counterexample`: predicted vs measured FDRF growth on the rotation
//! instance.

use opsplit::analysis::counterexample_growth;
use opsplit::problems::{build_counterexample, CounterexampleParams};
use opsplit::solvers::{fdrf_step, FdrfState, SolverConfig};
use opsplit::{Operator, Point};

use crate::error::CliError;

pub const RUN_LENGTH: usize = 200;
pub const WINDOW: usize = 100;

#[derive(Debug, Clone, Copy)]
pub struct GrowthRow {
    pub omega: f64,
    pub predicted: f64,
    pub measured: f64,
}

impl GrowthRow {
    pub fn diff(&self) -> f64 {
        (self.predicted - self.measured).abs()
    }
}

/// Squared per-iteration growth of `||z_n||`, averaged geometrically over
/// the last `WINDOW` of `RUN_LENGTH` FDRF steps from `z_0 = (1, 0)`.
pub fn measure(gamma: f64, mu: f64, omega: f64) -> Result<GrowthRow, CliError> {
    let predicted = counterexample_growth(gamma, mu, omega)?;
    let p = build_counterexample(CounterexampleParams::new(gamma, mu, omega)?)?;
    let a = Operator::new(p.a.clone(), p.dim);
    let b = Operator::new(p.b.clone(), p.dim);
    let c = Operator::new(p.c.clone(), p.dim);
    let cfg = SolverConfig::new(gamma);
    let mut s = FdrfState {
        z: Point::new(vec![1.0, 0.0])?,
    };
    let mut norms = vec![s.z.norm()];
    for _ in 0..RUN_LENGTH {
        s = fdrf_step(&a, &b, &c, &cfg, &s)?.state_next;
        norms.push(s.z.norm());
    }
    let ratio = norms[RUN_LENGTH] / norms[RUN_LENGTH - WINDOW];
    let measured = ratio.powf(2.0 / WINDOW as f64);
    Ok(GrowthRow {
        omega,
        predicted,
        measured,
    })
}

pub fn cmd_counterexample(gamma: f64, mu: f64, omegas: &[f64]) -> Result<Vec<GrowthRow>, CliError> {
    if omegas.is_empty() {
        return Err(CliError::config("omega", "at least one value required"));
    }
    let rows = omegas
        .iter()
        .map(|&w| measure(gamma, mu, w))
        .collect::<Result<Vec<_>, _>>()?;
    println!("{:>12} {:>20} {:>20} {:>12}", "omega", "predicted", "measured", "abs_diff");
    for r in &rows {
        println!(
            "{:>12.6} {:>20.12} {:>20.12} {:>12.3e}",
            r.omega,
            r.predicted,
            r.measured,
            r.diff()
        );
    }
    Ok(rows)
}
