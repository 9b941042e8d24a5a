//! `run`: one trace CSV per (problem, method, gamma, beta) cell plus
//! `summary.json`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use opsplit::analysis::{LyapunovMonitor, PDNorm};
use opsplit::problems::random::{gaussian_vector, rng};
use opsplit::solvers::{
    default_config, initial_state, run, Method, RunOptions, RunStatus, RunTrace, SolverConfig,
};
use opsplit::{Point, ProblemInstance};

use crate::config::{Init, Sweep, SweepConfig, SEED_ENV};
use crate::error::CliError;
use crate::source::load_source;

pub const CSV_HEADER: [&str; 8] = [
    "iter",
    "residual",
    "iterate_norm",
    "dist_to_zero",
    "V",
    "S",
    "cum_c_evals",
    "wall_ns",
];

struct Cell<'a> {
    index: usize,
    problem_index: usize,
    problem: &'a ProblemInstance,
    method: Method,
    cfg: SolverConfig,
    x0: &'a Point,
}

#[derive(Debug, Serialize)]
pub struct CellSummary {
    pub file: String,
    pub problem: String,
    pub problem_tag: String,
    pub method: String,
    pub gamma: f64,
    pub beta: Option<f64>,
    pub status: String,
    pub iters: usize,
    pub c_evals: usize,
    pub final_residual: Option<f64>,
    pub final_dist_to_zero: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub cells: Vec<CellSummary>,
}

/// Cells of one method on one problem: the gamma grid (or the method's
/// default) crossed with the beta grid for FRDR. Without a gamma grid,
/// FRDR's gamma follows each beta as `0.99 beta / (1 + 2 mu beta)`.
fn configs(sweep: &SweepConfig, method: Method, problem: &ProblemInstance) -> Vec<SolverConfig> {
    let base = default_config(method, problem)
        .with_max_iter(sweep.max_iter)
        .with_tol(sweep.tol)
        .with_blowup(sweep.blowup);
    let base = match sweep.je_alpha {
        Some(a) => base.with_je_alpha(a),
        None => base,
    };
    let betas: Vec<Option<f64>> = match (method.uses_beta(), &sweep.beta) {
        (true, Some(bs)) => bs.iter().copied().map(Some).collect(),
        (true, None) => vec![base.beta],
        (false, _) => vec![None],
    };
    let mut out = Vec::new();
    for beta in betas {
        let gammas = match (&sweep.gamma, beta) {
            (Some(gs), _) => gs.clone(),
            (None, Some(b)) => vec![0.99 * b / (1.0 + 2.0 * problem.lip.mu * b)],
            (None, None) => vec![base.gamma],
        };
        for g in gammas {
            let mut cfg = base;
            cfg.gamma = g;
            cfg.beta = beta;
            out.push(cfg);
        }
    }
    out
}

fn initial_point(init: Init, dim: usize, seed: u64) -> Point {
    match init {
        Init::Zeros => Point::zeros(dim),
        Init::Random => gaussian_vector(&mut rng(seed), dim).into(),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in &trace.rows {
        w.write_record([
            r.iter.to_string(),
            fmt_opt(r.residual),
            r.iterate_norm.to_string(),
            fmt_opt(r.dist_to_zero),
            fmt_opt(r.v),
            fmt_opt(r.s),
            r.cum_c_evals.to_string(),
            r.wall_ns.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn run_cell(cell: &Cell<'_>, sweep: &SweepConfig, out_dir: &Path) -> (CellSummary, Result<(), CliError>) {
    let monitor = match (sweep.lyapunov && cell.method == Method::Frdr, &cell.problem.known_solution, cell.cfg.beta) {
        (true, Some(star), Some(b)) => PDNorm::new(cell.cfg.gamma, b)
            .and_then(|n| LyapunovMonitor::new(cell.problem, star.clone(), n))
            .ok(),
        _ => None,
    };
    let opts = RunOptions {
        track_dist: sweep.track_dist,
        lyapunov: monitor.as_ref(),
    };
    let trace = match initial_state(cell.method, cell.problem, cell.x0) {
        Ok(init) => run(cell.method, cell.problem, &cell.cfg, init, &opts),
        Err(e) => {
            let summary = summarize(cell, String::new(), None, Some(e.to_string()));
            return (summary, Ok(()));
        }
    };
    let tag = trace.problem_tag.replace(|c: char| !c.is_ascii_alphanumeric(), "-");
    let file = format!("cell{:03}_p{}-{}_{}.csv", cell.index, cell.problem_index, tag, cell.method);
    let written = write_trace(&out_dir.join(&file), &trace);
    let summary = summarize(cell, file, Some(&trace), trace.error.as_ref().map(|e| e.to_string()));
    (summary, written)
}

fn summarize(cell: &Cell<'_>, file: String, trace: Option<&RunTrace>, error: Option<String>) -> CellSummary {
    CellSummary {
        file,
        problem: format!("p{}", cell.problem_index),
        problem_tag: cell.problem.tags.first().cloned().unwrap_or_default(),
        method: cell.method.to_string(),
        gamma: cell.cfg.gamma,
        beta: cell.cfg.beta,
        status: trace.map_or(RunStatus::Failed, |t| t.status).as_str().to_string(),
        iters: trace.map_or(0, |t| t.iters),
        c_evals: trace.map_or(0, |t| t.total_c_evals()),
        final_residual: trace.and_then(|t| t.final_residual()),
        final_dist_to_zero: trace.and_then(|t| t.rows.last().and_then(|r| r.dist_to_zero)),
        error,
    }
}

/// Runs the sweep described by the config file at `path`. Relative problem
/// paths and `output_dir` resolve against the config file's directory.
/// Returns the summary and whether every cell completed without `Failed`.
pub fn cmd_run(path: &Path) -> Result<(Summary, bool), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let env_seed = std::env::var(SEED_ENV).ok();
    let Sweep { raw, methods } = SweepConfig::parse(&bytes)?.validate(env_seed.as_deref())?;
    let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let problems = raw
        .problems
        .iter()
        .map(|s| load_source(s, &base))
        .collect::<Result<Vec<_>, _>>()?;
    let starts: Vec<Point> = problems
        .iter()
        .enumerate()
        .map(|(i, p)| initial_point(raw.init, p.dim, raw.seed.wrapping_add(i as u64)))
        .collect();
    let out_dir = base.join(&raw.output_dir);
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;

    let mut cells = Vec::new();
    for (pi, p) in problems.iter().enumerate() {
        for &m in &methods {
            for cfg in configs(&raw, m, p) {
                cells.push(Cell {
                    index: cells.len(),
                    problem_index: pi,
                    problem: p,
                    method: m,
                    cfg,
                    x0: &starts[pi],
                });
            }
        }
    }
    let results: Vec<_> = cells.par_iter().map(|c| run_cell(c, &raw, &out_dir)).collect();

    let mut ok = true;
    let mut summaries = Vec::with_capacity(results.len());
    for (s, written) in results {
        written?;
        ok &= s.status != RunStatus::Failed.as_str();
        summaries.push(s);
    }
    let summary = Summary {
        seed: raw.seed,
        cells: summaries,
    };
    let summary_path = out_dir.join("summary.json");
    let json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, json).map_err(|e| CliError::io(&summary_path, e))?;
    Ok((summary, ok))
}
