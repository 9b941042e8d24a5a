//! Uniform driver over the nine iterations.

use std::time::Instant;

use super::{
    ba_fpif_step, cp_pd_step, dr_step, fbf_step, fdrf_step, frb_step, frdr_step, je_ps_step,
    mt_pd_step, BaState, CpState, DrState, FbfState, FdrfState, FrbState, FrdrState, JeState,
    Method, MtState, SolverConfig, SolverState, StepReport,
};
use crate::analysis::LyapunovMonitor;
use crate::error::{Error, Result};
use crate::ops::{dist_to_zero, Operator, OperatorSpec};
use crate::point::Point;
use crate::problems::ProblemInstance;

/// The problem's operators with resolvents prefactored for one method and
/// configuration.
#[derive(Debug, Clone)]
pub struct Operators {
    pub a: Operator,
    pub b: Operator,
    pub c: Operator,
}

impl Operators {
    pub fn prepare(problem: &ProblemInstance, method: Method, cfg: &SolverConfig) -> Result<Self> {
        let d = problem.dim;
        let g = cfg.gamma;
        let (steps_a, steps_b): (Vec<f64>, Vec<f64>) = match method {
            Method::Frdr => (cfg.beta.into_iter().collect(), vec![g]),
            Method::CombettesPesquet | Method::MalitskyTam => (vec![1.0 / g], vec![g]),
            _ => (vec![g], vec![g]),
        };
        // a failed prefactorization is not fatal here; the step reports it
        let cached = |spec: &OperatorSpec, steps: &[f64]| {
            let op = Operator::new(spec.clone(), d);
            op.clone().with_resolvents(steps).unwrap_or(op)
        };
        Ok(Operators {
            a: cached(&problem.a, &steps_a),
            b: cached(&problem.b, &steps_b),
            c: Operator::new(problem.c.clone(), d),
        })
    }

    /// The resolvent operand of FBF/FRB: whichever of `A`, `B` is not zero.
    fn two_operator_operand(&self) -> Result<&Operator> {
        match (self.a.spec(), self.b.spec()) {
            (_, OperatorSpec::Zero) => Ok(&self.a),
            (OperatorSpec::Zero, _) => Ok(&self.b),
            _ => Err(Error::NotSupported(
                "two-operator method needs A or B to be zero".into(),
            )),
        }
    }
}

fn mismatch(method: Method, state: &SolverState) -> Error {
    Error::StateMismatch(format!("{} state given to {method}", state.method()))
}

/// One iteration of `method`. `JohnstoneEckstein` uses the constant
/// `cfg.je_alpha`.
pub fn step(
    method: Method,
    ops: &Operators,
    cfg: &SolverConfig,
    state: &SolverState,
) -> Result<StepReport<SolverState>> {
    let Operators { a, b, c } = ops;
    Ok(match (method, state) {
        (Method::Dr, SolverState::Dr(s)) => {
            if !matches!(c.spec(), OperatorSpec::Zero) {
                return Err(Error::NotSupported("Douglas-Rachford needs C = 0".into()));
            }
            dr_step(a, b, cfg, s)?.map_state(SolverState::Dr)
        }
        (Method::Fbf, SolverState::Fbf(s)) => {
            fbf_step(ops.two_operator_operand()?, c, cfg, s)?.map_state(SolverState::Fbf)
        }
        (Method::Frb, SolverState::Frb(s)) => {
            frb_step(ops.two_operator_operand()?, c, cfg, s)?.map_state(SolverState::Frb)
        }
        (Method::Fdrf, SolverState::Fdrf(s)) => fdrf_step(a, b, c, cfg, s)?.map_state(SolverState::Fdrf),
        (Method::Frdr, SolverState::Frdr(s)) => frdr_step(a, b, c, cfg, s)?.map_state(SolverState::Frdr),
        (Method::CombettesPesquet, SolverState::Cp(s)) => {
            cp_pd_step(a, b, c, cfg, s)?.map_state(SolverState::Cp)
        }
        (Method::MalitskyTam, SolverState::Mt(s)) => {
            mt_pd_step(a, b, c, cfg, s)?.map_state(SolverState::Mt)
        }
        (Method::BricenoArias, SolverState::Ba(s)) => {
            ba_fpif_step(a, b, c, cfg, s)?.map_state(SolverState::Ba)
        }
        (Method::JohnstoneEckstein, SolverState::Je(s)) => {
            let alpha = cfg.je_alpha.ok_or_else(|| {
                Error::InvalidParameter("projective splitting needs je_alpha".into())
            })?;
            je_ps_step(a, b, c, cfg, |_| alpha, s)?.map_state(SolverState::Je)
        }
        (m, s) => return Err(mismatch(m, s)),
    })
}

/// Initial state from a primal point: `x_prev = x0`, `c_prev = C x0`, zero
/// duals, and `z0 = x0` for the methods driven by `z`.
pub fn initial_state(method: Method, problem: &ProblemInstance, x0: &Point) -> Result<SolverState> {
    x0.check_dim(problem.dim)?;
    let zero = || Point::zeros(problem.dim);
    let cx0 = || problem.c.forward(x0);
    Ok(match method {
        Method::Dr => SolverState::Dr(DrState { z: x0.clone() }),
        Method::Fbf => SolverState::Fbf(FbfState { x: x0.clone() }),
        Method::Frb => SolverState::Frb(FrbState {
            x: x0.clone(),
            x_prev: x0.clone(),
            c_prev: cx0()?,
        }),
        Method::Fdrf => SolverState::Fdrf(FdrfState { z: x0.clone() }),
        Method::Frdr => SolverState::Frdr(FrdrState {
            x: x0.clone(),
            x_prev: x0.clone(),
            u: zero(),
            c_prev: cx0()?,
        }),
        Method::CombettesPesquet => SolverState::Cp(CpState {
            x: x0.clone(),
            u: zero(),
        }),
        Method::MalitskyTam => SolverState::Mt(MtState {
            x: x0.clone(),
            x_prev: x0.clone(),
            u: zero(),
            u_prev: zero(),
            c_prev: cx0()?,
        }),
        Method::BricenoArias => SolverState::Ba(BaState { z: x0.clone() }),
        Method::JohnstoneEckstein => SolverState::Je(JeState {
            z: x0.clone(),
            w_a: zero(),
            w_b: zero(),
            w_c: zero(),
            x_c: x0.clone(),
        }),
    })
}

/// Step sizes inside each method's convergence range.
///
/// | method | gamma |
/// |---|---|
/// | DR | 1 |
/// | FBF | 0.99/mu |
/// | FRB | 0.49/mu |
/// | FDRF | 0.99 min(kappa, sqrt(2/3)/mu) with kappa, else 0.99/mu |
/// | FRDR | 0.99 beta/(1 + 2 mu beta), beta = 1 |
/// | CP, MT | 0.1/mu |
/// | BA | 0.99/mu |
/// | JE | 1, with `je_alpha` left to the caller |
pub fn default_config(method: Method, problem: &ProblemInstance) -> SolverConfig {
    let mu = problem.lip.mu;
    match method {
        Method::Dr | Method::JohnstoneEckstein => SolverConfig::new(1.0),
        Method::Fbf | Method::BricenoArias => SolverConfig::new(0.99 / mu),
        Method::Frb => SolverConfig::new(0.49 / mu),
        Method::Fdrf => SolverConfig::new(match problem.lip.kappa {
            Some(k) => 0.99 * k.min((2.0_f64 / 3.0).sqrt() / mu),
            None => 0.99 / mu,
        }),
        Method::Frdr => {
            let beta = 1.0;
            SolverConfig::new(0.99 * beta / (1.0 + 2.0 * mu * beta)).with_beta(beta)
        }
        Method::CombettesPesquet | Method::MalitskyTam => SolverConfig::new(0.1 / mu),
    }
}

/// A description of how `cfg` leaves the step-size range under which the
/// method is known to converge, if it does.
pub fn step_size_warning(method: Method, problem: &ProblemInstance, cfg: &SolverConfig) -> Option<String> {
    let mu = problem.lip.mu;
    let g = cfg.gamma;
    let outside = |bound: f64, what: &str| {
        (g >= bound).then(|| format!("{method}: gamma = {g} is not below {what} = {bound}"))
    };
    match method {
        Method::Fbf => outside(1.0 / mu, "1/mu"),
        Method::Frb => outside(0.5 / mu, "1/(2 mu)"),
        Method::Frdr => {
            let beta = cfg.beta?;
            outside(beta / (1.0 + 2.0 * mu * beta), "beta/(1 + 2 mu beta)")
        }
        Method::Fdrf => match (problem.lip.kappa, &problem.b) {
            (Some(k), _) => outside(k.min((2.0_f64 / 3.0).sqrt() / mu), "min(kappa, sqrt(2/3)/mu)"),
            (None, OperatorSpec::NormalConeSubspace { .. }) => outside(1.0 / mu, "1/mu"),
            (None, OperatorSpec::Zero) => outside(1.0 / mu, "1/mu"),
            (None, _) => Some(format!(
                "fdrf: B is neither cocoercive nor a normal cone, so no step size is known to converge"
            )),
        },
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Converged,
    Diverged,
    MaxIter,
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Converged => "Converged",
            RunStatus::Diverged => "Diverged",
            RunStatus::MaxIter => "MaxIter",
            RunStatus::Failed => "Failed",
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions<'a> {
    /// Record `dist_to_zero` of the primal estimate at every row.
    pub track_dist: bool,
    /// Record `V_n`, `S_n` (FRDR only).
    pub lyapunov: Option<&'a LyapunovMonitor>,
}

/// One trace row. Row 0 is the initial state and has no residual. `v` is
/// filled at row `n` once `(x_n, u_n)` is known; `s` and `decrease_slack`
/// need `(x_{n+1}, u_{n+1})` and stay empty on the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub residual: Option<f64>,
    pub iterate_norm: f64,
    pub dist_to_zero: Option<f64>,
    pub v: Option<f64>,
    pub s: Option<f64>,
    pub decrease_slack: Option<f64>,
    pub cum_c_evals: usize,
    pub wall_ns: u128,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub method: Method,
    pub problem_tag: String,
    pub status: RunStatus,
    pub iters: usize,
    pub rows: Vec<TraceRow>,
    pub final_state: SolverState,
    pub error: Option<Error>,
}

impl RunTrace {
    pub fn total_c_evals(&self) -> usize {
        self.rows.last().map_or(0, |r| r.cum_c_evals)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.residual)
    }
}

/// The primal point whose inclusion residual is reported.
fn primal_estimate(ops: &Operators, cfg: &SolverConfig, s: &SolverState) -> Result<Point> {
    let g = cfg.gamma;
    match s {
        SolverState::Dr(DrState { z }) | SolverState::Fdrf(FdrfState { z }) => ops.b.resolvent(g, z),
        SolverState::Ba(BaState { z }) => {
            let kz = ops.b.resolvent(g, &ops.c.forward(&ops.b.resolvent(g, z)?)?)?;
            ops.a.resolvent(g, &(z - &(g * &kz)))
        }
        SolverState::Je(JeState { z, .. }) => Ok(z.clone()),
        SolverState::Fbf(FbfState { x })
        | SolverState::Frb(FrbState { x, .. })
        | SolverState::Frdr(FrdrState { x, .. })
        | SolverState::Cp(CpState { x, .. })
        | SolverState::Mt(MtState { x, .. }) => Ok(x.clone()),
    }
}

/// Iterates until the step residual is at most `tol` (`Converged`), the
/// iterate norm reaches `blowup * (1 + initial norm)` or stops being finite
/// (`Diverged`), `max_iter` steps were taken (`MaxIter`), or a step fails
/// (`Failed`, with the error kept in the trace).
pub fn run(
    method: Method,
    problem: &ProblemInstance,
    cfg: &SolverConfig,
    init: SolverState,
    opts: &RunOptions<'_>,
) -> RunTrace {
    let start = Instant::now();
    let problem_tag = problem.tags.first().cloned().unwrap_or_else(|| "untagged".into());
    let mut trace = RunTrace {
        method,
        problem_tag,
        status: RunStatus::Failed,
        iters: 0,
        rows: Vec::new(),
        final_state: init.clone(),
        error: None,
    };
    let prepared = cfg
        .validate()
        .and_then(|_| {
            if init.method() == method {
                Ok(())
            } else {
                Err(mismatch(method, &init))
            }
        })
        .and_then(|_| Operators::prepare(problem, method, cfg));
    let ops = match prepared {
        Ok(o) => o,
        Err(e) => {
            trace.error = Some(e);
            return trace;
        }
    };
    if let Some(w) = step_size_warning(method, problem, cfg) {
        log::warn!("{w}");
    }
    let lyap = opts.lyapunov.filter(|_| method == Method::Frdr);
    let dist = |s: &SolverState| {
        if !opts.track_dist {
            return None;
        }
        primal_estimate(&ops, cfg, s)
            .and_then(|x| dist_to_zero(problem, &x))
            .ok()
    };
    let frdr = |s: &SolverState| match s {
        SolverState::Frdr(f) => Some(f.clone()),
        _ => None,
    };

    let init_norm = init.iterate_norm();
    let limit = cfg.blowup * (1.0 + init_norm);
    trace.rows.push(TraceRow {
        iter: 0,
        residual: None,
        iterate_norm: init_norm,
        dist_to_zero: dist(&init),
        v: None,
        s: None,
        decrease_slack: None,
        cum_c_evals: 0,
        wall_ns: start.elapsed().as_nanos(),
    });
    // (x_{n-1}, u_{n-1}) and (x_n, u_n) for the Lyapunov columns
    let mut history = frdr(&init).map(|s| (s.clone(), s));
    if let (Some(m), Some((p, c))) = (lyap, &history) {
        trace.rows[0].v = m.v(p, c).ok();
    }

    let mut state = init;
    let mut cum = 0;
    trace.status = RunStatus::MaxIter;
    for n in 1..=cfg.max_iter {
        let report = match step(method, &ops, cfg, &state) {
            Ok(r) => r,
            Err(e) => {
                trace.status = RunStatus::Failed;
                trace.error = Some(e);
                break;
            }
        };
        cum += report.c_evals;
        state = report.state_next;
        trace.iters = n;
        let norm = state.iterate_norm();
        let mut row = TraceRow {
            iter: n,
            residual: Some(report.residual),
            iterate_norm: norm,
            dist_to_zero: dist(&state),
            v: None,
            s: None,
            decrease_slack: None,
            cum_c_evals: cum,
            wall_ns: 0,
        };
        if let (Some(m), Some((prev, curr)), Some(next)) = (lyap, history.as_mut(), frdr(&state)) {
            if let Ok(rec) = m.record(prev, curr, &next) {
                let last = trace.rows.last_mut().expect("row 0 exists");
                last.s = Some(rec.s);
                last.decrease_slack = Some(rec.decrease_slack);
            }
            row.v = m.v(curr, &next).ok();
            *prev = std::mem::replace(curr, next);
        }
        row.wall_ns = start.elapsed().as_nanos();
        trace.rows.push(row);
        if !state.is_finite() || norm >= limit {
            trace.status = RunStatus::Diverged;
            break;
        }
        if report.residual <= cfg.tol {
            trace.status = RunStatus::Converged;
            break;
        }
    }
    trace.final_state = state;
    trace
}
