//! Splitting iterations as pure state transitions, plus a driver.
//!
//! Each `*_step` takes prepared [`Operator`]s, a [`SolverConfig`] and the
//! method's state, and returns a [`StepReport`] holding the next state, a
//! method-native residual that vanishes exactly at fixed points, the named
//! intermediate points, and the number of forward evaluations of `C`.

mod classic;
mod driver;
mod primal_dual;
mod proposed;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ops::Operator;
use crate::point::Point;

pub use classic::{dr_step, fbf_step, frb_step};
pub use driver::{
    default_config, initial_state, run, step, step_size_warning, Operators, RunOptions, RunStatus,
    RunTrace, TraceRow,
};
pub use primal_dual::{
    ba_fpif_step, ba_fpif_step_literal, cp_pd_step, je_ps_step, mt_pd_step, JeIntermediates,
};
pub use proposed::{fdrf_step, frdr_step};

pub const DEFAULT_BLOWUP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    /// Dual step of FRDR.
    pub beta: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    /// Divergence is declared once the iterate norm reaches
    /// `blowup * (1 + initial norm)`.
    pub blowup: f64,
    /// Constant `alpha_n` for the projective-splitting step when driven by [`run`].
    pub je_alpha: Option<f64>,
}

impl SolverConfig {
    pub fn new(gamma: f64) -> Self {
        SolverConfig {
            gamma,
            beta: None,
            max_iter: 10_000,
            tol: 1e-8,
            blowup: DEFAULT_BLOWUP,
            je_alpha: None,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_blowup(mut self, blowup: f64) -> Self {
        self.blowup = blowup;
        self
    }

    pub fn with_je_alpha(mut self, alpha: f64) -> Self {
        self.je_alpha = Some(alpha);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("gamma", self.gamma)?;
        if let Some(b) = self.beta {
            positive("beta", b)?;
        }
        positive("tol", self.tol)?;
        positive("blowup", self.blowup)?;
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn require_beta(&self) -> Result<f64> {
        match self.beta {
            Some(b) if b > 0.0 && b.is_finite() => Ok(b),
            Some(b) => Err(Error::InvalidParameter(format!("beta must be positive, got {b}"))),
            None => Err(Error::InvalidParameter("FRDR requires beta".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Dr,
    Fbf,
    Frb,
    Fdrf,
    Frdr,
    CombettesPesquet,
    MalitskyTam,
    BricenoArias,
    JohnstoneEckstein,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Dr,
        Method::Fbf,
        Method::Frb,
        Method::Fdrf,
        Method::Frdr,
        Method::CombettesPesquet,
        Method::MalitskyTam,
        Method::BricenoArias,
        Method::JohnstoneEckstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dr => "dr",
            Method::Fbf => "fbf",
            Method::Frb => "frb",
            Method::Fdrf => "fdrf",
            Method::Frdr => "frdr",
            Method::CombettesPesquet => "cp",
            Method::MalitskyTam => "mt",
            Method::BricenoArias => "ba",
            Method::JohnstoneEckstein => "je",
        }
    }

    /// Whether the method uses the dual step `beta`.
    pub fn uses_beta(self) -> bool {
        self == Method::Frdr
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrState {
    pub z: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbfState {
    pub x: Point,
}

/// `c_prev` caches `C x_prev`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrbState {
    pub x: Point,
    pub x_prev: Point,
    pub c_prev: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdrfState {
    pub z: Point,
}

/// `c_prev` caches `C x_prev`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrdrState {
    pub x: Point,
    pub x_prev: Point,
    pub u: Point,
    pub c_prev: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpState {
    pub x: Point,
    pub u: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtState {
    pub x: Point,
    pub x_prev: Point,
    pub u: Point,
    pub u_prev: Point,
    pub c_prev: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaState {
    pub z: Point,
}

/// `x_c` is the previous forward point `x^C_n`, which the dual updates
/// reference.
#[derive(Debug, Clone, PartialEq)]
pub struct JeState {
    pub z: Point,
    pub w_a: Point,
    pub w_b: Point,
    pub w_c: Point,
    pub x_c: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverState {
    Dr(DrState),
    Fbf(FbfState),
    Frb(FrbState),
    Fdrf(FdrfState),
    Frdr(FrdrState),
    Cp(CpState),
    Mt(MtState),
    Ba(BaState),
    Je(JeState),
}

impl SolverState {
    pub fn method(&self) -> Method {
        match self {
            SolverState::Dr(_) => Method::Dr,
            SolverState::Fbf(_) => Method::Fbf,
            SolverState::Frb(_) => Method::Frb,
            SolverState::Fdrf(_) => Method::Fdrf,
            SolverState::Frdr(_) => Method::Frdr,
            SolverState::Cp(_) => Method::CombettesPesquet,
            SolverState::Mt(_) => Method::MalitskyTam,
            SolverState::Ba(_) => Method::BricenoArias,
            SolverState::Je(_) => Method::JohnstoneEckstein,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SolverState::Dr(s) => s.z.dim(),
            SolverState::Fbf(s) => s.x.dim(),
            SolverState::Frb(s) => s.x.dim(),
            SolverState::Fdrf(s) => s.z.dim(),
            SolverState::Frdr(s) => s.x.dim(),
            SolverState::Cp(s) => s.x.dim(),
            SolverState::Mt(s) => s.x.dim(),
            SolverState::Ba(s) => s.z.dim(),
            SolverState::Je(s) => s.z.dim(),
        }
    }

    /// Norm of the method's driving iterate: `z` for the DR-type methods,
    /// `x` for FBF/FRB, `||(x, u)||` for the primal-dual ones.
    pub fn iterate_norm(&self) -> f64 {
        let pair = |x: &Point, u: &Point| (x.norm_squared() + u.norm_squared()).sqrt();
        match self {
            SolverState::Dr(s) => s.z.norm(),
            SolverState::Fbf(s) => s.x.norm(),
            SolverState::Frb(s) => s.x.norm(),
            SolverState::Fdrf(s) => s.z.norm(),
            SolverState::Frdr(s) => pair(&s.x, &s.u),
            SolverState::Cp(s) => pair(&s.x, &s.u),
            SolverState::Mt(s) => pair(&s.x, &s.u),
            SolverState::Ba(s) => s.z.norm(),
            SolverState::Je(s) => s.z.norm(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            SolverState::Dr(s) => s.z.is_finite(),
            SolverState::Fbf(s) => s.x.is_finite(),
            SolverState::Frb(s) => s.x.is_finite() && s.c_prev.is_finite(),
            SolverState::Fdrf(s) => s.z.is_finite(),
            SolverState::Frdr(s) => s.x.is_finite() && s.u.is_finite() && s.c_prev.is_finite(),
            SolverState::Cp(s) => s.x.is_finite() && s.u.is_finite(),
            SolverState::Mt(s) => s.x.is_finite() && s.u.is_finite() && s.c_prev.is_finite(),
            SolverState::Ba(s) => s.z.is_finite(),
            SolverState::Je(s) => {
                s.z.is_finite() && s.w_a.is_finite() && s.w_b.is_finite() && s.x_c.is_finite()
            }
        }
    }
}

/// Result of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<S> {
    pub state_next: S,
    pub residual: f64,
    pub aux_points: BTreeMap<&'static str, Point>,
    pub c_evals: usize,
}

impl<S> StepReport<S> {
    pub fn aux(&self, name: &str) -> Option<&Point> {
        self.aux_points.get(name)
    }

    pub(crate) fn map_state<T>(self, f: impl FnOnce(S) -> T) -> StepReport<T> {
        StepReport {
            state_next: f(self.state_next),
            residual: self.residual,
            aux_points: self.aux_points,
            c_evals: self.c_evals,
        }
    }
}

/// Counts forward evaluations of `C` within one step.
pub(crate) struct CountingForward<'a> {
    op: &'a Operator,
    pub calls: usize,
}

impl<'a> CountingForward<'a> {
    pub fn new(op: &'a Operator) -> Self {
        CountingForward { op, calls: 0 }
    }

    pub fn eval(&mut self, x: &Point) -> Result<Point> {
        self.calls += 1;
        self.op.forward(x)
    }
}

pub(crate) fn check_dims(dim: usize, points: &[&Point]) -> Result<()> {
    points.iter().try_for_each(|p| p.check_dim(dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.5).validate().is_ok());
        assert!(SolverConfig::new(0.0).validate().is_err());
        assert!(SolverConfig::new(0.5).with_beta(-1.0).validate().is_err());
        assert!(SolverConfig::new(0.5).with_tol(0.0).validate().is_err());
        assert!(SolverConfig::new(0.5).with_max_iter(0).validate().is_err());
        assert!(SolverConfig::new(0.5).require_beta().is_err());
    }
}
