//! Lyapunov function of FRDR in the metric
//! `||(x, u)||^2 = (1/g)||x||^2 - 2<x, u> + b||u||^2`.

use crate::error::{Error, Result};
use crate::ops::Operator;
use crate::point::Point;
use crate::problems::{KnownSolution, ProblemInstance, SOLUTION_TOL};
use crate::solvers::FrdrState;

/// The metric on pairs `(x, u)`. Its 2x2 block `[[1/g, -1], [-1, b]]` is
/// positive definite exactly when `g < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PDNorm {
    pub gamma: f64,
    pub beta: f64,
}

impl PDNorm {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        let n = PDNorm { gamma, beta };
        n.check()?;
        Ok(n)
    }

    fn check(&self) -> Result<()> {
        let ok = self.gamma > 0.0 && self.gamma.is_finite() && self.beta.is_finite() && self.gamma < self.beta;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMetric {
                gamma: self.gamma,
                beta: self.beta,
            })
        }
    }

    /// Smallest eigenvalue of `[[1/g, -1], [-1, b]]`.
    pub fn min_eigenvalue(&self) -> f64 {
        let (p, q) = (1.0 / self.gamma, self.beta);
        let mean = 0.5 * (p + q);
        let rad = (0.25 * (p - q).powi(2) + 1.0).sqrt();
        mean - rad
    }

    fn sq_unchecked(&self, x: &Point, u: &Point) -> f64 {
        x.norm_squared() / self.gamma - 2.0 * x.dot(u) + self.beta * u.norm_squared()
    }
}

/// `(1/g)||x||^2 - 2<x, u> + b||u||^2`.
pub fn pd_norm_sq(n: &PDNorm, x: &Point, u: &Point) -> Result<f64> {
    n.check()?;
    u.check_dim(x.dim())?;
    Ok(n.sq_unchecked(x, u))
}

/// `V_n`, `S_n` and `V_n - V_{n+1} - c S_n` with
/// `c = (b - g - 2 mu g b) / (2(b - g))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovRecord {
    pub v: f64,
    pub s: f64,
    pub decrease_slack: f64,
}

/// Evaluates the Lyapunov quantities along FRDR trajectories for a fixed,
/// verified primal-dual solution.
#[derive(Debug, Clone)]
pub struct LyapunovMonitor {
    c: Operator,
    star: KnownSolution,
    mu: f64,
    norm: PDNorm,
}

impl LyapunovMonitor {
    /// Fails with `NotASolution` unless `u* in Ax*` and `-u* in (B + C)x*`
    /// hold to [`SOLUTION_TOL`].
    pub fn new(problem: &ProblemInstance, star: KnownSolution, norm: PDNorm) -> Result<Self> {
        norm.check()?;
        let defect = problem.solution_defect(&star.x, &star.u)?;
        if !(defect <= SOLUTION_TOL) {
            return Err(Error::NotASolution(defect));
        }
        Ok(LyapunovMonitor {
            c: Operator::new(problem.c.clone(), problem.dim),
            star,
            mu: problem.lip.mu,
            norm,
        })
    }

    pub fn norm(&self) -> PDNorm {
        self.norm
    }

    pub fn star(&self) -> &KnownSolution {
        &self.star
    }

    /// The constant `c` multiplying `S_n`.
    pub fn decrease_constant(&self) -> f64 {
        let PDNorm { gamma: g, beta: b } = self.norm;
        (b - g - 2.0 * self.mu * g * b) / (2.0 * (b - g))
    }

    fn diff_sq(&self, p: &FrdrState, q: &FrdrState) -> f64 {
        self.norm.sq_unchecked(&(&p.x - &q.x), &(&p.u - &q.u))
    }

    /// `V_n` from `(x_{n-1}, u_{n-1})` and `(x_n, u_n)`.
    pub fn v(&self, prev: &FrdrState, curr: &FrdrState) -> Result<f64> {
        let to_star = self
            .norm
            .sq_unchecked(&(&curr.x - &self.star.x), &(&curr.u - &self.star.u));
        let dc = &self.c.forward(&curr.x)? - &self.c.forward(&prev.x)?;
        Ok(to_star + 0.5 * self.diff_sq(curr, prev) + 2.0 * dc.dot(&(&self.star.x - &curr.x)))
    }

    /// `S_n`.
    pub fn s(&self, prev: &FrdrState, curr: &FrdrState, next: &FrdrState) -> f64 {
        0.5 * self.diff_sq(curr, next) + 0.5 * self.diff_sq(curr, prev)
    }

    /// `(1/2)||(x_n, u_n) - (x*, u*)||^2`, the lower bound for `V_n` in the
    /// valid step range.
    pub fn lower_bound(&self, curr: &FrdrState) -> f64 {
        0.5 * self
            .norm
            .sq_unchecked(&(&curr.x - &self.star.x), &(&curr.u - &self.star.u))
    }

    pub fn record(&self, prev: &FrdrState, curr: &FrdrState, next: &FrdrState) -> Result<LyapunovRecord> {
        for p in [prev, curr, next] {
            p.x.check_dim(self.c.dim())?;
            p.u.check_dim(self.c.dim())?;
        }
        let v = self.v(prev, curr)?;
        let v_next = self.v(curr, next)?;
        let s = self.s(prev, curr, next);
        Ok(LyapunovRecord {
            v,
            s,
            decrease_slack: v - v_next - self.decrease_constant() * s,
        })
    }
}

/// One-shot form of [`LyapunovMonitor::record`].
pub fn lyapunov(
    problem: &ProblemInstance,
    star: KnownSolution,
    norm: PDNorm,
    prev: &FrdrState,
    curr: &FrdrState,
    next: &FrdrState,
) -> Result<LyapunovRecord> {
    LyapunovMonitor::new(problem, star, norm)?.record(prev, curr, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::build_random_general;
    use crate::solvers::{frdr_step, SolverConfig};

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn norm_examples() {
        let n = PDNorm::new(0.5, 2.0).unwrap();
        assert_eq!(pd_norm_sq(&n, &pt(&[1.0, 0.0]), &pt(&[1.0, 0.0])).unwrap(), 2.0);
        assert_eq!(pd_norm_sq(&n, &Point::zeros(2), &Point::zeros(2)).unwrap(), 0.0);
        assert!(matches!(PDNorm::new(1.0, 1.0), Err(Error::InvalidMetric { .. })));
        assert!(matches!(PDNorm::new(2.0, 1.0), Err(Error::InvalidMetric { .. })));
        let bad = PDNorm { gamma: 2.0, beta: 1.0 };
        assert!(pd_norm_sq(&bad, &Point::zeros(1), &Point::zeros(1)).is_err());
    }

    #[test]
    fn block_eigenvalue_sign_tracks_metric_validity() {
        assert!(PDNorm::new(0.4, 1.0).unwrap().min_eigenvalue() > 0.0);
        assert!(PDNorm { gamma: 1.0, beta: 1.0 }.min_eigenvalue().abs() < 1e-15);
        assert!(PDNorm { gamma: 2.0, beta: 1.0 }.min_eigenvalue() < 0.0);
    }

    #[test]
    fn stationary_trajectory_is_zero() {
        let p = build_random_general(3, 0.5, 1).unwrap();
        let star = p.known_solution.clone().unwrap();
        let s = FrdrState {
            x: star.x.clone(),
            x_prev: star.x.clone(),
            u: star.u.clone(),
            c_prev: Point::zeros(3),
        };
        let r = lyapunov(&p, star, PDNorm::new(0.3, 1.0).unwrap(), &s, &s, &s).unwrap();
        assert!(r.v.abs() < 1e-20 && r.s.abs() < 1e-20 && r.decrease_slack.abs() < 1e-20);
    }

    #[test]
    fn rejects_non_solution() {
        let p = build_random_general(3, 0.5, 1).unwrap();
        let mut star = p.known_solution.clone().unwrap();
        star.u = &star.u + &pt(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            LyapunovMonitor::new(&p, star, PDNorm::new(0.3, 1.0).unwrap()),
            Err(Error::NotASolution(_))
        ));
    }

    #[test]
    fn decrease_along_frdr_run() {
        let p = build_random_general(5, 1.3, 2).unwrap();
        let (beta, mu) = (1.0, p.lip.mu);
        let gamma = 0.99 * beta / (1.0 + 2.0 * mu * beta);
        let mon = LyapunovMonitor::new(&p, p.known_solution.clone().unwrap(), PDNorm::new(gamma, beta).unwrap()).unwrap();
        let a = Operator::new(p.a.clone(), 5);
        let b = Operator::new(p.b.clone(), 5);
        let c = Operator::new(p.c.clone(), 5);
        let cfg = SolverConfig::new(gamma).with_beta(beta);
        let x0 = pt(&[1.0, -2.0, 0.5, 3.0, 0.0]);
        let s0 = FrdrState {
            x: x0.clone(),
            x_prev: x0.clone(),
            u: Point::zeros(5),
            c_prev: c.forward(&x0).unwrap(),
        };
        let (mut prev, mut curr) = (s0.clone(), s0);
        for _ in 0..200 {
            let next = frdr_step(&a, &b, &c, &cfg, &curr).unwrap().state_next;
            let r = mon.record(&prev, &curr, &next).unwrap();
            assert!(r.decrease_slack >= -1e-9, "{r:?}");
            assert!(r.v >= mon.lower_bound(&curr) - 1e-9);
            prev = curr;
            curr = next;
        }
    }
}
