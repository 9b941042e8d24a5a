//! The two three-operator methods built on Douglas-Rachford.
//!
//! FDRF adds Tseng's correction to DR and evaluates `C` twice per step. It
//! converges when `B` is cocoercive or `B = N_V` with `C = P_V C_1 P_V`, but
//! not in general. FRDR adds the forward-reflected correction instead and
//! converges for every monotone Lipschitz `C` when `0 < gamma < beta / (1 +
//! 2 mu beta)`, at one evaluation of `C` per step.

use std::collections::BTreeMap;

use super::{check_dims, CountingForward, FdrfState, FrdrState, SolverConfig, StepReport};
use crate::error::Result;
use crate::ops::Operator;

/// ```text
/// x+ = J_{gB} z
/// y+ = J_{gA}(2x+ - z - g Cx+)
/// z+ = z + y+ - x+ - g(Cy+ - Cx+)
/// ```
/// Residual `||x+ - y+||`; aux points `x`, `y`.
pub fn fdrf_step(
    a: &Operator,
    b: &Operator,
    c: &Operator,
    cfg: &SolverConfig,
    s: &FdrfState,
) -> Result<StepReport<FdrfState>> {
    check_dims(a.dim(), &[&s.z])?;
    let g = cfg.gamma;
    let mut cf = CountingForward::new(c);
    let x = b.resolvent(g, &s.z)?;
    let cx = cf.eval(&x)?;
    let y = a.resolvent(g, &(&(&(2.0 * &x) - &s.z) - &(g * &cx)))?;
    let cy = cf.eval(&y)?;
    let z = &(&(&s.z + &y) - &x) - &(g * &(&cy - &cx));
    Ok(StepReport {
        residual: x.dist(&y),
        aux_points: BTreeMap::from([("x", x), ("y", y)]),
        state_next: FdrfState { z },
        c_evals: cf.calls,
    })
}

/// ```text
/// x+ = J_{gB}(x - g u - g(2Cx - Cx_prev))
/// y+ = J_{bA}(2x+ - x + b u)
/// u+ = u + (2x+ - x - y+) / b
/// ```
/// with `g = cfg.gamma`, `b = cfg.beta`. Residual `||x+ - x|| + b ||u+ - u||`;
/// aux point `y`.
pub fn frdr_step(
    a: &Operator,
    b: &Operator,
    c: &Operator,
    cfg: &SolverConfig,
    s: &FrdrState,
) -> Result<StepReport<FrdrState>> {
    check_dims(a.dim(), &[&s.x, &s.x_prev, &s.u, &s.c_prev])?;
    let g = cfg.gamma;
    let beta = cfg.require_beta()?;
    let mut cf = CountingForward::new(c);
    let cx = cf.eval(&s.x)?;
    let reflected = &(2.0 * &cx) - &s.c_prev;
    let x = b.resolvent(g, &(&(&s.x - &(g * &s.u)) - &(g * &reflected)))?;
    let lifted = &(2.0 * &x) - &s.x;
    let y = a.resolvent(beta, &(&lifted + &(beta * &s.u)))?;
    let u = &s.u + &((1.0 / beta) * &(&lifted - &y));
    Ok(StepReport {
        residual: x.dist(&s.x) + beta * u.dist(&s.u),
        aux_points: BTreeMap::from([("y", y)]),
        state_next: FrdrState {
            x,
            x_prev: s.x.clone(),
            u,
            c_prev: cx,
        },
        c_evals: cf.calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::OperatorSpec;
    use crate::point::Point;
    use crate::problems::{build_counterexample, CounterexampleParams};
    use crate::solvers::{dr_step, fbf_step, frb_step, DrState, FbfState, FrbState};
    use nalgebra::DMatrix;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn affine(m: &[f64], b: &[f64]) -> Operator {
        Operator::new(
            OperatorSpec::Affine {
                m: DMatrix::from_row_slice(2, 2, m),
                b: pt(b),
            },
            2,
        )
    }

    fn skew(c: f64) -> Operator {
        Operator::new(
            OperatorSpec::Skew {
                m: DMatrix::from_row_slice(2, 2, &[0.0, c, -c, 0.0]),
            },
            2,
        )
    }

    #[test]
    fn fdrf_without_c_is_dr() {
        let a = affine(&[2.0, 1.0, -1.0, 1.0], &[0.3, -0.2]);
        let b = affine(&[1.0, 0.5, -0.5, 3.0], &[1.0, 2.0]);
        let zero = Operator::new(OperatorSpec::Zero, 2);
        let cfg = SolverConfig::new(0.7);
        let z = pt(&[0.4, -1.3]);
        let f = fdrf_step(&a, &b, &zero, &cfg, &FdrfState { z: z.clone() }).unwrap();
        let d = dr_step(&a, &b, &cfg, &DrState { z }).unwrap();
        assert_eq!(f.state_next.z, d.state_next.z);
        assert_eq!(f.residual, d.residual);
    }

    #[test]
    fn fdrf_without_b_is_fbf() {
        let a = affine(&[2.0, 1.0, -1.0, 1.0], &[0.3, -0.2]);
        let zero = Operator::new(OperatorSpec::Zero, 2);
        let c = skew(0.8);
        let cfg = SolverConfig::new(0.5);
        let z = pt(&[0.4, -1.3]);
        let f = fdrf_step(&a, &zero, &c, &cfg, &FdrfState { z: z.clone() }).unwrap();
        let g = fbf_step(&a, &c, &cfg, &FbfState { x: z }).unwrap();
        assert!(f.state_next.z.dist(&g.state_next.x) < 1e-15);
        assert_eq!(f.c_evals, 2);
    }

    #[test]
    fn fdrf_counterexample_step_doubles_squared_norm() {
        let p = CounterexampleParams::new(1.0, 1.0, std::f64::consts::FRAC_PI_2).unwrap();
        let inst = build_counterexample(p).unwrap();
        let a = Operator::new(inst.a.clone(), 2);
        let b = Operator::new(inst.b.clone(), 2);
        let c = Operator::new(inst.c.clone(), 2);
        let z = pt(&[1.0, 0.0]);
        let r = fdrf_step(&a, &b, &c, &SolverConfig::new(1.0), &FdrfState { z }).unwrap();
        // T = [[1, 1], [-1, 1]] at these parameters
        assert!(r.state_next.z.dist(&pt(&[1.0, -1.0])) < 1e-14);
        assert!((r.state_next.z.norm_squared() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn frdr_without_a_is_frb() {
        let zero = Operator::new(OperatorSpec::Zero, 2);
        let b = affine(&[2.0, 1.0, -1.0, 1.0], &[0.3, -0.2]);
        let c = skew(0.6);
        let cfg = SolverConfig::new(0.3).with_beta(2.0);
        let x0 = pt(&[1.0, 2.0]);
        let c0 = c.forward(&x0).unwrap();
        let mut fr = FrdrState {
            x: x0.clone(),
            x_prev: x0.clone(),
            u: Point::zeros(2),
            c_prev: c0.clone(),
        };
        let mut fb = FrbState {
            x: x0.clone(),
            x_prev: x0,
            c_prev: c0,
        };
        for _ in 0..10 {
            let r1 = frdr_step(&zero, &b, &c, &cfg, &fr).unwrap();
            let r2 = frb_step(&b, &c, &cfg, &fb).unwrap();
            assert_eq!(r1.c_evals, 1);
            fr = r1.state_next;
            fb = r2.state_next;
            assert!(fr.x.dist(&fb.x) < 1e-14);
            assert!(fr.u.norm() < 1e-14);
        }
    }

    #[test]
    fn frdr_without_c_and_equal_steps_is_dr() {
        let a = affine(&[2.0, 1.0, -1.0, 1.0], &[0.3, -0.2]);
        let b = affine(&[1.0, 0.5, -0.5, 3.0], &[1.0, 2.0]);
        let zero = Operator::new(OperatorSpec::Zero, 2);
        let g = 0.45;
        let cfg = SolverConfig::new(g).with_beta(g);
        let x0 = pt(&[1.0, -1.0]);
        let u0 = pt(&[0.2, 0.1]);
        let mut fr = FrdrState {
            x: x0.clone(),
            x_prev: x0.clone(),
            u: u0.clone(),
            c_prev: Point::zeros(2),
        };
        let mut dr = DrState {
            z: &x0 - &(g * &u0),
        };
        for _ in 0..20 {
            fr = frdr_step(&a, &b, &zero, &cfg, &fr).unwrap().state_next;
            dr = dr_step(&a, &b, &cfg, &dr).unwrap().state_next;
            let z = &fr.x - &(g * &fr.u);
            assert!(z.dist(&dr.z) < 1e-13);
        }
    }

    #[test]
    fn frdr_stationary_at_solution() {
        let inst = crate::problems::build_random_general(4, 0.5, 9).unwrap();
        let sol = inst.known_solution.clone().unwrap();
        let a = Operator::new(inst.a.clone(), 4);
        let b = Operator::new(inst.b.clone(), 4);
        let c = Operator::new(inst.c.clone(), 4);
        let s = FrdrState {
            x: sol.x.clone(),
            x_prev: sol.x.clone(),
            u: sol.u.clone(),
            c_prev: c.forward(&sol.x).unwrap(),
        };
        let r = frdr_step(&a, &b, &c, &SolverConfig::new(0.2).with_beta(1.0), &s).unwrap();
        assert!(r.residual <= 1e-10);
        assert!(r.state_next.x.dist(&sol.x) <= 1e-10);
        assert!(r.state_next.u.dist(&sol.u) <= 1e-10);
    }

    #[test]
    fn frdr_requires_beta() {
        let zero = Operator::new(OperatorSpec::Zero, 2);
        let s = FrdrState {
            x: Point::zeros(2),
            x_prev: Point::zeros(2),
            u: Point::zeros(2),
            c_prev: Point::zeros(2),
        };
        assert!(frdr_step(&zero, &zero, &zero, &SolverConfig::new(0.5), &s).is_err());
    }
}
