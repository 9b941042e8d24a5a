//! Two-operator parent methods: Douglas-Rachford, Tseng's
//! forward-backward-forward, and forward-reflected-backward.

use std::collections::BTreeMap;

use super::{check_dims, CountingForward, DrState, FbfState, FrbState, SolverConfig, StepReport};
use crate::error::Result;
use crate::ops::Operator;

/// ```text
/// x+ = J_{gB} z
/// y+ = J_{gA}(2x+ - z)
/// z+ = z + y+ - x+
/// ```
/// Residual `||y+ - x+||`.
pub fn dr_step(a: &Operator, b: &Operator, cfg: &SolverConfig, s: &DrState) -> Result<StepReport<DrState>> {
    check_dims(a.dim(), &[&s.z])?;
    let g = cfg.gamma;
    let x = b.resolvent(g, &s.z)?;
    let y = a.resolvent(g, &(&(2.0 * &x) - &s.z))?;
    let z = &(&s.z + &y) - &x;
    Ok(StepReport {
        residual: y.dist(&x),
        aux_points: BTreeMap::from([("x", x), ("y", y)]),
        state_next: DrState { z },
        c_evals: 0,
    })
}

/// ```text
/// y+ = J_{gA}(x - g Cx)
/// x+ = y+ - g(Cy+ - Cx)
/// ```
/// Residual `||y+ - x||`.
pub fn fbf_step(a: &Operator, c: &Operator, cfg: &SolverConfig, s: &FbfState) -> Result<StepReport<FbfState>> {
    check_dims(a.dim(), &[&s.x])?;
    let g = cfg.gamma;
    let mut cf = CountingForward::new(c);
    let cx = cf.eval(&s.x)?;
    let y = a.resolvent(g, &(&s.x - &(g * &cx)))?;
    let cy = cf.eval(&y)?;
    let x = &y - &(g * &(&cy - &cx));
    Ok(StepReport {
        residual: y.dist(&s.x),
        aux_points: BTreeMap::from([("y", y)]),
        state_next: FbfState { x },
        c_evals: cf.calls,
    })
}

/// ```text
/// x+ = J_{gA}(x - g(2Cx - Cx_prev))
/// ```
/// `C x_prev` comes from the cache, so one evaluation per step. Residual
/// `||x+ - x||`.
pub fn frb_step(a: &Operator, c: &Operator, cfg: &SolverConfig, s: &FrbState) -> Result<StepReport<FrbState>> {
    check_dims(a.dim(), &[&s.x, &s.x_prev, &s.c_prev])?;
    let g = cfg.gamma;
    let mut cf = CountingForward::new(c);
    let cx = cf.eval(&s.x)?;
    let reflected = &(2.0 * &cx) - &s.c_prev;
    let x = a.resolvent(g, &(&s.x - &(g * &reflected)))?;
    Ok(StepReport {
        residual: x.dist(&s.x),
        aux_points: BTreeMap::new(),
        state_next: FrbState {
            x,
            x_prev: s.x.clone(),
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
    use nalgebra::DMatrix;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn op(spec: OperatorSpec) -> Operator {
        Operator::new(spec, 2)
    }

    fn rot() -> OperatorSpec {
        OperatorSpec::Skew {
            m: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        }
    }

    fn close(a: &Point, b: &[f64]) -> bool {
        a.coords().iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14)
    }

    #[test]
    fn dr_with_zero_operators_is_stationary() {
        let zero = op(OperatorSpec::Zero);
        let r = dr_step(&zero, &zero, &SolverConfig::new(1.0), &DrState { z: pt(&[5.0, -2.0]) }).unwrap();
        assert_eq!(r.state_next.z, pt(&[5.0, -2.0]));
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.c_evals, 0);
    }

    #[test]
    fn dr_hand_evaluated() {
        // x = P(2,0) = (1,1); y = 2x - z = (0,2); z' = z + y - x = (1,1)
        let a = op(OperatorSpec::Zero);
        let b = op(OperatorSpec::NormalConeSubspace {
            p: DMatrix::from_element(2, 2, 0.5),
        });
        let r = dr_step(&a, &b, &SolverConfig::new(1.0), &DrState { z: pt(&[2.0, 0.0]) }).unwrap();
        assert!(close(r.aux("x").unwrap(), &[1.0, 1.0]));
        assert!(close(r.aux("y").unwrap(), &[0.0, 2.0]));
        assert!(close(&r.state_next.z, &[1.0, 1.0]));
    }

    #[test]
    fn dr_fixed_point() {
        // A = N_V (diagonal), B = Id shifted: zero at the point of V where
        // x + b = -n with n normal to V.
        let a = op(OperatorSpec::NormalConeSubspace {
            p: DMatrix::from_element(2, 2, 0.5),
        });
        let b = op(OperatorSpec::Affine {
            m: DMatrix::identity(2, 2),
            b: pt(&[-1.0, -3.0]),
        });
        // zero: x = (2,2), Bx = (1,-1) which is normal to V, so -Bx in N_V(x).
        // DR fixed point z = x + g Bx with g = 1.
        let z = pt(&[3.0, 1.0]);
        let r = dr_step(&a, &b, &SolverConfig::new(1.0), &DrState { z: z.clone() }).unwrap();
        assert!(r.state_next.z.dist(&z) < 1e-14);
        assert!(r.residual < 1e-14);
    }

    #[test]
    fn fbf_examples() {
        let zero = op(OperatorSpec::Zero);
        let r = fbf_step(&zero, &zero, &SolverConfig::new(0.5), &FbfState { x: pt(&[1.0, 1.0]) }).unwrap();
        assert_eq!(r.state_next.x, pt(&[1.0, 1.0]));
        assert_eq!(r.c_evals, 2);

        let r = fbf_step(&zero, &op(rot()), &SolverConfig::new(0.5), &FbfState { x: pt(&[1.0, 0.0]) }).unwrap();
        // Cx = (0,-1): y = x - 0.5 Cx = (1, 0.5); Cy = (0.5, -1);
        // x' = y - 0.5 (Cy - Cx) = (1 - 0.25, 0.5 - 0) = (0.75, 0.5)
        assert!(close(r.aux("y").unwrap(), &[1.0, 0.5]));
        assert!(close(&r.state_next.x, &[0.75, 0.5]));
    }

    #[test]
    fn fbf_fixed_point() {
        // zero of A + C with A = Id - (1,0), C = rot: x + Cx = (1,0)
        // => (x1 + x2, x2 - x1) = (1, 0) => x = (0.5, 0.5)
        let a = op(OperatorSpec::Affine {
            m: DMatrix::identity(2, 2),
            b: pt(&[-1.0, 0.0]),
        });
        let x = pt(&[0.5, 0.5]);
        let r = fbf_step(&a, &op(rot()), &SolverConfig::new(0.4), &FbfState { x: x.clone() }).unwrap();
        assert!(r.state_next.x.dist(&x) < 1e-14);
        assert!(r.residual < 1e-14);
    }

    #[test]
    fn frb_examples() {
        let zero = op(OperatorSpec::Zero);
        let x = pt(&[2.0, -1.0]);
        let s = FrbState {
            x: x.clone(),
            x_prev: x.clone(),
            c_prev: Point::zeros(2),
        };
        let r = frb_step(&zero, &zero, &SolverConfig::new(0.3), &s).unwrap();
        assert_eq!(r.state_next.x, x);
        assert_eq!(r.c_evals, 1);

        // 2Cx - Cx_prev = Cx = (0,-1); x' = (1,0) - 0.25 (0,-1) = (1, 0.25)
        let x = pt(&[1.0, 0.0]);
        let c = op(rot());
        let s = FrbState {
            x: x.clone(),
            x_prev: x.clone(),
            c_prev: c.forward(&x).unwrap(),
        };
        let r = frb_step(&zero, &c, &SolverConfig::new(0.25), &s).unwrap();
        assert!(close(&r.state_next.x, &[1.0, 0.25]));
        assert_eq!(r.state_next.x_prev, x);
        assert_eq!(r.state_next.c_prev, c.forward(&x).unwrap());
    }

    #[test]
    fn frb_fixed_point() {
        let a = op(OperatorSpec::Affine {
            m: DMatrix::identity(2, 2),
            b: pt(&[-1.0, 0.0]),
        });
        let c = op(rot());
        let x = pt(&[0.5, 0.5]);
        let s = FrbState {
            x: x.clone(),
            x_prev: x.clone(),
            c_prev: c.forward(&x).unwrap(),
        };
        let r = frb_step(&a, &c, &SolverConfig::new(0.4), &s).unwrap();
        assert!(r.state_next.x.dist(&x) < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let zero = op(OperatorSpec::Zero);
        assert!(dr_step(&zero, &zero, &SolverConfig::new(1.0), &DrState { z: Point::zeros(3) }).is_err());
    }
}
