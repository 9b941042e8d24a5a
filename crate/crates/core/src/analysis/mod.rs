//! Numerical certificates for the FDRF fixed-point encoding, the divergence
//! rate of the two-dimensional counterexample, and the FRDR Lyapunov
//! function.

mod lyapunov;
pub mod properties;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ops::{AffineMap, Operator};
use crate::point::Point;

pub use lyapunov::{lyapunov, LyapunovMonitor, LyapunovRecord, PDNorm, pd_norm_sq};

/// Tolerance on `||Tz - z||` accepted as a fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-8;

/// The FDRF fixed-point operator
/// ```text
/// T = (I - gC) J_{gA} (2 J_{gB} - I - gC J_{gB}) + I - (I - gC) J_{gB}
/// ```
/// evaluated at `z`.
pub fn apply_t(a: &Operator, b: &Operator, c: &Operator, gamma: f64, z: &Point) -> Result<Point> {
    let fwd = |p: &Point| -> Result<Point> { Ok(p - &(gamma * &c.forward(p)?)) };
    let x = b.resolvent(gamma, z)?;
    let inner = &(&(2.0 * &x) - z) - &(gamma * &c.forward(&x)?);
    let y = a.resolvent(gamma, &inner)?;
    Ok(&(&fwd(&y)? + z) - &fwd(&x)?)
}

/// Assembles `T` as an affine map from its values at the origin and the unit
/// vectors. Only meaningful when `A`, `B`, `C` are affine.
pub fn assemble_t(a: &Operator, b: &Operator, c: &Operator, gamma: f64) -> Result<AffineMap> {
    let d = a.dim();
    let t0 = apply_t(a, b, c, gamma, &Point::zeros(d))?;
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        let col = &apply_t(a, b, c, gamma, &Point::basis(d, i))? - &t0;
        m.set_column(i, col.as_vector());
    }
    Ok(AffineMap {
        m,
        c: t0.into_vector(),
    })
}

/// A fixed point of an affine `T = Mz + t`, from `(M - I) z = -t`.
pub fn affine_fixed_point(t: &AffineMap) -> Result<Point> {
    let d = t.dim();
    let lhs = &t.m - DMatrix::<f64>::identity(d, d);
    let rhs: DVector<f64> = -&t.c;
    let z = lhs.lu().solve(&rhs).ok_or(Error::SingularSystem { gamma: 1.0 })?;
    let z = Point::new(z.iter().copied().collect())?;
    let defect = t.apply(&z)?.dist(&z);
    if defect > FIXED_POINT_TOL {
        return Err(Error::NotAFixedPoint(defect));
    }
    Ok(z)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
}

/// Inclusion residual of `x = J_{gB} z` for a fixed point `z` of `T`.
///
/// Uses the selections `a = (2x - z - gCx - x)/g` and `b = (z - x)/g`.
/// `b in Bx` holds by the resolvent identity; `a in Ax` holds exactly when
/// `y = J_{gA}(2x - z - gCx)` equals `x`. Since `a + b + Cx` cancels
/// algebraically, the returned value is `||a + b + Cx|| + ||y - x|| / g`,
/// the second term being the defect of the membership `a in Ax`.
pub fn check_fixed_point_encoding(
    a: &Operator,
    b: &Operator,
    c: &Operator,
    gamma: f64,
    z_fix: &Point,
) -> Result<f64> {
    let defect = apply_t(a, b, c, gamma, z_fix)?.dist(z_fix);
    if defect > FIXED_POINT_TOL {
        return Err(Error::NotAFixedPoint(defect));
    }
    let x = b.resolvent(gamma, z_fix)?;
    let cx = c.forward(&x)?;
    let w = &(&(2.0 * &x) - z_fix) - &(gamma * &cx);
    let y = a.resolvent(gamma, &w)?;
    let sel_a = (1.0 / gamma) * &(&w - &x);
    let sel_b = (1.0 / gamma) * &(z_fix - &x);
    let sum = &(&sel_a + &sel_b) + &cx;
    Ok(sum.norm() + y.dist(&x) / gamma)
}

/// `(cos(w/2) + g mu sin(w/2))^2`, the squared spectral radius of `T` on the
/// two-dimensional counterexample.
pub fn counterexample_growth(gamma: f64, mu: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega < std::f64::consts::PI) {
        return Err(Error::DomainError(format!("omega must lie in (0, pi), got {omega}")));
    }
    let half = omega / 2.0;
    Ok((half.cos() + gamma * mu * half.sin()).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::OperatorSpec;
    use crate::problems::{build_condition_i, build_counterexample, build_random_general, CounterexampleParams};
    use crate::solvers::{fdrf_step, FdrfState, SolverConfig};
    use crate::ProblemInstance;
    use proptest::prelude::*;

    fn ops(p: &ProblemInstance) -> (Operator, Operator, Operator) {
        (
            Operator::new(p.a.clone(), p.dim),
            Operator::new(p.b.clone(), p.dim),
            Operator::new(p.c.clone(), p.dim),
        )
    }

    fn counterexample(g: f64, mu: f64, w: f64) -> (Operator, Operator, Operator) {
        ops(&build_counterexample(CounterexampleParams::new(g, mu, w).unwrap()).unwrap())
    }

    #[test]
    fn t_is_identity_for_zero_operators() {
        let z = Operator::new(OperatorSpec::Zero, 3);
        let p = Point::new(vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(apply_t(&z, &z, &z, 0.7, &p).unwrap(), p);
    }

    #[test]
    fn counterexample_t_entries() {
        for (g, mu, w) in [(1.0, 1.0, 0.3), (0.5, 2.0, 1.1), (2.0, 0.25, 0.05)] {
            let (a, b, c) = counterexample(g, mu, w);
            let t = assemble_t(&a, &b, &c, g).unwrap();
            let s = g * mu;
            let d = 0.5 * (1.0 + w.cos() + s * w.sin());
            let off = 0.5 * (w.sin() + s * (1.0 - w.cos()));
            assert!((t.m[(0, 0)] - d).abs() < 1e-12);
            assert!((t.m[(1, 1)] - d).abs() < 1e-12);
            assert!((t.m[(0, 1)] - off).abs() < 1e-12);
            assert!((t.m[(1, 0)] + off).abs() < 1e-12);
            assert!(t.c.norm() == 0.0);
        }
    }

    #[test]
    fn spectral_radius_matches_closed_form_on_grid() {
        for gm in [0.25, 0.5, 1.0, 2.0] {
            for w in [0.01, 0.1, 0.5, 1.0] {
                let (a, b, c) = counterexample(1.0, gm, w);
                let t = assemble_t(&a, &b, &c, 1.0).unwrap();
                let rho = spectral_radius(&t.m);
                let pred = counterexample_growth(1.0, gm, w).unwrap();
                assert!((rho * rho - pred).abs() < 1e-10, "gm={gm} w={w}");
            }
        }
    }

    #[test]
    fn growth_examples() {
        assert!((counterexample_growth(1.0, 1.0, std::f64::consts::FRAC_PI_2).unwrap() - 2.0).abs() < 1e-14);
        assert!((counterexample_growth(1.0, 1.0, 1e-8).unwrap() - 1.0).abs() < 1e-6);
        let w = 1e-3;
        for gm in [0.3, 1.0, 4.0] {
            let v = counterexample_growth(1.0, gm, w).unwrap();
            assert!((v - 1.0 - gm * w).abs() <= 10.0 * w * w);
        }
        for bad in [0.0, -0.1, std::f64::consts::PI, 4.0, f64::NAN] {
            assert!(matches!(counterexample_growth(1.0, 1.0, bad), Err(Error::DomainError(_))));
        }
    }

    #[test]
    fn encoding_at_counterexample_origin() {
        let (a, b, c) = counterexample(1.0, 1.0, 0.1);
        assert_eq!(check_fixed_point_encoding(&a, &b, &c, 1.0, &Point::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn encoding_from_known_solution_and_linear_solve() {
        let p = build_condition_i(6, 0.8, 0.9, 5).unwrap();
        let (a, b, c) = ops(&p);
        let g = 0.5;
        let sol = p.known_solution.clone().unwrap();
        let v = b.forward(&sol.x).unwrap();
        let z = &sol.x + &(g * &v);
        assert!(apply_t(&a, &b, &c, g, &z).unwrap().dist(&z) <= 1e-10);
        assert!(check_fixed_point_encoding(&a, &b, &c, g, &z).unwrap() <= 1e-10);
        let zf = affine_fixed_point(&assemble_t(&a, &b, &c, g).unwrap()).unwrap();
        assert!(check_fixed_point_encoding(&a, &b, &c, g, &zf).unwrap() <= 1e-8);
        assert!(b.resolvent(g, &zf).unwrap().dist(&sol.x) <= 1e-8);
    }

    #[test]
    fn encoding_rejects_non_fixed_points() {
        let (a, b, c) = counterexample(1.0, 1.0, 0.1);
        let z = Point::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            check_fixed_point_encoding(&a, &b, &c, 1.0, &z),
            Err(Error::NotAFixedPoint(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn t_matches_fdrf_update(seed in 0u64..10_000, dim in 1usize..8, g in 0.05f64..2.0) {
            let p = build_random_general(dim, 0.8, seed).unwrap();
            let (a, b, c) = ops(&p);
            let z = Point::from_vector(crate::problems::random::gaussian_vector(
                &mut crate::problems::random::rng(seed ^ 7), dim));
            let t = apply_t(&a, &b, &c, g, &z).unwrap();
            let f = fdrf_step(&a, &b, &c, &SolverConfig::new(g), &FdrfState { z }).unwrap();
            prop_assert!(t.dist(&f.state_next.z) <= 1e-14 * (1.0 + t.norm()));
        }

        #[test]
        fn growth_exceeds_one_iff_above_threshold(gm in 0.0f64..10.0, w in 1e-3f64..3.1) {
            // cos(h) + s sin(h) > 1  <=>  s > tan(h / 2)
            let v = counterexample_growth(1.0, gm, w).unwrap();
            let thr = (w / 4.0).tan();
            prop_assume!((gm - thr).abs() > 1e-9);
            prop_assert_eq!(v > 1.0, gm > thr);
        }
    }
}
