//! Randomized spot checks of the operator inequalities the convergence
//! theory relies on, and an aggregate report for one problem instance.

use rand::Rng;

use super::{affine_fixed_point, assemble_t, check_fixed_point_encoding, FIXED_POINT_TOL};
use crate::error::Result;
use crate::ops::{Operator, OperatorSpec, BEHAVIOR_TOL};
use crate::point::Point;
use crate::problems::random::{gaussian_vector, rng};
use crate::problems::ProblemInstance;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn from_worst(name: impl Into<String>, worst: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: worst <= BEHAVIOR_TOL,
            detail: format!("worst violation {worst:.3e}"),
        }
    }

    fn from_error(name: impl Into<String>, e: impl std::fmt::Display) -> Self {
        CheckResult {
            name: name.into(),
            passed: false,
            detail: e.to_string(),
        }
    }
}

fn random_pair<R: Rng>(r: &mut R, dim: usize) -> (Point, Point) {
    let scale = r.random_range(0.1..10.0);
    let x = Point::from_vector(gaussian_vector(r, dim) * scale);
    let y = Point::from_vector(gaussian_vector(r, dim) * scale);
    (x, y)
}

/// Largest violation of `f(x, y) >= 0` over random pairs, or 0.
fn worst_over_pairs(
    dim: usize,
    samples: usize,
    seed: u64,
    mut f: impl FnMut(&Point, &Point) -> Result<f64>,
) -> Result<f64> {
    let mut r = rng(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let (x, y) = random_pair(&mut r, dim);
        worst = worst.max(-f(&x, &y)?);
    }
    Ok(worst)
}

/// `||(x - gCx) - (y - gCy)|| >= (1 - g mu)||x - y||` for `g in (0, 1/mu)`:
/// `I - gC` is injective. Returns the worst violation.
pub fn forward_injectivity(c: &Operator, mu: f64, gamma: f64, samples: usize, seed: u64) -> Result<f64> {
    worst_over_pairs(c.dim(), samples, seed, |x, y| {
        let fx = x - &(gamma * &c.forward(x)?);
        let fy = y - &(gamma * &c.forward(y)?);
        Ok(fx.dist(&fy) - (1.0 - gamma * mu) * x.dist(y))
    })
}

/// For `kappa`-cocoercive `B`:
/// `||Jx - Jy||^2 <= ||x - y||^2 - (1 + 2 kappa/g)||(I - J)x - (I - J)y||^2`
/// with `J = J_{gB}`. Returns the worst violation.
pub fn cocoercive_resolvent(b: &Operator, kappa: f64, gamma: f64, samples: usize, seed: u64) -> Result<f64> {
    worst_over_pairs(b.dim(), samples, seed, |x, y| {
        let jx = b.resolvent(gamma, x)?;
        let jy = b.resolvent(gamma, y)?;
        let rx = x - &jx;
        let ry = y - &jy;
        let rhs = x.dist(y).powi(2) - (1.0 + 2.0 * kappa / gamma) * rx.dist(&ry).powi(2);
        Ok(rhs - jx.dist(&jy).powi(2))
    })
}

/// `||Jx - Jy||^2 <= <Jx - Jy, x - y>`.
pub fn firm_nonexpansiveness(op: &Operator, gamma: f64, samples: usize, seed: u64) -> Result<f64> {
    worst_over_pairs(op.dim(), samples, seed, |x, y| {
        let d = &op.resolvent(gamma, x)? - &op.resolvent(gamma, y)?;
        Ok(d.dot(&(x - y)) - d.norm_squared())
    })
}

/// `J_{gF}(x + g F x) = x` for single-valued `F`. Returns the worst error.
pub fn resolvent_inverts_forward(op: &Operator, gamma: f64, samples: usize, seed: u64) -> Result<f64> {
    worst_over_pairs(op.dim(), samples, seed, |x, _| {
        let back = op.resolvent(gamma, &(x + &(gamma * &op.forward(x)?)))?;
        Ok(-back.dist(x) / (1.0 + x.norm()))
    })
}

/// `<Fx - Fy, x - y> >= 0`.
pub fn monotonicity(op: &Operator, samples: usize, seed: u64) -> Result<f64> {
    worst_over_pairs(op.dim(), samples, seed, |x, y| {
        Ok((&op.forward(x)? - &op.forward(y)?).dot(&(x - y)))
    })
}

/// `<Fx - Fy, x - y> >= kappa ||Fx - Fy||^2`.
pub fn cocoercivity(op: &Operator, kappa: f64, samples: usize, seed: u64) -> Result<f64> {
    worst_over_pairs(op.dim(), samples, seed, |x, y| {
        let d = &op.forward(x)? - &op.forward(y)?;
        Ok(d.dot(&(x - y)) - kappa * d.norm_squared())
    })
}

const SAMPLES: usize = 100;

/// Runs every applicable check on `problem`.
///
/// The step used for resolvent and fixed-point checks is the designated step
/// of a `ResolventOnly` `A` when there is one, and `0.5 / mu` otherwise.
pub fn check_instance(problem: &ProblemInstance, seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(match problem.validate() {
        Ok(()) => CheckResult {
            name: "structure".into(),
            passed: true,
            detail: "operators, Lipschitz data and solution certificate consistent".into(),
        },
        Err(e) => CheckResult::from_error("structure", e),
    });
    let d = problem.dim;
    let mu = problem.lip.mu;
    let gamma = match &problem.a {
        OperatorSpec::ResolventOnly { gamma: Some(g), .. } => *g,
        _ => 0.5 / mu,
    };
    let a = Operator::new(problem.a.clone(), d);
    let b = Operator::new(problem.b.clone(), d);
    let c = Operator::new(problem.c.clone(), d);
    let mut push = |name: String, r: Result<f64>| {
        out.push(match r {
            Ok(w) => CheckResult::from_worst(name, w),
            Err(e) => CheckResult::from_error(name, e),
        })
    };

    for (label, op) in [("A", &a), ("B", &b), ("C", &c)] {
        if op.spec().is_single_valued() {
            push(format!("monotonicity of {label}"), monotonicity(op, SAMPLES, seed));
        }
    }
    if c.spec().is_single_valued() {
        push(
            "injectivity of I - gC".into(),
            forward_injectivity(&c, mu, gamma.min(0.5 / mu), SAMPLES, seed),
        );
    }
    if let Some(kappa) = problem.lip.kappa {
        push("cocoercivity of B".into(), cocoercivity(&b, kappa, SAMPLES, seed));
        push(
            "averagedness of J_gB".into(),
            cocoercive_resolvent(&b, kappa, gamma, SAMPLES, seed),
        );
    }
    for (label, op) in [("A", &a), ("B", &b)] {
        push(
            format!("firm nonexpansiveness of J_g{label}"),
            firm_nonexpansiveness(op, gamma, SAMPLES, seed),
        );
        if op.spec().is_single_valued() {
            push(
                format!("J_g{label} inverts I + g{label}"),
                resolvent_inverts_forward(op, gamma, SAMPLES, seed),
            );
        }
    }

    let encoding = assemble_t(&a, &b, &c, gamma)
        .and_then(|t| affine_fixed_point(&t))
        .and_then(|z| check_fixed_point_encoding(&a, &b, &c, gamma, &z));
    out.push(match encoding {
        Ok(r) => CheckResult {
            name: "fixed-point encoding (solved fixed point)".into(),
            passed: r <= FIXED_POINT_TOL,
            detail: format!("inclusion residual {r:.3e}"),
        },
        Err(e) => CheckResult::from_error("fixed-point encoding (solved fixed point)", e),
    });
    out
}
