//! Problem instances `0 in Ax + Bx + Cx` with certified solutions.
//!
//! Builders plant a solution by shifting the constant term of `A`, so
//! `zer(A + B + C)` is nonempty by construction and the planted point is
//! recorded as [`KnownSolution`] together with a dual certificate
//! `u in Ax`, `-u in (B + C)x`. Lipschitz constants are exact spectral norms.

mod io;
pub mod random;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ops::{LipschitzData, OperatorSpec, BEHAVIOR_TOL};
use crate::point::Point;

pub use io::{load, save, SCHEMA_VERSION};

/// Tolerance for the primal-dual solution certificate.
pub const SOLUTION_TOL: f64 = 1e-8;

/// Primal-dual pair `(x, u)` with `u in Ax` and `-u in (B + C)x`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownSolution {
    pub x: Point,
    pub u: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub dim: usize,
    pub a: OperatorSpec,
    pub b: OperatorSpec,
    pub c: OperatorSpec,
    pub lip: LipschitzData,
    pub known_solution: Option<KnownSolution>,
    pub tags: Vec<String>,
}

impl ProblemInstance {
    /// Step at which resolvent identities are checked: the designated step of
    /// a `ResolventOnly` operator, otherwise 1.
    fn certificate_step(op: &OperatorSpec) -> f64 {
        match op {
            OperatorSpec::ResolventOnly { gamma: Some(g), .. } => *g,
            _ => 1.0,
        }
    }

    /// Largest violation of the resolvent identities
    /// `J_{gA}(x + g u) = x` and `J_{gB}(x - g(u + Cx)) = x`.
    pub fn solution_defect(&self, x: &Point, u: &Point) -> Result<f64> {
        x.check_dim(self.dim)?;
        u.check_dim(self.dim)?;
        let ga = Self::certificate_step(&self.a);
        let gb = Self::certificate_step(&self.b);
        let a_side = self.a.resolvent(ga, &(x + &(ga * u)))?.dist(x);
        let cx = self.c.forward(x)?;
        let b_side = self.b.resolvent(gb, &(x - &(gb * &(u + &cx))))?.dist(x);
        Ok(a_side.max(b_side))
    }

    /// Checks every instance invariant.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Structural("dim must be positive".into()));
        }
        for (name, op) in [("A", &self.a), ("B", &self.b), ("C", &self.c)] {
            op.validate(self.dim)
                .map_err(|e| Error::Structural(format!("operator {name}: {e}")))?;
            if !op.is_monotone(self.dim) {
                return Err(Error::Structural(format!("operator {name} is not monotone")));
            }
        }
        if !self.c.is_single_valued() {
            return Err(Error::Structural(
                "operator C must be single-valued".into(),
            ));
        }
        LipschitzData::new(self.lip.mu, self.lip.kappa)?;
        let lc = self.c.lipschitz_constant(self.dim).unwrap_or(0.0);
        if self.lip.mu < lc - BEHAVIOR_TOL {
            return Err(Error::Structural(format!(
                "lip.mu = {} is below the Lipschitz constant {lc} of C",
                self.lip.mu
            )));
        }
        if let (Some(kappa), OperatorSpec::QuadraticGradient { q, .. }) = (self.lip.kappa, &self.b) {
            let lmax = q.clone().symmetric_eigenvalues().max();
            if kappa * lmax > 1.0 + BEHAVIOR_TOL {
                return Err(Error::Structural(format!(
                    "B is not {kappa}-cocoercive (lambda_max = {lmax})"
                )));
            }
        }
        if let Some(sol) = &self.known_solution {
            let defect = self.solution_defect(&sol.x, &sol.u)?;
            if defect > SOLUTION_TOL {
                return Err(Error::NotASolution(defect));
            }
        }
        Ok(())
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleParams {
    pub gamma: f64,
    pub mu: f64,
    pub omega: f64,
}

impl CounterexampleParams {
    pub fn new(gamma: f64, mu: f64, omega: f64) -> Result<Self> {
        let p = CounterexampleParams { gamma, mu, omega };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::DomainError(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::DomainError(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.omega > 0.0 && self.omega < std::f64::consts::PI) {
            return Err(Error::DomainError(format!(
                "omega must lie in (0, pi), got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

fn skew2(c: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, c, -c, 0.0])
}

/// The two-dimensional instance on which FDRF diverges for every step.
///
/// `J_{gA} = 0` (A is the normal cone of `{0}`), `B` is the rotation
/// generator scaled by `cot(omega/2)/gamma`, `C` the one scaled by `mu`.
/// The unique zero is the origin.
pub fn build_counterexample(p: CounterexampleParams) -> Result<ProblemInstance> {
    p.check()?;
    let cot = 1.0 / (p.omega / 2.0).tan();
    Ok(ProblemInstance {
        dim: 2,
        a: OperatorSpec::ResolventOnly {
            r: DMatrix::zeros(2, 2),
            gamma: None,
        },
        b: OperatorSpec::Skew {
            m: skew2(cot / p.gamma),
        },
        c: OperatorSpec::Skew { m: skew2(p.mu) },
        lip: LipschitzData::new(p.mu, None)?,
        known_solution: Some(KnownSolution {
            x: Point::zeros(2),
            u: Point::zeros(2),
        }),
        tags: vec!["counterexample".into()],
    })
}

/// Skew `C` with spectral norm `mu`; in one dimension the only skew matrix
/// is zero, so `C = mu Id` is used instead.
fn lipschitz_c<R: rand::Rng>(rng: &mut R, dim: usize, mu: f64) -> OperatorSpec {
    if dim == 1 {
        OperatorSpec::Affine {
            m: DMatrix::from_element(1, 1, mu),
            b: Point::zeros(1),
        }
    } else {
        OperatorSpec::Skew {
            m: random::scale_to_norm(random::skew(rng, dim), mu),
        }
    }
}

/// Picks `b_A` so that `M_A x_star + b_A = target`; returns the affine `A`
/// and `u_star = A x_star`.
fn plant_affine_a(m_a: DMatrix<f64>, x_star: &DVector<f64>, target: DVector<f64>) -> (OperatorSpec, Point) {
    let b_a = &target - &m_a * x_star;
    (
        OperatorSpec::Affine {
            m: m_a,
            b: Point::from(b_a),
        },
        Point::from(target),
    )
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Instance with `kappa`-cocoercive `B` (a quadratic gradient with
/// `lambda_max(Q) = 1/kappa`), skew `C` with norm `mu`, and monotone affine `A`.
pub fn build_condition_i(dim: usize, kappa: f64, mu: f64, seed: u64) -> Result<ProblemInstance> {
    check_positive("kappa", kappa)?;
    check_positive("mu", mu)?;
    if dim == 0 {
        return Err(Error::InvalidParameter("dim must be positive".into()));
    }
    let mut rng = random::rng(seed);
    let q = random::shifted_symmetric(&mut rng, dim, 0.0);
    let lmax = q.clone().symmetric_eigenvalues().max();
    let q = if lmax > 0.0 { q * (1.0 / (kappa * lmax)) } else { q };
    let b = OperatorSpec::QuadraticGradient {
        q,
        b: Point::from(random::gaussian_vector(&mut rng, dim)),
    };
    let c = lipschitz_c(&mut rng, dim, mu);
    let m_a = random::monotone(&mut rng, dim);
    let x_star = random::gaussian_vector(&mut rng, dim);
    let xs = Point::from(x_star.clone());
    let target = -(b.forward(&xs)? + c.forward(&xs)?).into_vector();
    let (a, u_star) = plant_affine_a(m_a, &x_star, target);
    Ok(ProblemInstance {
        dim,
        a,
        b,
        c,
        lip: LipschitzData::new(mu, Some(kappa))?,
        known_solution: Some(KnownSolution { x: xs, u: u_star }),
        tags: vec!["condition-i".into()],
    })
}

/// Orthogonal projector onto the consensus set `{(v, ..., v)}` in `(R^base)^m`.
pub fn consensus_projector(m: usize, base_dim: usize) -> DMatrix<f64> {
    let dim = m * base_dim;
    let w = 1.0 / m as f64;
    DMatrix::from_fn(dim, dim, |i, j| if i % base_dim == j % base_dim { w } else { 0.0 })
}

/// Consensus instance: `B = N_V` for the consensus subspace `V`,
/// `C = P_V C_1 P_V` with `C_1` random skew, `A` block-diagonal monotone affine.
pub fn build_condition_ii_consensus(
    m: usize,
    base_dim: usize,
    mu: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    check_positive("mu", mu)?;
    if m < 2 {
        return Err(Error::InvalidParameter(format!("need m >= 2 blocks, got {m}")));
    }
    if base_dim < 2 {
        // P K P vanishes for every skew K when each block is one-dimensional.
        return Err(Error::InvalidParameter(format!(
            "need base_dim >= 2 for a nonzero skew consensus operator, got {base_dim}"
        )));
    }
    let dim = m * base_dim;
    let mut rng = random::rng(seed);
    let p = consensus_projector(m, base_dim);
    let c1 = random::skew(&mut rng, dim);
    let pcp = &p * c1 * &p;
    let pcp = (&pcp - pcp.transpose()) * 0.5;
    let c_mat = random::scale_to_norm(pcp, mu);
    let c = OperatorSpec::Skew { m: c_mat };

    let mut m_a = DMatrix::zeros(dim, dim);
    for k in 0..m {
        let block = random::monotone(&mut rng, base_dim);
        m_a.view_mut((k * base_dim, k * base_dim), (base_dim, base_dim))
            .copy_from(&block);
    }
    let base = random::gaussian_vector(&mut rng, base_dim);
    let x_star = DVector::from_fn(dim, |i, _| base[i % base_dim]);
    let w = random::gaussian_vector(&mut rng, dim);
    let v_perp = &w - &p * &w;
    let xs = Point::from(x_star.clone());
    let target = -(v_perp + c.forward(&xs)?.into_vector());
    let (a, u_star) = plant_affine_a(m_a, &x_star, target);
    Ok(ProblemInstance {
        dim,
        a,
        b: OperatorSpec::NormalConeSubspace { p },
        c,
        lip: LipschitzData::new(mu, None)?,
        known_solution: Some(KnownSolution { x: xs, u: u_star }),
        tags: vec!["condition-ii".into(), "consensus".into()],
    })
}

/// Generic instance: `A`, `B` random monotone affine, `C` random skew with norm `mu`.
pub fn build_random_general(dim: usize, mu: f64, seed: u64) -> Result<ProblemInstance> {
    check_positive("mu", mu)?;
    if dim == 0 {
        return Err(Error::InvalidParameter("dim must be positive".into()));
    }
    let mut rng = random::rng(seed);
    let b = OperatorSpec::Affine {
        m: random::monotone(&mut rng, dim),
        b: Point::from(random::gaussian_vector(&mut rng, dim)),
    };
    let c = lipschitz_c(&mut rng, dim, mu);
    let m_a = random::monotone(&mut rng, dim);
    let x_star = random::gaussian_vector(&mut rng, dim);
    let xs = Point::from(x_star.clone());
    let target = -(b.forward(&xs)? + c.forward(&xs)?).into_vector();
    let (a, u_star) = plant_affine_a(m_a, &x_star, target);
    Ok(ProblemInstance {
        dim,
        a,
        b,
        c,
        lip: LipschitzData::new(mu, None)?,
        known_solution: Some(KnownSolution { x: xs, u: u_star }),
        tags: vec!["random-general".into()],
    })
}
