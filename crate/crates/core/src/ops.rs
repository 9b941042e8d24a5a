//! Operators on `R^d` and their closed-form resolvents.
//!
//! Every operator here is either single-valued and affine (`Zero`, `Affine`,
//! `Skew`, `QuadraticGradient`, and sums of these), or set-valued with a
//! known linear resolvent (`NormalConeSubspace`, `ResolventOnly`). As a
//! consequence each resolvent `J_{gamma A} = (Id + gamma A)^{-1}` is an affine
//! map, which [`OperatorSpec::resolvent_map`] materializes:
//!
//! * `J_{gamma (M . + b)}(x) = (I + gamma M)^{-1} (x - gamma b)`
//! * `J_{gamma N_V}(x) = P_V x`
//! * `J_{gamma 0}(x) = x`
//!
//! The solvers wrap specs in [`Operator`], which caches resolvent maps for
//! the step sizes a run will use so that the factorization is paid once.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::problems::ProblemInstance;

/// Relative tolerance for structural matrix identities.
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Absolute slack for eigenvalue sign checks and behavioral inequalities.
pub const BEHAVIOR_TOL: f64 = 1e-10;
/// Step size used by [`dist_to_zero`] unless an operator pins a different one.
pub const RESIDUAL_GAMMA: f64 = 1.0;

/// Tagged description of a monotone operator.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    Zero,
    /// `x -> M x + b`.
    Affine { m: DMatrix<f64>, b: Point },
    /// `x -> M x` with `M^T = -M`.
    Skew { m: DMatrix<f64> },
    /// Normal cone of the subspace `V = range(P)`, `P` the orthogonal projector.
    NormalConeSubspace { p: DMatrix<f64> },
    /// `x -> Q x + b` with `Q` symmetric positive semidefinite.
    QuadraticGradient { q: DMatrix<f64>, b: Point },
    /// Operator known only through its resolvent `J_{gamma A} = R`.
    ///
    /// With `gamma: Some(g)` the resolvent is valid only at step `g`. With
    /// `None` it is the same matrix for every step, as for the normal cone of
    /// `{0}` whose resolvent is the zero matrix.
    ResolventOnly { r: DMatrix<f64>, gamma: Option<f64> },
    /// Pointwise sum; forward-evaluable only.
    Sum {
        left: Box<OperatorSpec>,
        right: Box<OperatorSpec>,
    },
}

/// Constants of the problem: `mu` bounds the Lipschitz constant of `C`,
/// `kappa` (if present) is the cocoercivity constant of `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzData {
    pub mu: f64,
    pub kappa: Option<f64>,
}

impl LipschitzData {
    pub fn new(mu: f64, kappa: Option<f64>) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
        }
        if let Some(k) = kappa {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "kappa must be positive, got {k}"
                )));
            }
        }
        Ok(LipschitzData { mu, kappa })
    }
}

/// The affine map `x -> M x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub m: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        AffineMap {
            m: DMatrix::identity(dim, dim),
            c: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim())?;
        Ok(Point::from_vector(&self.m * x.as_vector() + &self.c))
    }
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

fn check_square(name: &str, m: &DMatrix<f64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::Structural(format!(
            "{name} is {}x{}, expected {dim}x{dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn max_entry(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Smallest eigenvalue of the symmetric matrix `(M + M^T) / 2`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}

impl OperatorSpec {
    /// Dimension implied by the operator's matrices; `None` for `Zero` and for
    /// sums of zeros.
    pub fn dim(&self) -> Option<usize> {
        match self {
            OperatorSpec::Zero => None,
            OperatorSpec::Affine { m, .. }
            | OperatorSpec::Skew { m }
            | OperatorSpec::NormalConeSubspace { p: m }
            | OperatorSpec::QuadraticGradient { q: m, .. }
            | OperatorSpec::ResolventOnly { r: m, .. } => Some(m.nrows()),
            OperatorSpec::Sum { left, right } => left.dim().or_else(|| right.dim()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            OperatorSpec::Zero => "zero",
            OperatorSpec::Affine { .. } => "affine",
            OperatorSpec::Skew { .. } => "skew",
            OperatorSpec::NormalConeSubspace { .. } => "normal_cone_subspace",
            OperatorSpec::QuadraticGradient { .. } => "quadratic_gradient",
            OperatorSpec::ResolventOnly { .. } => "resolvent_only",
            OperatorSpec::Sum { .. } => "sum",
        }
    }

    /// Single-valued everywhere (so `forward` succeeds at every point).
    pub fn is_single_valued(&self) -> bool {
        match self {
            OperatorSpec::NormalConeSubspace { .. } | OperatorSpec::ResolventOnly { .. } => false,
            OperatorSpec::Sum { left, right } => left.is_single_valued() && right.is_single_valued(),
            _ => true,
        }
    }

    /// Checks shape and the structural invariants of the variant.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            OperatorSpec::Zero => Ok(()),
            OperatorSpec::Affine { m, b } => {
                check_square("Affine.m", m, dim)?;
                b.check_dim(dim)
            }
            OperatorSpec::Skew { m } => {
                check_square("Skew.m", m, dim)?;
                let asym = frobenius(&(m + m.transpose()));
                if asym > STRUCTURAL_TOL * frobenius(m).max(1.0) {
                    return Err(Error::Structural(format!(
                        "Skew.m is not antisymmetric (||M + M^T||_F = {asym:e})"
                    )));
                }
                Ok(())
            }
            OperatorSpec::NormalConeSubspace { p } => {
                check_square("NormalConeSubspace.p", p, dim)?;
                let idem = max_entry(&(p * p - p));
                let sym = max_entry(&(p - p.transpose()));
                if idem > STRUCTURAL_TOL || sym > STRUCTURAL_TOL {
                    return Err(Error::Structural(format!(
                        "NormalConeSubspace.p is not an orthogonal projector \
                         (|P^2 - P| = {idem:e}, |P - P^T| = {sym:e})"
                    )));
                }
                Ok(())
            }
            OperatorSpec::QuadraticGradient { q, b } => {
                check_square("QuadraticGradient.q", q, dim)?;
                b.check_dim(dim)?;
                let sym = max_entry(&(q - q.transpose()));
                if sym > STRUCTURAL_TOL {
                    return Err(Error::Structural(format!(
                        "QuadraticGradient.q is not symmetric (|Q - Q^T| = {sym:e})"
                    )));
                }
                let lmin = min_symmetric_eigenvalue(q);
                if lmin < -BEHAVIOR_TOL {
                    return Err(Error::Structural(format!(
                        "QuadraticGradient.q is not positive semidefinite (lambda_min = {lmin:e})"
                    )));
                }
                Ok(())
            }
            OperatorSpec::ResolventOnly { r, gamma } => {
                check_square("ResolventOnly.r", r, dim)?;
                if let Some(g) = gamma {
                    if !(*g > 0.0 && g.is_finite()) {
                        return Err(Error::Structural(format!(
                            "ResolventOnly.gamma must be positive, got {g}"
                        )));
                    }
                }
                Ok(())
            }
            OperatorSpec::Sum { left, right } => {
                left.validate(dim)?;
                right.validate(dim)?;
                if !self.is_single_valued() {
                    return Err(Error::Structural(
                        "Sum operands must both be single-valued".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// The `(M, b)` with `forward(x) = M x + b`, for single-valued operators.
    pub fn affine_parts(&self, dim: usize) -> Option<(DMatrix<f64>, DVector<f64>)> {
        match self {
            OperatorSpec::Zero => Some((DMatrix::zeros(dim, dim), DVector::zeros(dim))),
            OperatorSpec::Affine { m, b } | OperatorSpec::QuadraticGradient { q: m, b } => {
                Some((m.clone(), b.as_vector().clone()))
            }
            OperatorSpec::Skew { m } => Some((m.clone(), DVector::zeros(dim))),
            OperatorSpec::Sum { left, right } => {
                let (ml, bl) = left.affine_parts(dim)?;
                let (mr, br) = right.affine_parts(dim)?;
                Some((ml + mr, bl + br))
            }
            OperatorSpec::NormalConeSubspace { .. } | OperatorSpec::ResolventOnly { .. } => None,
        }
    }

    /// Monotonicity test for single-valued variants: the symmetric part of the
    /// linear term is PSD up to `BEHAVIOR_TOL`. Set-valued variants are
    /// monotone by construction and return `true`.
    pub fn is_monotone(&self, dim: usize) -> bool {
        match self.affine_parts(dim) {
            Some((m, _)) => min_symmetric_eigenvalue(&m) >= -BEHAVIOR_TOL,
            None => true,
        }
    }

    /// Lipschitz constant of a single-valued operator (spectral norm of its
    /// linear part).
    pub fn lipschitz_constant(&self, dim: usize) -> Option<f64> {
        self.affine_parts(dim).map(|(m, _)| spectral_norm(&m))
    }

    pub fn forward(&self, x: &Point) -> Result<Point> {
        if let Some(d) = self.dim() {
            x.check_dim(d)?;
        }
        match self {
            OperatorSpec::Zero => Ok(Point::zeros(x.dim())),
            OperatorSpec::Affine { m, b } | OperatorSpec::QuadraticGradient { q: m, b } => {
                Ok(Point::from_vector(m * x.as_vector() + b.as_vector()))
            }
            OperatorSpec::Skew { m } => Ok(Point::from_vector(m * x.as_vector())),
            OperatorSpec::NormalConeSubspace { p } => {
                let off = (x.as_vector() - p * x.as_vector()).norm();
                if off > BEHAVIOR_TOL {
                    return Err(Error::NotForwardEvaluable(format!(
                        "normal cone evaluated at a point {off:e} away from its subspace"
                    )));
                }
                Ok(Point::zeros(x.dim()))
            }
            OperatorSpec::ResolventOnly { .. } => Err(Error::NotForwardEvaluable(
                "operator is specified only through its resolvent".into(),
            )),
            OperatorSpec::Sum { left, right } => Ok(left.forward(x)? + right.forward(x)?),
        }
    }

    /// Materializes `J_{gamma A}` as an affine map on `R^dim`.
    pub fn resolvent_map(&self, gamma: f64, dim: usize) -> Result<AffineMap> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "resolvent step must be positive, got {gamma}"
            )));
        }
        if let Some(d) = self.dim() {
            if d != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: d,
                });
            }
        }
        match self {
            OperatorSpec::Zero => Ok(AffineMap::identity(dim)),
            OperatorSpec::NormalConeSubspace { p } => Ok(AffineMap {
                m: p.clone(),
                c: DVector::zeros(dim),
            }),
            OperatorSpec::ResolventOnly { r, gamma: designated } => {
                if let Some(g) = designated {
                    if (gamma - g).abs() > STRUCTURAL_TOL * g.max(1.0) {
                        return Err(Error::GammaMismatch {
                            expected: *g,
                            found: gamma,
                        });
                    }
                }
                Ok(AffineMap {
                    m: r.clone(),
                    c: DVector::zeros(dim),
                })
            }
            _ => {
                let (m, b) = self.affine_parts(dim).ok_or_else(|| {
                    Error::NoClosedFormResolvent(format!("{} operator", self.kind()))
                })?;
                let inv = invert_shifted(&m, gamma)?;
                let c = -(&inv * b) * gamma;
                Ok(AffineMap { m: inv, c })
            }
        }
    }

    /// `J_{gamma A}(x)`.
    pub fn resolvent(&self, gamma: f64, x: &Point) -> Result<Point> {
        self.resolvent_map(gamma, x.dim())?.apply(x)
    }
}

/// `(I + gamma M)^{-1}` via LU, rejecting numerically singular systems.
fn invert_shifted(m: &DMatrix<f64>, gamma: f64) -> Result<DMatrix<f64>> {
    let dim = m.nrows();
    let shifted = DMatrix::identity(dim, dim) + m * gamma;
    let lu = shifted.lu();
    let diag = lu.u().diagonal();
    let max_pivot = diag.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min_pivot = diag.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if dim > 0 && min_pivot <= 1e-13 * max_pivot.max(1.0) {
        return Err(Error::SingularSystem { gamma });
    }
    lu.try_inverse().ok_or(Error::SingularSystem { gamma })
}

/// Evaluates a single-valued operator at `x`.
pub fn forward(op: &OperatorSpec, x: &Point) -> Result<Point> {
    op.forward(x)
}

/// Evaluates `J_{gamma op}(x)`.
pub fn resolvent(op: &OperatorSpec, gamma: f64, x: &Point) -> Result<Point> {
    op.resolvent(gamma, x)
}

/// An operator together with precomputed resolvent maps.
///
/// `resolvent` uses a cached map when one exists for exactly the requested
/// step and otherwise falls back to a fresh factorization, so results never
/// depend on which steps were cached.
#[derive(Debug, Clone)]
pub struct Operator {
    spec: OperatorSpec,
    dim: usize,
    cache: Vec<(f64, AffineMap)>,
}

impl Operator {
    pub fn new(spec: OperatorSpec, dim: usize) -> Self {
        Operator {
            spec,
            dim,
            cache: Vec::new(),
        }
    }

    /// Precomputes `J_{g A}` for each `g` in `steps`.
    pub fn with_resolvents(mut self, steps: &[f64]) -> Result<Self> {
        for &g in steps {
            if self.cache.iter().any(|(c, _)| *c == g) {
                continue;
            }
            let map = self.spec.resolvent_map(g, self.dim)?;
            self.cache.push((g, map));
        }
        Ok(self)
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn forward(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim)?;
        self.spec.forward(x)
    }

    pub fn resolvent(&self, gamma: f64, x: &Point) -> Result<Point> {
        x.check_dim(self.dim)?;
        match self.cache.iter().find(|(g, _)| *g == gamma) {
            Some((_, map)) => map.apply(x),
            None => self.spec.resolvent(gamma, x),
        }
    }
}

/// Inclusion residual of `x` for `0 in Ax + Bx + Cx`.
///
/// With `g` = [`RESIDUAL_GAMMA`] (or the designated step of a `ResolventOnly`
/// `A`):
///
/// * single-valued `A`: `||x - J_{gB}(x - g(Ax + Cx))|| / g`, a
///   forward-backward residual that vanishes exactly on `zer(A + B + C)`;
/// * set-valued `A`: lift `z = x + g v` with `v` the minimal-norm element of
///   `Bx` available in closed form (`Bx` itself when `B` is single-valued,
///   `0` for a normal cone at `x in V`), take one FDRF half-step
///   `y = J_{gA}(2x - z - g Cx)` and return `||x - y||`.
pub fn dist_to_zero(problem: &ProblemInstance, x: &Point) -> Result<f64> {
    x.check_dim(problem.dim)?;
    let gamma = match &problem.a {
        OperatorSpec::ResolventOnly { gamma: Some(g), .. } => *g,
        _ => RESIDUAL_GAMMA,
    };
    let cx = problem.c.forward(x)?;
    if problem.a.is_single_valued() {
        let ax = problem.a.forward(x)?;
        let arg = x - &(gamma * &(&ax + &cx));
        let y = problem.b.resolvent(gamma, &arg)?;
        return Ok(x.dist(&y) / gamma);
    }
    let v = match &problem.b {
        OperatorSpec::NormalConeSubspace { .. } => {
            problem.b.forward(x).map_err(|_| {
                Error::NotSupported("inclusion residual at a point outside dom B".into())
            })?
        }
        b if b.is_single_valued() => b.forward(x)?,
        _ => {
            return Err(Error::NotSupported(
                "inclusion residual with B known only through its resolvent".into(),
            ))
        }
    };
    let z = x + &(gamma * &v);
    let arg = &(&(2.0 * x) - &z) - &(gamma * &cx);
    let y = problem.a.resolvent(gamma, &arg).map_err(|e| match e {
        Error::GammaMismatch { .. } => Error::NotSupported(format!("inclusion residual: {e}")),
        other => other,
    })?;
    Ok(x.dist(&y))
}
