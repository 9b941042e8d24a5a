//! Versioned JSON encoding of [`ProblemInstance`].
//!
//! ```text
//! {
//!   "version": 1,
//!   "dim": 2,
//!   "operators": {"A": {...}, "B": {...}, "C": {...}},
//!   "lip": {"mu": 1.0, "kappa": null},
//!   "solution": {"x": [...], "u": [...]} | null,
//!   "tags": ["counterexample"]
//! }
//! ```
//!
//! Operators are tagged by `"type"`: `zero`, `affine {m, b}`, `skew {m}`,
//! `normal_cone_subspace {p}`, `quadratic_gradient {q, b}`,
//! `resolvent_only {r, gamma}` and `sum {left, right}`. Matrices are
//! row-major arrays of arrays. Floats are written in shortest round-trip
//! form, so `load(save(p)) == p` bit for bit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{KnownSolution, ProblemInstance};
use crate::error::{Error, Result};
use crate::ops::{LipschitzData, OperatorSpec};
use crate::point::Point;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ProblemDoc {
    version: u32,
    dim: usize,
    operators: OperatorsDoc,
    lip: LipDoc,
    #[serde(default)]
    solution: Option<SolutionDoc>,
    #[serde(default)]
    tags: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct OperatorsDoc {
    #[serde(rename = "A")]
    a: OperatorDoc,
    #[serde(rename = "B")]
    b: OperatorDoc,
    #[serde(rename = "C")]
    c: OperatorDoc,
}

#[derive(Serialize, Deserialize)]
struct LipDoc {
    mu: f64,
    #[serde(default)]
    kappa: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct SolutionDoc {
    x: Vec<f64>,
    u: Vec<f64>,
}

type Rows = Vec<Vec<f64>>;

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum OperatorDoc {
    Zero,
    Affine { m: Rows, b: Vec<f64> },
    Skew { m: Rows },
    NormalConeSubspace { p: Rows },
    QuadraticGradient { q: Rows, b: Vec<f64> },
    ResolventOnly {
        r: Rows,
        #[serde(default)]
        gamma: Option<f64>,
    },
    Sum {
        left: Box<OperatorDoc>,
        right: Box<OperatorDoc>,
    },
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::SchemaViolation {
        path: path.into(),
        message: message.into(),
    }
}

fn rows_of(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from(rows: &Rows, dim: usize, path: &str) -> Result<DMatrix<f64>> {
    if rows.len() != dim {
        return Err(violation(path, format!("expected {dim} rows, found {}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(violation(
                format!("{path}[{i}]"),
                format!("expected {dim} columns, found {}", row.len()),
            ));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(violation(format!("{path}[{i}][{j}]"), "non-finite entry"));
        }
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn point_from(v: &[f64], dim: usize, path: &str) -> Result<Point> {
    if v.len() != dim {
        return Err(violation(path, format!("expected length {dim}, found {}", v.len())));
    }
    Point::new(v.to_vec()).map_err(|e| violation(path, e.to_string()))
}

fn op_to_doc(op: &OperatorSpec) -> OperatorDoc {
    match op {
        OperatorSpec::Zero => OperatorDoc::Zero,
        OperatorSpec::Affine { m, b } => OperatorDoc::Affine {
            m: rows_of(m),
            b: b.to_vec(),
        },
        OperatorSpec::Skew { m } => OperatorDoc::Skew { m: rows_of(m) },
        OperatorSpec::NormalConeSubspace { p } => OperatorDoc::NormalConeSubspace { p: rows_of(p) },
        OperatorSpec::QuadraticGradient { q, b } => OperatorDoc::QuadraticGradient {
            q: rows_of(q),
            b: b.to_vec(),
        },
        OperatorSpec::ResolventOnly { r, gamma } => OperatorDoc::ResolventOnly {
            r: rows_of(r),
            gamma: *gamma,
        },
        OperatorSpec::Sum { left, right } => OperatorDoc::Sum {
            left: Box::new(op_to_doc(left)),
            right: Box::new(op_to_doc(right)),
        },
    }
}

fn op_from_doc(doc: &OperatorDoc, dim: usize, path: &str) -> Result<OperatorSpec> {
    Ok(match doc {
        OperatorDoc::Zero => OperatorSpec::Zero,
        OperatorDoc::Affine { m, b } => OperatorSpec::Affine {
            m: matrix_from(m, dim, &format!("{path}.m"))?,
            b: point_from(b, dim, &format!("{path}.b"))?,
        },
        OperatorDoc::Skew { m } => OperatorSpec::Skew {
            m: matrix_from(m, dim, &format!("{path}.m"))?,
        },
        OperatorDoc::NormalConeSubspace { p } => OperatorSpec::NormalConeSubspace {
            p: matrix_from(p, dim, &format!("{path}.p"))?,
        },
        OperatorDoc::QuadraticGradient { q, b } => OperatorSpec::QuadraticGradient {
            q: matrix_from(q, dim, &format!("{path}.q"))?,
            b: point_from(b, dim, &format!("{path}.b"))?,
        },
        OperatorDoc::ResolventOnly { r, gamma } => {
            if let Some(g) = gamma {
                if !(*g > 0.0 && g.is_finite()) {
                    return Err(violation(format!("{path}.gamma"), "must be positive"));
                }
            }
            OperatorSpec::ResolventOnly {
                r: matrix_from(r, dim, &format!("{path}.r"))?,
                gamma: *gamma,
            }
        }
        OperatorDoc::Sum { left, right } => OperatorSpec::Sum {
            left: Box::new(op_from_doc(left, dim, &format!("{path}.left"))?),
            right: Box::new(op_from_doc(right, dim, &format!("{path}.right"))?),
        },
    })
}

/// Serializes an instance as pretty-printed JSON.
pub fn save(instance: &ProblemInstance) -> Vec<u8> {
    let doc = ProblemDoc {
        version: SCHEMA_VERSION,
        dim: instance.dim,
        operators: OperatorsDoc {
            a: op_to_doc(&instance.a),
            b: op_to_doc(&instance.b),
            c: op_to_doc(&instance.c),
        },
        lip: LipDoc {
            mu: instance.lip.mu,
            kappa: instance.lip.kappa,
        },
        solution: instance.known_solution.as_ref().map(|s| SolutionDoc {
            x: s.x.to_vec(),
            u: s.u.to_vec(),
        }),
        tags: instance.tags.clone(),
    };
    serde_json::to_vec_pretty(&doc).expect("problem documents always serialize")
}

/// Parses an instance, reporting the JSON path of the first schema violation.
///
/// Only the schema and shapes are checked here; semantic invariants
/// (skewness, monotonicity, the solution certificate) are left to
/// [`ProblemInstance::validate`] so that broken files can still be inspected.
pub fn load(bytes: &[u8]) -> Result<ProblemInstance> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: ProblemDoc = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let message = err.inner().to_string();
        // serde reports a missing key at its parent; name the key itself.
        let path = match missing_field(&message) {
            Some(field) if path == "." => field.to_string(),
            Some(field) => format!("{path}.{field}"),
            None => path,
        };
        violation(path, message)
    })?;
    if doc.version != SCHEMA_VERSION {
        return Err(violation(
            "version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", doc.version),
        ));
    }
    if doc.dim == 0 {
        return Err(violation("dim", "must be positive"));
    }
    let dim = doc.dim;
    let a = op_from_doc(&doc.operators.a, dim, "operators.A")?;
    let b = op_from_doc(&doc.operators.b, dim, "operators.B")?;
    let c = op_from_doc(&doc.operators.c, dim, "operators.C")?;
    let lip = LipschitzData::new(doc.lip.mu, doc.lip.kappa)
        .map_err(|e| violation("lip", e.to_string()))?;
    let known_solution = match &doc.solution {
        Some(s) => Some(KnownSolution {
            x: point_from(&s.x, dim, "solution.x")?,
            u: point_from(&s.u, dim, "solution.u")?,
        }),
        None => None,
    };
    Ok(ProblemInstance {
        dim,
        a,
        b,
        c,
        lip,
        known_solution,
        tags: doc.tags,
    })
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}
