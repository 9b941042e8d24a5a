//! Monotone operator splitting for `0 in Ax + Bx + Cx` on `R^d`.
//!
//! `A` and `B` are maximal monotone and accessed through resolvents, `C` is
//! monotone and Lipschitz and accessed through forward evaluations.

pub mod analysis;
pub mod error;
pub mod ops;
pub mod point;
pub mod problems;
pub mod solvers;

pub use error::{Error, Result};
pub use ops::{dist_to_zero, forward, resolvent, LipschitzData, Operator, OperatorSpec};
pub use point::Point;
pub use problems::{KnownSolution, ProblemInstance};
