//! Random matrix model for generated instances.
//!
//! Entries are i.i.d. standard normal scaled by `1/sqrt(d)`; symmetric parts
//! are shifted by a multiple of the identity to fix their smallest
//! eigenvalue, antisymmetric parts give skew operators.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ops::spectral_norm;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let scale = 1.0 / (dim.max(1) as f64).sqrt();
    DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal) * scale)
}

/// Symmetric matrix with smallest eigenvalue exactly `floor` (up to rounding).
pub fn shifted_symmetric<R: Rng>(rng: &mut R, dim: usize, floor: f64) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, dim);
    let mut s = (&g + g.transpose()) * 0.5;
    let lmin = s.clone().symmetric_eigenvalues().min();
    for i in 0..dim {
        s[(i, i)] += floor - lmin;
    }
    // exact symmetry after the shift
    (&s + s.transpose()) * 0.5
}

pub fn skew<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, dim);
    (&g - g.transpose()) * 0.5
}

/// Random monotone matrix: symmetric part with `lambda_min = 1` plus a skew part.
pub fn monotone<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    shifted_symmetric(rng, dim, 1.0) + skew(rng, dim)
}

/// Rescales `m` so its spectral norm equals `target`.
pub fn scale_to_norm(m: DMatrix<f64>, target: f64) -> DMatrix<f64> {
    let s = spectral_norm(&m);
    if s == 0.0 {
        m
    } else {
        m * (target / s)
    }
}
