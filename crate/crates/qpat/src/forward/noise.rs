//! Data perturbations of prescribed L² size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::norms::interior_l2_norm;
use crate::grid::ScalarField;

/// Adds a pseudo-random Gaussian field rescaled so its interior L² norm is
/// exactly `target_eps`. Deterministic per seed; `target_eps = 0` returns the
/// input unchanged.
pub fn add_noise(h: &ScalarField, target_eps: f64, seed: u64) -> Result<ScalarField> {
    if target_eps < 0.0 {
        return Err(Error::Parameter(format!(
            "noise size must be nonnegative, got {target_eps}"
        )));
    }
    if target_eps == 0.0 {
        return Ok(h.clone());
    }
    let grid = h.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..grid.num_nodes())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let eta = ScalarField::from_values(grid, raw)?;
    let norm = interior_l2_norm(&eta);
    debug_assert!(norm > 0.0);
    let scale = target_eps / norm;
    h.zip(&eta, |a, b| a + scale * b)
}
