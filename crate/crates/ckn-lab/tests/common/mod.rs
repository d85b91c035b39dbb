#![allow(dead_code)]

use std::sync::Arc;

use ckn_lab::{Field, FsParameters, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn params32() -> FsParameters {
    FsParameters::new(3, 2.0).unwrap()
}

pub fn small_grid(params: FsParameters, n_t: usize, max_mode: usize) -> Arc<Grid> {
    Grid::around(params, &[0.0], 20.0, n_t, max_mode).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth random field: a few Gaussian bumps in every mode.
pub fn random_field(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
    let span = grid.t_max() - grid.t_min();
    let modes = (0..grid.n_modes())
        .map(|_| {
            let bumps: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| {
                    (
                        rng.random_range(-1.0..1.0),
                        grid.t_min() + span * rng.random_range(0.3..0.7),
                        rng.random_range(0.5..3.0),
                    )
                })
                .collect();
            grid.sample(|t| bumps.iter().map(|(a, c, w)| a * (-((t - c) / w).powi(2)).exp()).sum())
        })
        .collect();
    Field::from_modes(grid, modes).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
