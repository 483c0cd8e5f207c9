//! Initial fields: seeded Gaussian-bump sums, sine modes and single Gaussians.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{l2_norm, Grid};
use crate::{Error, Result};

/// Deterministic generator used for every random field in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One Gaussian bump `a exp(-|x - c|² / w²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub amplitude: f64,
    pub center: [f64; 2],
    pub width: f64,
}

impl Bump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        self.amplitude * (-d2 / (self.width * self.width)).exp()
    }
}

/// Draws 1–5 bumps with centers in the inner half of the domain and widths in `[h, R/2]`.
pub fn random_bumps(grid: &Grid, rng: &mut impl Rng) -> Vec<Bump> {
    let count = rng.gen_range(1..=5);
    let r = grid.radius();
    let h = grid.spacing();
    let n = grid.dim();
    (0..count)
        .map(|_| {
            let mut center = [0.0; 2];
            for c in center.iter_mut().take(n) {
                *c = rng.gen_range(-0.5 * r..=0.5 * r);
            }
            Bump {
                amplitude: rng.gen_range(-1.0..=1.0),
                center,
                width: rng.gen_range((2.0 * h).min(0.5 * r)..=0.5 * r),
            }
        })
        .collect()
}

pub fn bump_field(grid: &Grid, bumps: &[Bump]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| bumps.iter().map(|b| b.eval(grid.coord(i))).sum())
        .collect()
}

/// Rescales `u` to the given L² norm; a zero field cannot be rescaled.
pub fn scale_to_norm(grid: &Grid, u: &mut [f64], target: f64) -> Result<()> {
    let norm = l2_norm(grid, u);
    if norm == 0.0 {
        if target == 0.0 {
            return Ok(());
        }
        return Err(Error::Degenerate("cannot rescale the zero field".into()));
    }
    let s = target / norm;
    u.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

/// A random smooth field with L² norm `target`, resampling degenerate draws.
pub fn random_smooth_field(grid: &Grid, rng: &mut impl Rng, target: f64) -> Vec<f64> {
    loop {
        let mut u = bump_field(grid, &random_bumps(grid, rng));
        if l2_norm(grid, &u) > 1e-12 && scale_to_norm(grid, &mut u, target).is_ok() {
            return u;
        }
    }
}

/// Tensor-product sine mode `Π_a sin(k π (x_a + R) / (2R))`, an exact eigenvector of the
/// discrete Dirichlet Laplacian.
pub fn sine_mode(grid: &Grid, k: usize, amplitude: f64) -> Vec<f64> {
    let r = grid.radius();
    (0..grid.len())
        .map(|i| {
            amplitude
                * grid
                    .coord(i)
                    .iter()
                    .map(|x| (k as f64 * PI * (x + r) / (2.0 * r)).sin())
                    .product::<f64>()
        })
        .collect()
}

/// `amplitude exp(-|x|² / width²)`.
pub fn gaussian(grid: &Grid, amplitude: f64, width: f64) -> Vec<f64> {
    let b = Bump {
        amplitude,
        center: [0.0; 2],
        width,
    };
    bump_field(grid, &[b])
}
