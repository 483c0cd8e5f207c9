//! Numerical estimates of the constants in the embedding `‖u‖ ≤ C̄ ‖u‖_W`
//! and in the cut-off inequality
//!
//! ```text
//! ‖∇u‖²_{L^{2n/(n+2)}(B(0,2r))} + ‖u‖²_{L²(Rⁿ \ B(0,r))} ≥ C ‖u‖²_{L²}.
//! ```
//!
//! Both are searched over sums of Gaussian bumps. The embedding search is a
//! maximization (random draws followed by coordinate-wise ascent on the bump
//! parameters), the cut-off search a minimization over random draws.

use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;

use crate::grid::{l2_norm, w_norm, Grid};
use crate::initial::{bump_field, random_bumps, rng, Bump};
use crate::{Error, Result};

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_ASCENT_STEPS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingEstimate {
    /// `max ‖u‖ / ‖u‖_W` over the searched fields.
    pub constant: f64,
    /// Best ratio found by the random draws alone.
    pub random_best: f64,
    pub evaluations: usize,
    pub best_field: Vec<f64>,
}

/// `‖u‖ / ‖u‖_W`; `None` for the zero field.
pub fn embedding_ratio(grid: &Grid, u: &[f64], p: f64) -> Option<f64> {
    let l2 = l2_norm(grid, u);
    if !(l2 > 0.0) {
        return None;
    }
    Some(l2 / w_norm(grid, u, p))
}

/// Estimates `C̄_h` on `grid` from `trials` random bump fields and `ascent_steps`
/// sweeps of coordinate ascent with step `h`.
pub fn estimate_embedding_constant(
    grid: &Grid,
    p: f64,
    trials: usize,
    ascent_steps: usize,
    seed: u64,
) -> Result<EmbeddingEstimate> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let mut rng = rng(seed);
    let mut evaluations = 0;
    let mut score = |bumps: &[Bump]| -> Result<Option<f64>> {
        evaluations += 1;
        let u = bump_field(grid, bumps);
        match embedding_ratio(grid, &u, p) {
            Some(r) if r.is_finite() => Ok(Some(r)),
            Some(_) => Err(Error::Degenerate(
                "‖u‖_W vanishes on a nonzero field; the weights are not admissible".into(),
            )),
            None => Ok(None),
        }
    };

    let mut best: Option<(f64, Vec<Bump>)> = None;
    let mut drawn = 0;
    while drawn < trials {
        let bumps = random_bumps(grid, &mut rng);
        let Some(r) = score(&bumps)? else {
            continue; // degenerate draw, resample
        };
        drawn += 1;
        if best.as_ref().is_none_or(|(b, _)| r > *b) {
            best = Some((r, bumps));
        }
    }
    let (mut best_ratio, mut bumps) = best.expect("trials > 0");
    let random_best = best_ratio;

    let h = grid.spacing();
    let n = grid.dim();
    let r_max = grid.radius();
    for _ in 0..ascent_steps {
        let mut improved = false;
        for b in 0..bumps.len() {
            for coord in 0..(2 + n) {
                for sign in [1.0, -1.0] {
                    let mut trial = bumps.clone();
                    let t = &mut trial[b];
                    match coord {
                        0 => t.amplitude += sign * h * t.amplitude.abs().max(1e-3),
                        1 => t.width = (t.width + sign * h).clamp(h, r_max),
                        c => t.center[c - 2] = (t.center[c - 2] + sign * h).clamp(-r_max, r_max),
                    }
                    if let Some(r) = score(&trial)? {
                        if r > best_ratio {
                            best_ratio = r;
                            bumps = trial;
                            improved = true;
                            break;
                        }
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(EmbeddingEstimate {
        constant: best_ratio,
        random_best,
        evaluations,
        best_field: bump_field(grid, &bumps),
    })
}

/// Left side of the cut-off inequality divided by `‖u‖²`.
pub fn cutoff_ratio(grid: &Grid, u: &[f64], r: f64) -> Option<f64> {
    let l2_sq = grid.weighted_square_integral(u, None, |_| true);
    if !(l2_sq > 0.0) {
        return None;
    }
    let n = grid.dim() as f64;
    let q = 2.0 * n / (n + 2.0);
    let inner = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>() < 4.0 * r * r;
    let grad = grid.grad_power_integral(u, q, false, inner).powf(1.0 / q);
    let outer = grid.weighted_square_integral(u, None, |x| x.iter().map(|c| c * c).sum::<f64>() >= r * r);
    Some((grad * grad + outer) / l2_sq)
}

/// Smallest cut-off ratio over `trials` random smooth fields (2-D only, where
/// `2n/(n+2) = 1` makes the gradient term a norm).
pub fn estimate_cutoff_constant(grid: &Grid, r: f64, trials: usize, seed: u64) -> Result<f64> {
    if grid.dim() != 2 {
        return Err(Error::invalid("the cut-off inequality check is restricted to n = 2"));
    }
    if !(r > 0.0) || trials == 0 {
        return Err(Error::invalid("radius and trial count must be positive"));
    }
    let mut rng = rng(seed);
    let mut best = f64::INFINITY;
    let mut drawn = 0;
    while drawn < trials {
        let bumps = random_bumps(grid, &mut rng);
        let jitter: f64 = rng.gen_range(0.5..2.0);
        let scaled: Vec<Bump> = bumps
            .iter()
            .map(|b| Bump {
                width: (b.width * jitter).min(grid.radius()),
                ..*b
            })
            .collect();
        if let Some(v) = cutoff_ratio(grid, &bump_field(grid, &scaled), r) {
            best = best.min(v);
            drawn += 1;
        }
    }
    Ok(best)
}
