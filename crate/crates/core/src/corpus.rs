//! Seeded profile corpora.
//!
//! Monotone profiles are decreasing piecewise-linear functions through sorted
//! uniform draws, smoothed by convolving each kink with a Gaussian. Bumps are
//! `A r^p (1-r)^q` with the boundary value removed.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::profile::RadialProfile;
use crate::quad::RadialGrid;

/// Width of the Gaussian mollifier for monotone profiles.
pub const MOLLIFIER_WIDTH: f64 = 0.05;

/// `E[max(x + w Z, 0)]` for standard normal `Z`: a smoothed ramp.
fn smooth_ramp(x: f64, w: f64) -> f64 {
    let z = x / w;
    let cdf = 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    x * cdf + w * pdf
}

/// Draw `size` non-increasing admissible profiles on `grid`.
pub fn monotone_corpus(grid: &Arc<RadialGrid>, size: usize, seed: u64) -> Result<Vec<RadialProfile>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size).map(|_| monotone_member(grid, &mut rng)).collect()
}

fn monotone_member(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> Result<RadialProfile> {
    let kinks = rng.random_range(2..=6usize);
    let mut xs: Vec<f64> = (0..kinks).map(|_| rng.random::<f64>()).collect();
    let mut ys: Vec<f64> = (0..kinks).map(|_| rng.random::<f64>()).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // Knots (0, 1), (x_k, y_k), (1, 0); slopes are all nonpositive.
    let mut knots = vec![(0.0, 1.0)];
    knots.extend(xs.iter().copied().zip(ys.iter().copied()));
    knots.push((1.0, 0.0));
    knots.dedup_by(|b, a| b.0 <= a.0);
    let slopes: Vec<f64> = knots.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let amplitude = 0.5 + rng.random::<f64>();
    let eval = |r: f64| {
        let mut v = knots[0].1 + slopes[0] * r;
        for k in 1..slopes.len() {
            v += (slopes[k] - slopes[k - 1]) * smooth_ramp(r - knots[k].0, MOLLIFIER_WIDTH);
        }
        amplitude * v
    };
    let raw = RadialProfile::from_fn(grid.clone(), eval)?;
    let mut values: Vec<f64> = raw.admissible().values().to_vec();
    for i in 1..values.len() {
        if values[i] > values[i - 1] {
            values[i] = values[i - 1];
        }
    }
    RadialProfile::from_values(grid.clone(), values)
}

/// Draw `size` nonnegative bumps vanishing at the last node.
pub fn bump_corpus(grid: &Arc<RadialGrid>, size: usize, seed: u64) -> Result<Vec<RadialProfile>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = grid.last();
    let eps = grid.epsilon();
    (0..size)
        .map(|_| {
            let amp = 0.5 + rng.random::<f64>();
            let p = rng.random_range(1.0..4.0);
            let q = rng.random_range(1.0..4.0);
            let edge = amp * b.powf(p) * eps.powf(q);
            RadialProfile::from_fn_complement(grid.clone(), |r, s| (amp * r.powf(p) * s.powf(q) - edge).max(0.0))
        })
        .collect()
}
