//! Non-increasing rearrangement with respect to hyperbolic volume.
//!
//! The profile is treated as piecewise linear in the hyperbolic volume
//! coordinate. Its distribution function is then piecewise linear between the
//! sorted node values, so it can be tabulated exactly and inverted at the
//! ball volumes of the grid nodes.

use crate::error::{Error, Result};
use crate::functionals::hyperbolic_ball_volumes;
use crate::profile::RadialProfile;
use crate::quad::Dimension;

/// Hyperbolic distribution function of a profile, tabulated at its levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    /// Distinct node values, decreasing.
    pub levels: Vec<f64>,
    /// Measure of `{u > levels[k]}`.
    pub measure: Vec<f64>,
    /// Measure of `{u = levels[k]}` (flat pieces).
    pub atoms: Vec<f64>,
    /// Slope `-d mu / dt` on `(levels[k+1], levels[k])`.
    pub slopes: Vec<f64>,
}

impl Distribution {
    /// Measure of `{u > t}`.
    pub fn measure_above(&self, t: f64) -> f64 {
        let l = &self.levels;
        if t >= l[0] {
            return 0.0;
        }
        // First index with level <= t.
        let k = l.partition_point(|&x| x > t);
        if k == l.len() {
            return self.measure[k - 1] + self.atoms[k - 1];
        }
        if l[k] == t {
            return self.measure[k];
        }
        let j = k - 1;
        self.measure[j] + self.atoms[j] + self.slopes[j] * (l[j] - t)
    }

    /// Total measure.
    pub fn total(&self) -> f64 {
        let k = self.levels.len() - 1;
        self.measure[k] + self.atoms[k]
    }
}

/// Tabulate the hyperbolic distribution function of `u`.
pub fn distribution(u: &RadialProfile, n: Dimension) -> Distribution {
    let vols = hyperbolic_ball_volumes(u.grid(), n);
    distribution_with_volumes(u.values(), &vols)
}

fn distribution_with_volumes(values: &[f64], vols: &[f64]) -> Distribution {
    let mut levels: Vec<f64> = values.to_vec();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    levels.dedup();
    let k = levels.len();
    let index = |v: f64| levels.partition_point(|&x| x > v);

    let mut atoms = vec![0.0; k];
    // Inner ball where the profile is taken constant.
    atoms[index(values[0])] += vols[0];
    let mut d_slope = vec![0.0; k + 1];
    for j in 0..values.len() - 1 {
        let len = vols[j + 1] - vols[j];
        let (lo, hi) = if values[j] <= values[j + 1] {
            (values[j], values[j + 1])
        } else {
            (values[j + 1], values[j])
        };
        if hi == lo {
            atoms[index(lo)] += len;
        } else {
            let s = len / (hi - lo);
            d_slope[index(hi)] += s;
            d_slope[index(lo)] -= s;
        }
    }
    // Neumaier-compensated prefix sums.
    let mut slopes = vec![0.0; k];
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for i in 0..k {
        let x = d_slope[i];
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        slopes[i] = (sum + comp).max(0.0);
    }
    let mut measure = vec![0.0; k];
    for i in 1..k {
        measure[i] = measure[i - 1] + atoms[i - 1] + slopes[i - 1] * (levels[i - 1] - levels[i]);
    }
    Distribution { levels, measure, atoms, slopes }
}

/// Radial non-increasing rearrangement of `u >= 0` equimeasurable for the
/// hyperbolic volume. Non-increasing inputs are returned unchanged.
pub fn rearrange(u: &RadialProfile, n: Dimension) -> Result<RadialProfile> {
    if !u.is_nonnegative() {
        return Err(Error::Precondition("rearrangement needs a nonnegative profile".into()));
    }
    if u.is_non_increasing() {
        return Ok(u.clone());
    }
    let vols = hyperbolic_ball_volumes(u.grid(), n);
    let dist = distribution_with_volumes(u.values(), &vols);
    let levels = &dist.levels;
    let last = levels.len() - 1;
    let mut out = Vec::with_capacity(vols.len());
    let mut k = 0usize;
    for &target in &vols {
        let value = loop {
            if target < dist.measure[k] + dist.atoms[k] {
                break levels[k];
            }
            if k == last {
                break levels[last];
            }
            if target < dist.measure[k + 1] && dist.slopes[k] > 0.0 {
                let t = levels[k] - (target - dist.measure[k] - dist.atoms[k]) / dist.slopes[k];
                break t.clamp(levels[k + 1], levels[k]);
            }
            k += 1;
        };
        out.push(value);
    }
    *out.last_mut().unwrap() = levels[last];
    for i in 1..out.len() {
        if out[i] > out[i - 1] {
            out[i] = out[i - 1];
        }
    }
    RadialProfile::from_values(u.grid_arc().clone(), out)
}

/// Largest relative gap between the level-set measures of `u` and `w` at
/// `thresholds` levels spread evenly strictly inside `(0, max u)`.
pub fn equimeasurability_defect(u: &RadialProfile, w: &RadialProfile, n: Dimension, thresholds: usize) -> f64 {
    let du = distribution(u, n);
    let dw = distribution(w, n);
    let peak = du.levels[0];
    (1..=thresholds)
        .map(|k| {
            let t = peak * k as f64 / (thresholds + 1) as f64;
            let a = du.measure_above(t);
            (a - dw.measure_above(t)).abs() / a
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{check_hardy_littlewood, check_polya_szego, hyperbolic_norm_n};
    use crate::quad::{make_grid, Grading};
    use std::sync::Arc;

    fn bump(np: usize) -> RadialProfile {
        let g = Arc::new(make_grid(np, 1e-6, Grading::default()).unwrap());
        RadialProfile::from_fn_complement(g, |r, s| r * (s - 1e-6)).unwrap()
    }

    #[test]
    fn monotone_profiles_are_fixed() {
        let g = Arc::new(make_grid(512, 1e-6, Grading::default()).unwrap());
        let u = RadialProfile::from_fn_complement(g, |_, s| s * s).unwrap();
        let n = Dimension::new(2).unwrap();
        assert_eq!(rearrange(&u, n).unwrap().values(), u.values());
        let ps = check_polya_szego(&u, n).unwrap();
        assert_eq!(ps.margin, 0.0);
        assert_eq!(check_hardy_littlewood(&u, n, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn bump_is_rearranged() {
        let n = Dimension::new(2).unwrap();
        let u = bump(16384);
        let star = rearrange(&u, n).unwrap();
        assert!(star.is_non_increasing());
        let peak = u.values().iter().cloned().fold(0.0, f64::max);
        assert_eq!(star.values()[0], peak);
        assert_eq!(*star.values().last().unwrap(), 0.0);
        // Level-set measures at 100 thresholds.
        let du = distribution(&u, n);
        let ds = distribution(&star, n);
        for k in 1..=100 {
            let t = peak * k as f64 / 101.0;
            let (a, b) = (du.measure_above(t), ds.measure_above(t));
            assert!((a - b).abs() <= 1e-5 * a, "{t}: {a} {b}");
        }
        let again = rearrange(&star, n).unwrap();
        assert_eq!(again.values(), star.values());
        assert!(check_polya_szego(&u, n).unwrap().margin > 0.0);
        assert!(check_hardy_littlewood(&u, n, 0.0).unwrap().value >= 0.0);
        let n3 = Dimension::new(3).unwrap();
        assert!(check_hardy_littlewood(&u, n3, 1.0).unwrap().value >= 0.0);
    }

    #[test]
    fn hyperbolic_norm_preserved() {
        let n = Dimension::new(2).unwrap();
        let u = bump(16384);
        let star = rearrange(&u, n).unwrap();
        let a = hyperbolic_norm_n(&u, n).unwrap();
        let b = hyperbolic_norm_n(&star, n).unwrap();
        assert!((a - b).abs() < 1e-6 * a, "{a} {b}");
    }

    #[test]
    fn negative_profiles_rejected() {
        let g = Arc::new(make_grid(64, 1e-3, Grading::default()).unwrap());
        let u = RadialProfile::from_fn(g, |r| r - 0.5).unwrap();
        assert!(rearrange(&u, Dimension::new(2).unwrap()).is_err());
    }
}
