//! Radial profiles on a grid and radial potentials.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{ensure_finite, Error, Result};
use crate::interp::{hermite_eval, pchip_slopes};
use crate::quad::{Constants, RadialGrid};

/// Sampled radial function with its monotone-spline derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    derivative: Vec<f64>,
}

impl RadialProfile {
    pub fn from_values(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        ensure_finite(&values, "profile values")?;
        let derivative = pchip_slopes(grid.nodes(), &values);
        Ok(Self { grid, values, derivative })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::from_values(grid, values)
    }

    /// Profile built from a function of `(r, 1 - r)`, for formulas that
    /// lose precision when `1 - r` is formed by subtraction.
    pub fn from_fn_complement(grid: Arc<RadialGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = grid
            .nodes()
            .iter()
            .zip(grid.complement())
            .map(|(&r, &s)| f(r, s))
            .collect();
        Self::from_values(grid, values)
    }

    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n], derivative: vec![0.0; n] }
    }

    /// Subtract the boundary value so that the last node is zero.
    pub fn admissible(&self) -> Self {
        let b = *self.values.last().unwrap();
        let values = self.values.iter().map(|v| v - b).collect();
        Self { grid: self.grid.clone(), values, derivative: self.derivative.clone() }
    }

    /// `c * u`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            derivative: self.derivative.iter().map(|d| c * d).collect(),
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivative(&self) -> &[f64] {
        &self.derivative
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Spline value at an arbitrary radius (clamped to the grid).
    pub fn value_at(&self, r: f64) -> f64 {
        hermite_eval(self.grid.nodes(), &self.values, &self.derivative, r)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    /// Non-increasing up to rises of `rel_tol * max_abs()`.
    pub fn is_non_increasing_within(&self, rel_tol: f64) -> bool {
        let slack = rel_tol * self.max_abs();
        self.values.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Tabulated potential, interpolated by a monotone cubic.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable {
    radii: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PotentialTable {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::Config("potential table needs matching radii and values".into()));
        }
        ensure_finite(&radii, "potential radii")?;
        ensure_finite(&values, "potential values")?;
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0.0 || *radii.last().unwrap() >= 1.0 {
            return Err(Error::Config("potential radii must increase inside [0, 1)".into()));
        }
        let slopes = pchip_slopes(&radii, &values);
        Ok(Self { radii, values, slopes })
    }

    fn value(&self, r: f64) -> f64 {
        hermite_eval(&self.radii, &self.values, &self.slopes, r)
    }

    fn derivative(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r <= self.radii[0] || r >= self.radii[n - 1] {
            return 0.0;
        }
        let h = 1e-7 * (self.radii[n - 1] - self.radii[0]);
        (self.value(r + h) - self.value(r - h)) / (2.0 * h)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Radial potential `V(r) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// `(2(n-1)/n)^n (1 - r^2)^(-n)`.
    HardyCritical,
    /// Critical Hardy potential plus a constant.
    HardyPlusLambda(f64),
    Constant(f64),
    Table(PotentialTable),
}

impl Potential {
    /// `V(r)` given `s = 1 - r`.
    pub fn value_with_complement(&self, r: f64, s: f64, c: &Constants) -> f64 {
        let hardy = || c.hardy_const / (s * (2.0 - s)).powf(c.n.as_f64());
        match self {
            Potential::Zero => 0.0,
            Potential::HardyCritical => hardy(),
            Potential::HardyPlusLambda(l) => hardy() + l,
            Potential::Constant(a) => *a,
            Potential::Table(t) => t.value(r),
        }
    }

    pub fn value(&self, r: f64, c: &Constants) -> f64 {
        self.value_with_complement(r, 1.0 - r, c)
    }

    /// `V'(r)` given `s = 1 - r`.
    pub fn derivative_with_complement(&self, r: f64, s: f64, c: &Constants) -> f64 {
        let nf = c.n.as_f64();
        let hardy = || 2.0 * nf * r * c.hardy_const / (s * (2.0 - s)).powf(nf + 1.0);
        match self {
            Potential::Zero | Potential::Constant(_) => 0.0,
            Potential::HardyCritical | Potential::HardyPlusLambda(_) => hardy(),
            Potential::Table(t) => t.derivative(r),
        }
    }

    /// Whether `V` carries the critical boundary singularity.
    pub fn is_boundary_critical(&self) -> bool {
        matches!(self, Potential::HardyCritical | Potential::HardyPlusLambda(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Constant(a) => *a == 0.0,
            Potential::Table(t) => t.values.iter().all(|&v| v == 0.0),
            _ => false,
        }
    }

    /// Check `V >= 0` and that `(1 - r^2)^n V(r)` is non-increasing.
    pub fn check_admissible(&self, c: &Constants) -> Result<()> {
        match self {
            Potential::Zero | Potential::HardyCritical => Ok(()),
            Potential::HardyPlusLambda(l) | Potential::Constant(l) => {
                if l.is_finite() && *l >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Instability(format!("constant part {l} must be finite and >= 0")))
                }
            }
            Potential::Table(t) => {
                if t.values.iter().any(|&v| v < 0.0) {
                    return Err(Error::Instability("tabulated potential is negative".into()));
                }
                let nf = c.n.as_f64();
                let weighted: Vec<f64> = t
                    .radii
                    .iter()
                    .zip(&t.values)
                    .map(|(r, v)| (1.0 - r * r).powf(nf) * v)
                    .collect();
                if weighted.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
                    return Err(Error::Instability(
                        "(1 - r^2)^n V(r) must be non-increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Zero => write!(f, "zero"),
            Potential::HardyCritical => write!(f, "hardy"),
            Potential::HardyPlusLambda(l) => write!(f, "hardy+lambda={l}"),
            Potential::Constant(a) => write!(f, "const={a}"),
            Potential::Table(t) => write!(f, "table[{}]", t.radii.len()),
        }
    }
}

impl FromStr for Potential {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let number = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Config(format!("bad number in potential '{s}'")))
        };
        if s == "zero" {
            Ok(Potential::Zero)
        } else if s == "hardy" {
            Ok(Potential::HardyCritical)
        } else if let Some(v) = s.strip_prefix("hardy+lambda=") {
            Ok(Potential::HardyPlusLambda(number(v)?))
        } else if let Some(v) = s.strip_prefix("const=") {
            Ok(Potential::Constant(number(v)?))
        } else {
            Err(Error::Config(format!(
                "unknown potential '{s}' (expected zero, hardy, hardy+lambda=<x>, const=<x>)"
            )))
        }
    }
}

impl Serialize for Potential {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{make_constants, make_grid, Grading};

    fn grid() -> Arc<RadialGrid> {
        Arc::new(make_grid(256, 1e-4, Grading::default()).unwrap())
    }

    #[test]
    fn admissible_zeroes_boundary() {
        let u = RadialProfile::from_fn(grid(), |r| 2.0 - r).unwrap().admissible();
        assert_eq!(*u.values().last().unwrap(), 0.0);
        assert!(u.is_non_increasing());
    }

    #[test]
    fn spline_derivative_of_quadratic() {
        let u = RadialProfile::from_fn(grid(), |r| 1.0 - r * r).unwrap();
        let (r, d) = (u.grid().nodes(), u.derivative());
        for i in (10..240).step_by(23) {
            assert!((d[i] + 2.0 * r[i]).abs() < 1e-3, "{} {}", d[i], r[i]);
        }
    }

    #[test]
    fn scaling_is_exact() {
        let u = RadialProfile::from_fn(grid(), |r| (1.0 - r).powi(3)).unwrap();
        let v = u.scaled(2.5);
        let w = RadialProfile::from_values(grid(), v.values().to_vec()).unwrap();
        for (a, b) in v.derivative().iter().zip(w.derivative()) {
            assert!((a - b).abs() <= 1e-5 * a.abs().max(1.0));
        }
    }

    #[test]
    fn potential_descriptors_round_trip() {
        for s in ["zero", "hardy", "hardy+lambda=0.5", "const=2"] {
            let p: Potential = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("hardy+lambda=x".parse::<Potential>().is_err());
        assert!("cubic".parse::<Potential>().is_err());
    }

    #[test]
    fn hardy_potential_values() {
        let c = make_constants(2).unwrap();
        let p = Potential::HardyCritical;
        assert!((p.value(0.0, &c) - 1.0).abs() < 1e-15);
        assert!((p.value(0.5, &c) - 1.0 / 0.5625).abs() < 1e-12);
        let h = 1e-6;
        let fd = (p.value(0.5 + h, &c) - p.value(0.5 - h, &c)) / (2.0 * h);
        assert!((p.derivative_with_complement(0.5, 0.5, &c) - fd).abs() < 1e-5);
    }

    #[test]
    fn admissibility_of_potentials() {
        let c = make_constants(3).unwrap();
        assert!(Potential::HardyPlusLambda(-1.0).check_admissible(&c).is_err());
        assert!(Potential::Constant(4.0).check_admissible(&c).is_ok());
        let growing = PotentialTable::new(vec![0.0, 0.5, 0.9], vec![0.0, 1.0, 100.0]).unwrap();
        assert!(Potential::Table(growing).check_admissible(&c).is_err());
        let flat = PotentialTable::new(vec![0.0, 0.5, 0.9], vec![1.0, 1.0, 1.0]).unwrap();
        assert!(Potential::Table(flat).check_admissible(&c).is_ok());
    }
}
