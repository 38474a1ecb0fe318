//! Constants, graded radial grids, trapezoid quadrature and the truncated
//! exponential series.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Spatial dimension `n >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Dimension(u32);

impl Dimension {
    pub fn new(n: u32) -> Result<Self> {
        if n >= 2 {
            Ok(Self(n))
        } else {
            Err(Error::InvalidDimension(n))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }
}

impl TryFrom<u32> for Dimension {
    type Error = Error;
    fn try_from(n: u32) -> Result<Self> {
        Self::new(n)
    }
}

impl From<Dimension> for u32 {
    fn from(d: Dimension) -> u32 {
        d.0
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Dimension-dependent constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub n: Dimension,
    /// Surface area of the unit sphere in `R^n`.
    pub omega: f64,
    /// Moser exponent `n * omega^(1/(n-1))`.
    pub alpha_n: f64,
    /// Sharp Hardy constant `(2(n-1)/n)^n` on the ball.
    pub hardy_const: f64,
}

impl Constants {
    pub fn new(n: Dimension) -> Self {
        let nf = n.as_f64();
        let omega = 2.0 * PI.powf(nf / 2.0) / libm::tgamma(nf / 2.0);
        let alpha_n = nf * omega.powf(1.0 / (nf - 1.0));
        let hardy_const = (2.0 * (nf - 1.0) / nf).powf(nf);
        Self { n, omega, alpha_n, hardy_const }
    }

    /// Pole coefficient `gamma = omega^(-1/(n-1))` of the Green function.
    pub fn gamma(&self) -> f64 {
        self.omega.powf(-1.0 / (self.n.as_f64() - 1.0))
    }

    /// Exponent `n/(n-1)` of the Moser-Trudinger integrand.
    pub fn conjugate(&self) -> f64 {
        let nf = self.n.as_f64();
        nf / (nf - 1.0)
    }
}

/// Build the constants for a raw dimension value.
pub fn make_constants(n: u32) -> Result<Constants> {
    Ok(Constants::new(Dimension::new(n)?))
}

/// Clustering parameters of a [`RadialGrid`].
///
/// Nodes are uniform in the logit variable `z = ln(r/(1-r))`, which gives
/// geometric spacing toward both `0` and `1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grading {
    /// Position of the first node.
    pub first_node: f64,
}

impl Default for Grading {
    fn default() -> Self {
        Self { first_node: 1e-10 }
    }
}

/// Strictly increasing mesh on `[first_node, 1 - epsilon]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    /// `1 - r_i`, evaluated without cancellation near the boundary.
    complement: Vec<f64>,
    weights: Vec<f64>,
    epsilon: f64,
    grading: Grading,
}

/// Build a logit-graded grid with `n_points` nodes ending at `1 - epsilon`.
pub fn make_grid(n_points: usize, epsilon: f64, grading: Grading) -> Result<RadialGrid> {
    if n_points < 16 {
        return Err(Error::Config(format!("grid needs at least 16 points, got {n_points}")));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    let first = grading.first_node;
    if !(first > 0.0 && first < 1.0 - epsilon) {
        return Err(Error::Config(format!("first node {first} outside (0, 1 - epsilon)")));
    }
    let z0 = (first / (1.0 - first)).ln();
    let z1 = ((1.0 - epsilon) / epsilon).ln();
    let dz = (z1 - z0) / (n_points - 1) as f64;
    let mut nodes = Vec::with_capacity(n_points);
    let mut complement = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let z = z0 + dz * i as f64;
        nodes.push(1.0 / (1.0 + (-z).exp()));
        complement.push(1.0 / (1.0 + z.exp()));
    }
    nodes[0] = first;
    complement[0] = 1.0 - first;
    nodes[n_points - 1] = 1.0 - epsilon;
    complement[n_points - 1] = epsilon;
    RadialGrid::assemble(nodes, complement, epsilon, grading)
}

impl RadialGrid {
    /// Grid on arbitrary strictly increasing nodes in `(0, 1)`.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Config("grid needs at least two nodes".into()));
        }
        ensure_finite(&nodes, "grid nodes")?;
        let last = *nodes.last().unwrap();
        if !(nodes[0] > 0.0 && last < 1.0) {
            return Err(Error::Config("grid nodes must lie in (0, 1)".into()));
        }
        let complement = nodes.iter().map(|r| 1.0 - r).collect();
        let grading = Grading { first_node: nodes[0] };
        Self::assemble(nodes, complement, 1.0 - last, grading)
    }

    fn assemble(nodes: Vec<f64>, complement: Vec<f64>, epsilon: f64, grading: Grading) -> Result<Self> {
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("grid nodes must be strictly increasing".into()));
        }
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let h = 0.5 * (nodes[i + 1] - nodes[i]);
            weights[i] += h;
            weights[i + 1] += h;
        }
        Ok(Self { nodes, complement, weights, epsilon, grading })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `1 - r_i` at every node.
    pub fn complement(&self) -> &[f64] {
        &self.complement
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `ln r_i`, taken from the complement near the boundary.
    pub fn ln_node(&self, i: usize) -> f64 {
        let r = self.nodes[i];
        if r > 0.5 {
            (-self.complement[i]).ln_1p()
        } else {
            r.ln()
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// `1 - r_i^2` computed as `s (2 - s)` with `s = 1 - r_i`.
    pub fn one_minus_sq(&self, i: usize) -> f64 {
        let s = self.complement[i];
        s * (2.0 - s)
    }

    /// Composite trapezoid integral of node samples.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        integrate(samples, self)
    }

    /// Running trapezoid integral, starting at zero on the first node.
    pub fn cumulative(&self, samples: &[f64]) -> Result<Vec<f64>> {
        self.check_samples(samples)?;
        let mut out = Vec::with_capacity(samples.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 0..samples.len() - 1 {
            acc += 0.5 * (self.nodes[i + 1] - self.nodes[i]) * (samples[i] + samples[i + 1]);
            out.push(acc);
        }
        Ok(out)
    }

    /// Index of the cell `[r_k, r_{k+1}]` containing `r`, clamped to the grid.
    pub fn locate(&self, r: f64) -> usize {
        let k = self.nodes.partition_point(|&x| x <= r);
        k.saturating_sub(1).min(self.nodes.len() - 2)
    }

    fn check_samples(&self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.nodes.len() {
            return Err(Error::Config(format!(
                "{} samples for a grid of {} nodes",
                samples.len(),
                self.nodes.len()
            )));
        }
        ensure_finite(samples, "quadrature samples")
    }
}

/// Composite trapezoid rule over the grid; exact for piecewise-linear data.
pub fn integrate(samples: &[f64], grid: &RadialGrid) -> Result<f64> {
    grid.check_samples(samples)?;
    Ok(samples.iter().zip(&grid.weights).map(|(f, w)| f * w).sum())
}

/// `E_m(t) = sum_{k >= m} t^k / k!`.
///
/// Uses the tail series for `t < m/2` and `e^t` minus a compensated partial
/// sum otherwise.
pub fn truncated_exp(t: f64, m: u32) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("truncated_exp needs t >= 0, got {t}")));
    }
    if m == 0 {
        return Ok(t.exp());
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t < 0.5 * f64::from(m) {
        // Leading term in log space so tiny t does not underflow early.
        let mut term = (f64::from(m) * t.ln() - ln_factorial(m)).exp();
        let mut sum = 0.0;
        let mut k = m;
        while term > sum * 1e-18 && k < m + 400 {
            sum += term;
            k += 1;
            term *= t / f64::from(k);
        }
        Ok(sum)
    } else {
        let (mut head, mut comp) = (0.0f64, 0.0f64);
        let mut term = 1.0;
        for k in 0..m {
            let y = term - comp;
            let s = head + y;
            comp = (s - head) - y;
            head = s;
            term *= t / f64::from(k + 1);
        }
        Ok(t.exp() - head + comp)
    }
}

/// `ln(m!)`.
pub fn ln_factorial(m: u32) -> f64 {
    libm::lgamma(f64::from(m) + 1.0)
}
