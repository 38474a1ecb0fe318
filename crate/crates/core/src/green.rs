//! Radial Green function of `-Delta_n - V` with a pole at the origin, and the
//! transplantation maps derived from it.
//!
//! Writing `G = -gamma ln r + C + H(r)` and `m(r) = omega int_0^r V G^(n-1) s^(n-1) ds`,
//! the radial equation becomes the first-order system
//!
//! ```text
//! m' = omega V G^(n-1) r^(n-1),      -r G' = gamma (1 + m)^(1/(n-1)).
//! ```
//!
//! It is marched outward from the first node for a trial pole constant `C`,
//! and `C` is fixed by bisection so that the solution decays at the
//! truncation radius like the minimal solution of the boundary layer.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::hermite;
use crate::profile::Potential;
use crate::quad::{make_grid, Constants, Dimension, Grading, RadialGrid};

/// Default tolerance on the flux-identity residual.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default cap on root-finding iterations.
pub const DEFAULT_MAX_ITER: usize = 500;

/// Discrete Green function on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenTable {
    pub n: Dimension,
    pub potential: Potential,
    pub grid: Arc<RadialGrid>,
    pub g_values: Vec<f64>,
    pub g_deriv: Vec<f64>,
    /// `m(r_i)`.
    pub mass: Vec<f64>,
    /// Pole constant of the decomposition.
    pub c_g: f64,
    /// `H(r_i) = G(r_i) + gamma ln r_i - C_G`.
    pub remainder: Vec<f64>,
    /// Sup-norm defect of the flux identity.
    pub residual: f64,
    /// Relative defect of the boundary condition at the truncation radius.
    pub boundary_defect: f64,
    pub epsilon_used: f64,
    /// Root-finding iterations.
    pub iterations: usize,
}

struct Marcher<'a> {
    c: Constants,
    gamma: f64,
    potential: &'a Potential,
    grid: &'a RadialGrid,
}

struct March {
    g: Vec<f64>,
    m: Vec<f64>,
    h: Vec<f64>,
}

enum Shot {
    /// `G` reached zero before the last node.
    Undershoot,
    /// Boundary mismatch `F(C)` and the marched solution.
    Complete(f64, March),
}

#[derive(Clone, Copy)]
struct NodeState {
    /// `m'`
    fm: f64,
    /// `m''`
    dfm: f64,
    /// `-H'`
    fh: f64,
    /// `-H''`
    dfh: f64,
}

impl<'a> Marcher<'a> {
    fn q(&self, m: f64) -> f64 {
        let e = 1.0 / (self.c.n.as_f64() - 1.0);
        self.gamma * (m.ln_1p() * e).exp_m1()
    }

    fn flux(&self, m: f64) -> f64 {
        self.gamma * (1.0 + m).powf(1.0 / (self.c.n.as_f64() - 1.0))
    }

    fn state(&self, i: usize, g: f64, m: f64) -> NodeState {
        let nf = self.c.n.as_f64();
        let r = self.grid.nodes()[i];
        let s = self.grid.complement()[i];
        let v = self.potential.value_with_complement(r, s, &self.c);
        let vp = self.potential.derivative_with_complement(r, s, &self.c);
        let gp = -self.flux(m) / r;
        let om = self.c.omega;
        let gn = g.powf(nf - 1.0);
        let rn = r.powf(nf - 1.0);
        let fm = om * v * gn * rn;
        let dfm = om
            * (vp * gn * rn
                + v * (nf - 1.0) * g.powf(nf - 2.0) * gp * rn
                + v * gn * (nf - 1.0) * r.powf(nf - 2.0));
        let q = self.q(m);
        let dq = self.gamma / (nf - 1.0) * (1.0 + m).powf(1.0 / (nf - 1.0) - 1.0);
        let fh = q / r;
        let dfh = dq * fm / r - q / (r * r);
        NodeState { fm, dfm, fh, dfh }
    }

    fn pole(&self, i: usize, cst: f64, h: f64) -> f64 {
        -self.gamma * self.grid.ln_node(i) + cst + h
    }

    /// Minimal-decay boundary value of `G` at the last node.
    fn tail(&self, m_last: f64) -> f64 {
        let b = self.grid.last();
        let flux = self.flux(m_last);
        if self.potential.is_boundary_critical() {
            let nf = self.c.n.as_f64();
            nf / (nf - 1.0) * self.grid.epsilon() * flux / b
        } else {
            flux * -self.grid.ln_node(self.grid.len() - 1)
        }
    }

    fn shoot(&self, cst: f64) -> Shot {
        let nn = self.grid.len();
        let nf = self.c.n.as_f64();
        let r = self.grid.nodes();
        let mut g = vec![0.0; nn];
        let mut m = vec![0.0; nn];
        let mut h = vec![0.0; nn];
        g[0] = self.pole(0, cst, 0.0);
        if g[0] <= 0.0 {
            return Shot::Undershoot;
        }
        let v0 = self.potential.value_with_complement(r[0], self.grid.complement()[0], &self.c);
        m[0] = self.c.omega * v0 * g[0].powf(nf - 1.0) * r[0].powf(nf) / nf;
        let mut si = self.state(0, g[0], m[0]);
        for i in 0..nn - 1 {
            let dr = r[i + 1] - r[i];
            let (mut mn, mut hn) = (m[i], h[i]);
            for _ in 0..80 {
                let gn = self.pole(i + 1, cst, hn);
                if gn <= 0.0 {
                    return Shot::Undershoot;
                }
                let sn = self.state(i + 1, gn, mn);
                let mnew = m[i] + 0.5 * dr * (si.fm + sn.fm) - dr * dr / 12.0 * (sn.dfm - si.dfm);
                let hnew = h[i] - 0.5 * dr * (si.fh + sn.fh) + dr * dr / 12.0 * (sn.dfh - si.dfh);
                let done = (mnew - mn).abs() <= 1e-15 * mnew.abs()
                    && (hnew - hn).abs() <= 1e-15 * hnew.abs().max(1e-300);
                mn = mnew;
                hn = hnew;
                if done {
                    break;
                }
            }
            m[i + 1] = mn;
            h[i + 1] = hn;
            g[i + 1] = self.pole(i + 1, cst, hn);
            if g[i + 1] <= 0.0 {
                return Shot::Undershoot;
            }
            si = self.state(i + 1, g[i + 1], mn);
        }
        let f = g[nn - 1] - self.tail(m[nn - 1]);
        Shot::Complete(f, March { g, m, h })
    }

    fn mismatch(&self, cst: f64) -> f64 {
        match self.shoot(cst) {
            Shot::Undershoot => f64::NEG_INFINITY,
            Shot::Complete(f, _) => f,
        }
    }
}

/// Solve for the Green function of `-Delta_n - V` on the grid.
///
/// `tol` bounds the returned flux-identity residual; `max_iter` caps the
/// bisection on the pole constant.
pub fn solve_green(n: Dimension, v: &Potential, grid: Arc<RadialGrid>, tol: f64, max_iter: usize) -> Result<GreenTable> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let c = Constants::new(n);
    v.check_admissible(&c)?;
    let marcher = Marcher { c, gamma: c.gamma(), potential: v, grid: &grid };

    let mut iterations = 0usize;
    let cst = if v.is_zero() {
        0.0
    } else {
        // Bracket the root: F(lo) < 0 <= F(hi).
        let (mut lo, mut hi) = (0.0f64, 0.125f64);
        let mut step = 0.125;
        while marcher.mismatch(lo) >= 0.0 {
            iterations += 1;
            hi = lo;
            lo -= step;
            step *= 2.0;
            if iterations > 64 {
                return Err(Error::Instability("no pole constant with decaying solution".into()));
            }
        }
        while marcher.mismatch(hi) < 0.0 {
            iterations += 1;
            lo = hi;
            hi += step;
            step *= 2.0;
            if iterations > 64 {
                return Err(Error::Instability(
                    "Green function changes sign for every pole constant".into(),
                ));
            }
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            iterations += 1;
            if iterations > max_iter {
                let residual = (hi - lo) / hi.abs().max(1.0);
                return Err(Error::Convergence { iterations, residual });
            }
            if marcher.mismatch(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };

    let (f, march) = match marcher.shoot(cst) {
        Shot::Complete(f, m) => (f, m),
        Shot::Undershoot => {
            return Err(Error::Instability("Green function vanishes inside the domain".into()))
        }
    };
    let r = grid.nodes();
    let g_deriv: Vec<f64> = march.m.iter().zip(r).map(|(&m, &ri)| -marcher.flux(m) / ri).collect();
    let boundary_defect = f.abs() / march.g[march.g.len() - 1].abs().max(f64::MIN_POSITIVE);
    let residual = flux_residual(&marcher, &march.g, &g_deriv, &march.m);
    let table = GreenTable {
        n,
        potential: v.clone(),
        grid: grid.clone(),
        g_values: march.g,
        g_deriv,
        mass: march.m,
        c_g: cst,
        remainder: march.h,
        residual,
        boundary_defect,
        epsilon_used: grid.epsilon(),
        iterations,
    };
    if !(table.residual <= tol) {
        return Err(Error::Convergence { iterations, residual: table.residual });
    }
    Ok(table)
}

/// Recompute `m` from the stored `G` with one explicit pass of the corrected
/// trapezoid and compare both sides of the flux identity.
fn flux_residual(mr: &Marcher<'_>, g: &[f64], gd: &[f64], m_stored: &[f64]) -> f64 {
    let nf = mr.c.n.as_f64();
    let r = mr.grid.nodes();
    let states: Vec<NodeState> = (0..g.len()).map(|i| mr.state(i, g[i], m_stored[i])).collect();
    let mut m = m_stored[0];
    let mut worst: f64 = 0.0;
    for i in 0..g.len() {
        if i > 0 {
            let dr = r[i] - r[i - 1];
            m += 0.5 * dr * (states[i - 1].fm + states[i].fm)
                - dr * dr / 12.0 * (states[i].dfm - states[i - 1].dfm);
        }
        let lhs = -gd[i] * r[i] / mr.gamma;
        let rhs = (1.0 + m).powf(1.0 / (nf - 1.0));
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

impl GreenTable {
    pub fn constants(&self) -> Constants {
        Constants::new(self.n)
    }

    pub fn gamma(&self) -> f64 {
        self.constants().gamma()
    }

    /// `-omega^(1/(n-1)) G'(r_i) r_i`, which equals `(1 + m(r_i))^(1/(n-1))`.
    pub fn normalized_flux(&self) -> Vec<f64> {
        let gamma = self.gamma();
        self.g_deriv.iter().zip(self.grid.nodes()).map(|(d, r)| -d * r / gamma).collect()
    }

    /// Check the structural invariants of a converged table.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let nn = self.grid.len();
        if [self.g_values.len(), self.g_deriv.len(), self.remainder.len(), self.mass.len()]
            .iter()
            .any(|&l| l != nn)
        {
            return Err(Error::CorruptTable("array lengths differ from the grid".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.g_values) && finite(&self.g_deriv) && finite(&self.remainder) && self.c_g.is_finite()) {
            return Err(Error::CorruptTable("non-finite entries".into()));
        }
        if self.g_values.iter().any(|&g| g <= 0.0) {
            return Err(Error::CorruptTable("G must be positive".into()));
        }
        if self.g_values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::CorruptTable("G must be strictly decreasing".into()));
        }
        if self.g_deriv.iter().any(|&d| d >= 0.0) {
            return Err(Error::CorruptTable("G' must be negative".into()));
        }
        if self.normalized_flux().iter().any(|&f| f < 1.0 - 1e-12) {
            return Err(Error::CorruptTable("normalized flux below one".into()));
        }
        let gamma = self.gamma();
        for i in 0..nn {
            let h = self.g_values[i] + gamma * self.grid.ln_node(i) - self.c_g;
            if (h - self.remainder[i]).abs() > 1e-9 * self.g_values[i] {
                return Err(Error::CorruptTable(format!("remainder inconsistent with G at node {i}")));
            }
        }
        if !(self.residual <= tol) {
            return Err(Error::CorruptTable(format!("residual {:e} above tolerance {tol:e}", self.residual)));
        }
        Ok(())
    }

    pub fn to_record(&self) -> GreenTableRecord {
        GreenTableRecord {
            n: self.n.get(),
            potential: self.potential.to_string(),
            epsilon: self.epsilon_used,
            c_g: self.c_g,
            residual: self.residual,
            boundary_defect: self.boundary_defect,
            iterations: self.iterations,
            r: self.grid.nodes().to_vec(),
            g: self.g_values.clone(),
            g_prime: self.g_deriv.clone(),
            remainder: self.remainder.clone(),
            mass: Some(self.mass.clone()),
        }
    }

    /// Rebuild a table from its serialized form, re-deriving `m` from `G'`,
    /// recomputing the residual, and validating every invariant.
    pub fn from_record(rec: &GreenTableRecord, tol: f64) -> Result<Self> {
        let n = Dimension::new(rec.n).map_err(|e| Error::CorruptTable(e.to_string()))?;
        let potential: Potential = rec.potential.parse().map_err(|e: Error| Error::CorruptTable(e.to_string()))?;
        let grid = Arc::new(rebuild_grid(rec)?);
        let c = Constants::new(n);
        let gamma = c.gamma();
        let nf = n.as_f64();
        if rec.g_prime.len() != rec.r.len() {
            return Err(Error::CorruptTable("array lengths differ from the grid".into()));
        }
        // Deriving m from G' cancels badly where the flux is near one, so
        // prefer the stored mass.
        let mass: Vec<f64> = match &rec.mass {
            Some(m) => m.clone(),
            None => rec
                .g_prime
                .iter()
                .zip(&rec.r)
                .map(|(d, r)| (-d * r / gamma).powf(nf - 1.0) - 1.0)
                .collect(),
        };
        let mut table = GreenTable {
            n,
            potential,
            grid,
            g_values: rec.g.clone(),
            g_deriv: rec.g_prime.clone(),
            mass,
            c_g: rec.c_g,
            remainder: rec.remainder.clone(),
            residual: f64::INFINITY,
            boundary_defect: rec.boundary_defect,
            epsilon_used: rec.epsilon,
            iterations: rec.iterations,
        };
        if table.g_values.len() != table.grid.len() || table.remainder.len() != table.grid.len() {
            return Err(Error::CorruptTable("array lengths differ from the grid".into()));
        }
        let marcher = Marcher { c, gamma, potential: &table.potential, grid: &table.grid };
        table.residual = flux_residual(&marcher, &table.g_values, &table.g_deriv, &table.mass);
        table.validate(tol)?;
        Ok(table)
    }
}

/// The logit-graded grid with exactly the recorded nodes, which keeps the
/// cancellation-free complement; arbitrary node sets fall back to `1 - r`.
fn rebuild_grid(rec: &GreenTableRecord) -> Result<RadialGrid> {
    let corrupt = |e: Error| Error::CorruptTable(e.to_string());
    if let (Some(&first), true) = (rec.r.first(), rec.r.len() >= 16) {
        if let Ok(g) = make_grid(rec.r.len(), rec.epsilon, Grading { first_node: first }) {
            if g.nodes() == rec.r.as_slice() {
                return Ok(g);
            }
        }
    }
    RadialGrid::from_nodes(rec.r.clone()).map_err(corrupt)
}

/// Serialized form of a [`GreenTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenTableRecord {
    pub n: u32,
    pub potential: String,
    pub epsilon: f64,
    pub c_g: f64,
    pub residual: f64,
    pub boundary_defect: f64,
    pub iterations: usize,
    pub r: Vec<f64>,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    #[serde(rename = "Gprime")]
    pub g_prime: Vec<f64>,
    pub remainder: Vec<f64>,
    /// `m = (-G' r / gamma)^(n-1) - 1` as carried by the solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<Vec<f64>>,
}

/// Estimate the pole constant from the eight smallest nodes by a linear fit
/// of `G + gamma ln r` against `r^n (-ln r)^(n-1)`.
pub fn extract_c_g(table: &GreenTable) -> Result<f64> {
    let k = 8.min(table.grid.len());
    let gamma = table.gamma();
    let nf = table.n.as_f64();
    let r = table.grid.nodes();
    let y: Vec<f64> = (0..k).map(|i| table.g_values[i] + gamma * r[i].ln()).collect();
    let x: Vec<f64> = (0..k).map(|i| r[i].powf(nf) * (-r[i].ln()).powf(nf - 1.0)).collect();
    // The remainder is non-increasing; allow rounding noise of a few ulps of G.
    for i in 0..k - 1 {
        let noise = 64.0 * f64::EPSILON * table.g_values[i].abs();
        if y[i + 1] - y[i] > noise {
            return Err(Error::ExtractionUnstable(format!(
                "G + gamma ln r increases between nodes {i} and {}",
                i + 1
            )));
        }
    }
    let kf = k as f64;
    let mx = x.iter().sum::<f64>() / kf;
    let my = y.iter().sum::<f64>() / kf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c = my - slope * mx;
    if !c.is_finite() {
        return Err(Error::ExtractionUnstable("non-finite intercept".into()));
    }
    Ok(c)
}

/// `sup_{r >= 1/2} G(r) / (1 - r^2)^((n-1)/n)`.
pub fn check_boundary_bound(table: &GreenTable) -> f64 {
    let g = &table.grid;
    let e = (table.n.as_f64() - 1.0) / table.n.as_f64();
    (0..g.len())
        .filter(|&i| g.nodes()[i] >= 0.5)
        .map(|i| table.g_values[i] / g.one_minus_sq(i).powf(e))
        .fold(0.0, f64::max)
}

/// Minimum over grid nodes of the relative margin by which
/// `psi = (-ln r)^((n-1)/n)` is a strict supersolution of
/// `-Delta_n psi - V psi^(n-1) = 0` for the critical Hardy potential.
///
/// Also checks `-2 r ln r <= 1 - r^2` at every node.
pub fn comparison_supersolution_margin(n: Dimension, grid: &RadialGrid) -> Result<f64> {
    let nf = n.as_f64();
    let mut worst = f64::INFINITY;
    for i in 0..grid.len() {
        let r = grid.nodes()[i];
        let gap = log_gap(r, grid.complement()[i]);
        if !(gap > 0.0) {
            return Err(Error::Domain(format!("-2 r ln r >= 1 - r^2 at r = {r}")));
        }
        // -Delta_n psi / (V psi^(n-1)) = ((1 - r^2) / (-2 r ln r))^n.
        let margin = (nf * (gap / (-2.0 * r * r.ln())).ln_1p()).exp_m1();
        worst = worst.min(margin);
    }
    Ok(worst)
}

/// `1 - r^2 + 2 r ln r`, summed as `2 sum_{k>=3} s^k / (k (k-1))` near `r = 1`.
fn log_gap(r: f64, s: f64) -> f64 {
    if s > 0.1 {
        return (1.0 - r * r) + 2.0 * r * r.ln();
    }
    let (mut sum, mut pow) = (0.0, s * s);
    for k in 3..60 {
        pow *= s;
        let term = pow / (k * (k - 1)) as f64;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    2.0 * sum
}

/// Transplantation weights tabulated on a dedicated `t`-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransplantMaps {
    pub n: Dimension,
    pub beta: f64,
    pub c_g: f64,
    pub potential: Potential,
    pub t_grid: Arc<RadialGrid>,
    /// `a(t)`.
    pub a: Vec<f64>,
    /// `1 - a(t)`.
    pub one_minus_a: Vec<f64>,
    /// `a'(t)`.
    pub a_prime: Vec<f64>,
    /// `a(t) / t` from the inverse map.
    pub a_over_t: Vec<f64>,
    /// `H(a(t))`.
    pub h_at_a: Vec<f64>,
    /// `-omega^(1/(n-1)) G'(a(t)) a(t)`.
    pub flux_at_a: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_prime: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Default number of `t`-grid nodes.
pub const DEFAULT_T_POINTS: usize = 4096;
/// Smallest `t` tabulated.
pub const T_MIN: f64 = 1e-8;

/// Build the transplantation maps with [`DEFAULT_T_POINTS`] nodes.
pub fn make_maps(table: &GreenTable, beta: f64) -> Result<TransplantMaps> {
    make_maps_with(table, beta, DEFAULT_T_POINTS)
}

/// Build the transplantation maps on a `t`-grid with `t_points` nodes.
pub fn make_maps_with(table: &GreenTable, beta: f64, t_points: usize) -> Result<TransplantMaps> {
    let n = table.n;
    let nf = n.as_f64();
    if !(beta.is_finite() && (0.0..nf).contains(&beta)) {
        return Err(Error::Domain(format!("beta = {beta} outside [0, {n})")));
    }
    let c = table.constants();
    let gamma = c.gamma();
    let g = &table.grid;
    let r = g.nodes();
    let nn = r.len();
    if table.g_values.windows(2).any(|w| w[1] >= w[0]) || table.g_values[nn - 1] <= 0.0 {
        return Err(Error::CorruptTable("G must be positive and strictly decreasing".into()));
    }
    // Knots: x = ln t(r) = -G / gamma, y = ln r.
    let x: Vec<f64> = table.g_values.iter().map(|gv| -gv / gamma).collect();
    let y: Vec<f64> = (0..nn).map(|i| g.ln_node(i)).collect();
    let flux: Vec<f64> = table.normalized_flux();
    let dydx: Vec<f64> = flux.iter().map(|f| 1.0 / f).collect();
    let dmdy: Vec<f64> = (0..nn)
        .map(|i| {
            let v = table.potential.value_with_complement(r[i], g.complement()[i], &c);
            c.omega * v * table.g_values[i].powf(nf - 1.0) * r[i].powf(nf)
        })
        .collect();
    let dhdy: Vec<f64> = table.mass.iter().map(|m| -gamma * (m.ln_1p() / (nf - 1.0)).exp_m1()).collect();

    let t_last_gap = -(-table.g_values[nn - 1] / gamma).exp_m1();
    let t_first = T_MIN.max((x[0] * (1.0 - 1e-12)).exp());
    // With no potential the map is the identity, so the r-grid serves as t-grid.
    let t_grid = if table.potential.is_zero() {
        g.clone()
    } else {
        Arc::new(make_grid(t_points, t_last_gap, Grading { first_node: t_first })?)
    };
    let tn = t_grid.len();

    let mut maps = TransplantMaps {
        n,
        beta,
        c_g: table.c_g,
        potential: table.potential.clone(),
        t_grid: t_grid.clone(),
        a: Vec::with_capacity(tn),
        one_minus_a: Vec::with_capacity(tn),
        a_prime: Vec::with_capacity(tn),
        a_over_t: Vec::with_capacity(tn),
        h_at_a: Vec::with_capacity(tn),
        flux_at_a: Vec::with_capacity(tn),
        phi: Vec::with_capacity(tn),
        phi_prime: Vec::with_capacity(tn),
        psi: Vec::with_capacity(tn),
    };
    for j in 0..tn {
        let t = t_grid.nodes()[j];
        let xt = if j == tn - 1 { x[nn - 1] } else { t.ln() };
        let k = x.partition_point(|&v| v <= xt).saturating_sub(1).min(nn - 2);
        let (x0, x1) = (x[k], x[k + 1]);
        let yt = if j == tn - 1 {
            y[nn - 1]
        } else {
            hermite(x0, x1, y[k], y[k + 1], dydx[k], dydx[k + 1], xt)
        };
        let (m, h) = if j == tn - 1 {
            (table.mass[nn - 1], table.remainder[nn - 1])
        } else {
            let (y0, y1) = (y[k], y[k + 1]);
            (
                hermite(y0, y1, table.mass[k], table.mass[k + 1], dmdy[k], dmdy[k + 1], yt),
                hermite(y0, y1, table.remainder[k], table.remainder[k + 1], dhdy[k], dhdy[k + 1], yt),
            )
        };
        let a = yt.exp();
        let oma = if j == tn - 1 { g.complement()[nn - 1] } else { -yt.exp_m1() };
        let fl = (1.0 + m).powf(1.0 / (nf - 1.0));
        let ratio = (yt - xt).exp();
        let v = table.potential.value_with_complement(a, oma, &c);
        let lt = -xt;
        maps.a.push(a);
        maps.one_minus_a.push(oma);
        maps.a_prime.push(ratio / fl);
        maps.a_over_t.push(ratio);
        maps.h_at_a.push(h);
        maps.flux_at_a.push(fl);
        maps.phi.push(m);
        maps.phi_prime.push(v * lt.powf(nf - 1.0) * a.powf(nf) / (fl * t));
        maps.psi.push(ratio.powf(nf - beta) / fl);
    }
    if maps.a.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::CorruptTable("inverse map is not strictly increasing".into()));
    }
    Ok(maps)
}

impl TransplantMaps {
    /// `e^((1 - beta/n) alpha_n C_G)`, the comparison factor between the
    /// singular integrals of `u` and its transplant.
    pub fn comparison_factor(&self) -> f64 {
        let c = Constants::new(self.n);
        ((1.0 - self.beta / self.n.as_f64()) * c.alpha_n * self.c_g).exp()
    }

    /// `e^(omega^(1/(n-1)) C_G)`, the supremum of `a(t)/t`.
    pub fn ratio_limit(&self) -> f64 {
        (self.c_g / Constants::new(self.n).gamma()).exp()
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}
