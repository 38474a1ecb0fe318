//! Test families, sweeps, and constrained searches over radial profiles.
//!
//! Every constraint here is a level set of an `n`-homogeneous functional, so
//! it is enforced by exact rescaling rather than by multipliers.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{
    grad_energy, h_functional, h_functional_gradient, hyperbolic_mt, lebesgue_norm_n, lebesgue_norm_n_gradient,
    q_v_functional, singular_mt, singular_mt_with_gradient, Flagged,
};
use crate::interp::{project_non_increasing, solve_tridiagonal};
use crate::profile::{Potential, RadialProfile};
use crate::quad::{Constants, Dimension, RadialGrid};

/// Plateau radius of a Moser profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoserParams {
    pub rho: f64,
    pub n: Dimension,
}

impl MoserParams {
    pub fn new(rho: f64, n: Dimension) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!("plateau radius {rho} outside (0, 1)")));
        }
        Ok(Self { rho, n })
    }
}

/// `min(1, ln(1/r) / ln(1/rho))`, made admissible and scaled so that the
/// discrete gradient energy is one. The plateau is `(ln(1/rho)^(n-1) / omega)^(1/n)`
/// in the continuum.
pub fn moser_profile(grid: &Arc<RadialGrid>, p: MoserParams) -> Result<RadialProfile> {
    let l = -p.rho.ln();
    let raw = RadialProfile::from_fn_complement(grid.clone(), |r, s| {
        if r <= p.rho {
            1.0
        } else {
            -(-s).ln_1p() / l
        }
    })?
    .admissible();
    let e = grad_energy(&raw, p.n)?;
    Ok(raw.scaled(e.powf(-1.0 / p.n.as_f64())))
}

/// `u / H(u)^(1/n)`.
pub fn normalize_h(u: &RadialProfile, n: Dimension) -> Result<RadialProfile> {
    normalize_with(u, h_functional(u, n)?, n)
}

/// `u / Q_V(u)^(1/n)`; reduces to [`normalize_h`] for the critical Hardy potential.
pub fn normalize_q_v(u: &RadialProfile, v: &Potential, n: Dimension) -> Result<RadialProfile> {
    normalize_with(u, q_v_functional(u, v, n)?, n)
}

fn normalize_with(u: &RadialProfile, level: f64, n: Dimension) -> Result<RadialProfile> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::Degenerate(format!("constraint functional is {level}, cannot normalize")));
    }
    Ok(u.scaled(level.powf(-1.0 / n.as_f64())))
}

/// A member of a sweep family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMember {
    Moser(MoserParams),
    /// The zero profile, recorded without normalization.
    Zero,
}

impl SweepMember {
    /// Parameter column for reports: `rho`, or zero.
    pub fn param(&self) -> f64 {
        match self {
            SweepMember::Moser(p) => p.rho,
            SweepMember::Zero => 0.0,
        }
    }
}

/// Moser members with `rho = 2^-k`, `k = 1..=k_max`.
pub fn dyadic_moser_family(n: Dimension, k_max: u32) -> Vec<SweepMember> {
    (1..=k_max)
        .map(|k| SweepMember::Moser(MoserParams { rho: 0.5f64.powi(k as i32), n }))
        .collect()
}

/// One sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub value: f64,
    pub overflow: bool,
    pub divergence_flag: bool,
}

impl SweepRow {
    fn new(param: f64, f: Flagged) -> Self {
        Self { param, value: f.value, overflow: f.overflow, divergence_flag: f.divergent }
    }
}

/// `singular_mt` along a family normalized to `H(u) = 1`.
pub fn boundedness_sweep(
    grid: &Arc<RadialGrid>,
    n: Dimension,
    beta: f64,
    family: &[SweepMember],
    exponent_scale: f64,
) -> Result<Vec<SweepRow>> {
    improved_sweep_unchecked(grid, n, beta, 0.0, family, exponent_scale)
}

/// `singular_mt` along a family normalized to `H(u) - lambda ||u||_n^n = 1`.
///
/// `lambda` must not exceed `0.9 * lambda1_hat`.
pub fn improved_sweep(
    grid: &Arc<RadialGrid>,
    n: Dimension,
    beta: f64,
    lambda: f64,
    lambda1_hat: f64,
    family: &[SweepMember],
) -> Result<Vec<SweepRow>> {
    if !(lambda >= 0.0 && lambda <= 0.9 * lambda1_hat) {
        return Err(Error::Precondition(format!(
            "lambda = {lambda} must lie in [0, 0.9 * {lambda1_hat}]"
        )));
    }
    improved_sweep_unchecked(grid, n, beta, lambda, family, 1.0)
}

fn improved_sweep_unchecked(
    grid: &Arc<RadialGrid>,
    n: Dimension,
    beta: f64,
    lambda: f64,
    family: &[SweepMember],
    exponent_scale: f64,
) -> Result<Vec<SweepRow>> {
    family
        .iter()
        .map(|m| {
            let u = match m {
                SweepMember::Zero => RadialProfile::zero(grid.clone()),
                SweepMember::Moser(p) => {
                    let raw = moser_profile(grid, *p)?;
                    let mut level = h_functional(&raw, n)?;
                    if lambda != 0.0 {
                        level -= lambda * lebesgue_norm_n(&raw, n)?;
                    }
                    normalize_with(&raw, level, n)?
                }
            };
            Ok(SweepRow::new(m.param(), singular_mt(&u, n, beta, exponent_scale)?))
        })
        .collect()
}

/// One row of the hyperbolic divergence probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub param: f64,
    /// Truncation `m = n - 1`.
    pub lower: SweepRow,
    /// Truncation `m = n`.
    pub upper: SweepRow,
}

/// `u_k = normalize_h((1 - r^2)^(b_k) - boundary value)` with
/// `b_k = (n-1)/n * (1 - 1/k)`, approaching the critical boundary exponent.
pub fn boundary_family_member(grid: &Arc<RadialGrid>, n: Dimension, k: u32) -> Result<RadialProfile> {
    let nf = n.as_f64();
    let b = (nf - 1.0) / nf * (1.0 - 1.0 / k as f64);
    let raw = RadialProfile::from_fn_complement(grid.clone(), |r, s| (s * (1.0 + r)).powf(b))?.admissible();
    normalize_h(&raw, n)
}

/// Both truncated hyperbolic integrals along [`boundary_family_member`], `k` in `ks`.
/// `k = 0` denotes the zero profile.
pub fn divergence_probe(grid: &Arc<RadialGrid>, n: Dimension, beta: f64, ks: &[u32]) -> Result<Vec<ProbeRow>> {
    ks.iter()
        .map(|&k| {
            let u = if k == 0 {
                RadialProfile::zero(grid.clone())
            } else {
                boundary_family_member(grid, n, k)?
            };
            let m = n.get();
            Ok(ProbeRow {
                param: k as f64,
                lower: SweepRow::new(k as f64, hyperbolic_mt(&u, n, beta, m - 1)?),
                upper: SweepRow::new(k as f64, hyperbolic_mt(&u, n, beta, m)?),
            })
        })
        .collect()
}

/// Settings shared by the searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    pub max_iter: usize,
    pub initial_step: f64,
    pub step_floor: f64,
    pub stall_limit: usize,
    /// Seed for the finite-difference spot checks and random starts.
    pub seed: u64,
    /// Number of nodes in the gradient spot check.
    pub check_nodes: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { max_iter: 300, initial_step: 0.1, step_floor: 1e-12, stall_limit: 50, seed: 0, check_nodes: 10 }
    }
}

/// Outcome of a projected search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub best_value: f64,
    pub best_profile: RadialProfile,
    pub iterations: usize,
    pub constraint_residual: f64,
    pub trajectory: Vec<(usize, f64)>,
    pub stalled: bool,
    /// Largest relative error of the analytic gradient at the spot-checked nodes.
    pub gradient_check: f64,
    pub seed: u64,
}

/// Tridiagonal `A = M + K` with `M` the lumped `r^(n-1)` mass and `K` the
/// `r^(n-1)` stiffness; the last node is pinned.
struct Metric {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Metric {
    fn new(grid: &RadialGrid, n: Dimension) -> Self {
        let nf = n.as_f64();
        let r = grid.nodes();
        let w = grid.weights();
        let nn = r.len();
        let mut diag: Vec<f64> = (0..nn).map(|i| w[i] * r[i].powf(nf - 1.0)).collect();
        let mut lower = vec![0.0; nn];
        let mut upper = vec![0.0; nn];
        for k in 0..nn - 1 {
            let mid = 0.5 * (r[k] + r[k + 1]);
            let c = mid.powf(nf - 1.0) / (r[k + 1] - r[k]);
            diag[k] += c;
            diag[k + 1] += c;
            upper[k] = -c;
            lower[k + 1] = -c;
        }
        let last = nn - 1;
        diag[last] = 1.0;
        lower[last] = 0.0;
        upper[last - 1] = 0.0;
        Self { lower, diag, upper }
    }

    fn apply_inverse(&self, g: &[f64]) -> Vec<f64> {
        let mut rhs = g.to_vec();
        *rhs.last_mut().unwrap() = 0.0;
        solve_tridiagonal(&self.lower, &self.diag, &self.upper, &rhs)
    }
}

/// Project onto non-increasing, nonnegative profiles with the last node at zero.
fn project(grid: &Arc<RadialGrid>, values: &[f64]) -> Result<RadialProfile> {
    let k = values.len() - 1;
    let w = &grid.weights()[..k];
    let mut out = project_non_increasing(&values[..k], w);
    for v in &mut out {
        *v = v.max(0.0);
    }
    out.push(0.0);
    RadialProfile::from_values(grid.clone(), out)
}

fn check_beta(n: Dimension, beta: f64) -> Result<()> {
    if beta.is_finite() && (0.0..n.as_f64()).contains(&beta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta = {beta} outside [0, {n})")))
    }
}

/// Largest relative error of `grad` against central differences of `f` at
/// `count` seeded nodes, drawn among nodes whose gradient is at least 1e-3 of
/// the largest (elsewhere the difference quotient is rounding noise).
///
/// `nodewise` functionals depend on each node value separately and take a
/// plain central difference; spline-based ones keep the step inside the
/// current limiter branch and extrapolate.
fn spot_check(
    u: &RadialProfile,
    grad: &[f64],
    f: impl Fn(&RadialProfile) -> Result<f64>,
    count: usize,
    seed: u64,
    nodewise: bool,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let nn = u.len();
    let gmax = grad[..nn - 1].iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let y = u.values();
    let umax = u.max_abs();
    // Skip cells too thin for a difference quotient to resolve.
    let resolved = |i: usize| {
        let lo = if i > 0 { (y[i - 1] - y[i]).abs() } else { f64::INFINITY };
        lo.min((y[i + 1] - y[i]).abs()) >= 1e-6 * umax
    };
    let eligible: Vec<usize> =
        (0..nn - 1).filter(|&i| gmax > 0.0 && grad[i].abs() >= 1e-3 * gmax && (nodewise || resolved(i))).collect();
    if eligible.is_empty() {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let i = eligible[rng.random_range(0..eligible.len())];
        // Stay inside the current branch of the slope limiter.
        let mut gap = f64::INFINITY;
        if i > 0 && y[i - 1] != y[i] {
            gap = gap.min((y[i - 1] - y[i]).abs());
        }
        if y[i + 1] != y[i] {
            gap = gap.min((y[i + 1] - y[i]).abs());
        }
        let h = 1e-4 * umax.max(1e-3);
        let central = |h: f64| -> Result<f64> {
            let mut plus = y.to_vec();
            let mut minus = plus.clone();
            plus[i] += h;
            minus[i] -= h;
            let fp = f(&RadialProfile::from_values(u.grid_arc().clone(), plus)?)?;
            let fm = f(&RadialProfile::from_values(u.grid_arc().clone(), minus)?)?;
            Ok((fp - fm) / (2.0 * h))
        };
        let fd = if nodewise {
            central(h)?
        } else {
            // Richardson extrapolation removes the h^2 term.
            let h = h.min(1e-2 * gap);
            (4.0 * central(0.5 * h)? - central(h)?) / 3.0
        };
        worst = worst.max((fd - grad[i]).abs() / grad[i].abs());
    }
    Ok(worst)
}

/// Maximize `singular_mt(u)` over non-increasing `u` with `H(u) = 1`.
pub fn maximize_mt(n: Dimension, beta: f64, start: &RadialProfile, options: &SearchOptions) -> Result<SearchReport> {
    check_beta(n, beta)?;
    let grid = start.grid_arc().clone();
    let metric = Metric::new(&grid, n);
    let mt = |u: &RadialProfile| singular_mt_with_gradient(u, n, beta, 1.0, true);
    let mut u = normalize_h(&project(&grid, start.values())?, n)?;
    let (mut value, mut grad) = {
        let (f, g) = mt(&u)?;
        (f.value, g)
    };
    let gradient_check = spot_check(&u, &grad, |p| Ok(singular_mt(p, n, beta, 1.0)?.value), options.check_nodes, options.seed, true)?;
    let mut trajectory = vec![(0, value)];
    let mut step = options.initial_step;
    let mut stall = 0usize;
    let mut iterations = 0usize;
    while iterations < options.max_iter && stall < options.stall_limit {
        iterations += 1;
        // Tangent direction: dH(u).u = n H(u) = n on the constraint set.
        let hg = h_functional_gradient(&u, n);
        let along: f64 = grad.iter().zip(u.values()).map(|(g, x)| g * x).sum::<f64>() / n.as_f64();
        let tangent: Vec<f64> = grad.iter().zip(&hg).map(|(g, h)| g - along * h).collect();
        let dir = metric.apply_inverse(&tangent);
        let dmax = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if dmax == 0.0 || !dmax.is_finite() {
            stall = options.stall_limit;
            break;
        }
        let scale = u.max_abs() / dmax;
        let mut accepted = false;
        let mut tau = step;
        while tau >= options.step_floor {
            let trial: Vec<f64> = u.values().iter().zip(&dir).map(|(x, d)| x + tau * scale * d).collect();
            if let Ok(cand) = project(&grid, &trial).and_then(|p| normalize_h(&p, n)) {
                let (f, g) = mt(&cand)?;
                if f.value > value && !f.overflow {
                    u = cand;
                    value = f.value;
                    grad = g;
                    accepted = true;
                    break;
                }
            }
            tau *= 0.5;
        }
        if accepted {
            stall = 0;
            step = (2.0 * tau).min(options.initial_step);
            trajectory.push((iterations, value));
        } else {
            stall += 1;
            step = options.initial_step;
        }
    }
    let constraint_residual = (h_functional(&u, n)? - 1.0).abs();
    Ok(SearchReport {
        best_value: value,
        best_profile: u,
        iterations,
        constraint_residual,
        trajectory,
        stalled: stall >= options.stall_limit,
        gradient_check,
        seed: options.seed,
    })
}

/// Seeded random non-increasing starts for multi-start searches.
pub fn random_start(grid: &Arc<RadialGrid>, seed: u64) -> Result<RadialProfile> {
    let mut c = crate::corpus::monotone_corpus(grid, 1, seed)?;
    Ok(c.remove(0))
}

/// Minimize `H(u) / ||u||_n^n` over non-increasing profiles.
pub fn estimate_lambda1(grid: &Arc<RadialGrid>, n: Dimension, options: &SearchOptions) -> Result<SearchReport> {
    let metric = Metric::new(grid, n);
    let ratio = |u: &RadialProfile| -> Result<f64> { Ok(h_functional(u, n)? / lebesgue_norm_n(u, n)?) };
    let unit = |u: &RadialProfile| -> Result<RadialProfile> { normalize_with(u, lebesgue_norm_n(u, n)?, n) };
    let gradient = |u: &RadialProfile, q: f64| -> Vec<f64> {
        let hg = h_functional_gradient(u, n);
        let lg = lebesgue_norm_n_gradient(u, n);
        hg.iter().zip(&lg).map(|(h, l)| h - q * l).collect()
    };
    let start = RadialProfile::from_fn_complement(grid.clone(), |r, s| s * (1.0 + r))?.admissible();
    let mut u = unit(&start)?;
    let mut value = ratio(&u)?;
    let mut grad = gradient(&u, value);
    let gradient_check = spot_check(&u, &grad, |p| {
        // On the unit sphere the ratio's gradient is H' - q L'.
        Ok(h_functional(p, n)? - value * lebesgue_norm_n(p, n)?)
    }, options.check_nodes, options.seed, false)?;
    let mut trajectory = vec![(0, value)];
    let mut step = options.initial_step;
    let mut stall = 0usize;
    let mut iterations = 0usize;
    while iterations < options.max_iter && stall < options.stall_limit {
        iterations += 1;
        let dir = metric.apply_inverse(&grad);
        let dmax = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if dmax == 0.0 || !dmax.is_finite() {
            break;
        }
        let scale = u.max_abs() / dmax;
        let mut accepted = false;
        let mut tau = step;
        while tau >= options.step_floor {
            let trial: Vec<f64> = u.values().iter().zip(&dir).map(|(x, d)| x - tau * scale * d).collect();
            if let Ok(cand) = project(grid, &trial).and_then(|p| unit(&p)) {
                let q = ratio(&cand)?;
                if q < value {
                    u = cand;
                    value = q;
                    grad = gradient(&u, q);
                    accepted = true;
                    break;
                }
            }
            tau *= 0.5;
        }
        if accepted {
            stall = 0;
            step = (2.0 * tau).min(options.initial_step);
            trajectory.push((iterations, value));
        } else {
            stall += 1;
            step = options.initial_step;
        }
    }
    if !(value > 0.0) {
        return Err(Error::Degenerate(format!("first eigenvalue estimate {value} is not positive")));
    }
    let constraint_residual = (lebesgue_norm_n(&u, n)? - 1.0).abs();
    Ok(SearchReport {
        best_value: value,
        best_profile: u,
        iterations,
        constraint_residual,
        trajectory,
        stalled: stall >= options.stall_limit,
        gradient_check,
        seed: options.seed,
    })
}

/// Omega-weighted disc area `omega / (n - beta)`, the value at the zero profile.
pub fn zero_profile_mt(n: Dimension, beta: f64) -> f64 {
    Constants::new(n).omega / (n.as_f64() - beta)
}
