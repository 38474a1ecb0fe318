//! Energies and exponential integrals of radial profiles.
//!
//! Potential and exponential integrals are weighted sums of node values.
//! Gradient energies integrate the derivative of the monotone Hermite
//! interpolant with Gauss-Legendre points in every cell, so a staircase of
//! node values still pays for its jumps. Both forms give exact gradients with
//! respect to node values.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::pchip_slopes_with_partials;
use crate::profile::{Potential, RadialProfile};
use crate::quad::{truncated_exp, Constants, Dimension, RadialGrid};
use crate::rearrange::rearrange;

/// Largest exponent evaluated before clamping.
pub const EXP_CLAMP: f64 = 700.0;

/// Share of an integral carried by the last decade before the boundary above
/// which the integral is flagged as divergent.
pub const TAIL_SHARE_LIMIT: f64 = 0.5;

/// Integral value with overflow and divergence flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flagged {
    pub value: f64,
    pub overflow: bool,
    pub divergent: bool,
}

impl Flagged {
    pub fn plain(value: f64) -> Self {
        Self { value, overflow: false, divergent: false }
    }
}

fn check_beta(n: Dimension, beta: f64) -> Result<()> {
    if beta.is_finite() && (0.0..n.as_f64()).contains(&beta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta = {beta} outside [0, {n})")))
    }
}

fn check_finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Fraction of `sum(contrib)` coming from nodes within ten truncation lengths
/// of the boundary.
fn last_decade_share(grid: &RadialGrid, contrib: &[f64]) -> f64 {
    let total: f64 = contrib.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let cut = 10.0 * grid.epsilon();
    let tail: f64 = contrib
        .iter()
        .zip(grid.complement())
        .filter(|(_, &s)| s <= cut)
        .map(|(c, _)| c)
        .sum();
    tail / total
}

/// Gauss-Legendre points per cell for interpolant energies.
const CELL_POINTS: usize = 4;

fn cell_rule() -> ([f64; CELL_POINTS], [f64; CELL_POINTS]) {
    let (x, w) = gauss_legendre(CELL_POINTS);
    let mut t = [0.0; CELL_POINTS];
    let mut wt = [0.0; CELL_POINTS];
    for i in 0..CELL_POINTS {
        t[i] = 0.5 * (x[i] + 1.0);
        wt[i] = 0.5 * w[i];
    }
    (t, wt)
}

fn cell_width(g: &RadialGrid, k: usize) -> f64 {
    if g.nodes()[k] > 0.5 {
        g.complement()[k] - g.complement()[k + 1]
    } else {
        g.nodes()[k + 1] - g.nodes()[k]
    }
}

/// Derivative of the cubic Hermite interpolant at `x0 + t h`, and its partials
/// with respect to `(y0, y1, d0, d1)`.
fn hermite_slope(h: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> (f64, [f64; 4]) {
    let a = 6.0 * t * (1.0 - t) / h;
    let b0 = 1.0 - 4.0 * t + 3.0 * t * t;
    let b1 = 3.0 * t * t - 2.0 * t;
    (a * (y1 - y0) + b0 * d0 + b1 * d1, [-a, a, b0, b1])
}

/// `omega * int |p'|^n r^(n-1) weight dr` for the interpolant `p` of `u`;
/// `weight(k, x)` is evaluated at the point `x` of cell `k`.
pub(crate) fn interpolant_energy(u: &RadialProfile, n: Dimension, weight: impl Fn(usize, f64) -> f64) -> f64 {
    let c = Constants::new(n);
    let nf = n.as_f64();
    let g = u.grid();
    let (y, d) = (u.values(), u.derivative());
    let (tq, wq) = cell_rule();
    let mut sum = 0.0;
    for k in 0..g.len() - 1 {
        let h = cell_width(g, k);
        let mut cell = 0.0;
        for q in 0..CELL_POINTS {
            let x = g.nodes()[k] + tq[q] * h;
            let (p, _) = hermite_slope(h, y[k], y[k + 1], d[k], d[k + 1], tq[q]);
            if p != 0.0 {
                cell += wq[q] * p.abs().powf(nf) * x.powf(nf - 1.0) * weight(k, x);
            }
        }
        sum += h * cell;
    }
    c.omega * sum
}

/// Gradient of [`interpolant_energy`] with respect to node values.
pub(crate) fn interpolant_energy_gradient(
    u: &RadialProfile,
    n: Dimension,
    weight: impl Fn(usize, f64) -> f64,
) -> Vec<f64> {
    let c = Constants::new(n);
    let nf = n.as_f64();
    let g = u.grid();
    let y = u.values();
    let (d, partials) = pchip_slopes_with_partials(g.nodes(), y);
    let (tq, wq) = cell_rule();
    let mut out = vec![0.0; u.len()];
    let mut dslope = vec![0.0; u.len()];
    for k in 0..g.len() - 1 {
        let h = cell_width(g, k);
        for q in 0..CELL_POINTS {
            let x = g.nodes()[k] + tq[q] * h;
            let (p, dp) = hermite_slope(h, y[k], y[k + 1], d[k], d[k + 1], tq[q]);
            if p == 0.0 {
                continue;
            }
            let coef = c.omega * h * wq[q] * nf * p.abs().powf(nf - 1.0) * p.signum() * x.powf(nf - 1.0) * weight(k, x);
            out[k] += coef * dp[0];
            out[k + 1] += coef * dp[1];
            dslope[k] += coef * dp[2];
            dslope[k + 1] += coef * dp[3];
        }
    }
    for i in 0..u.len() {
        if dslope[i] == 0.0 {
            continue;
        }
        for &(j, pj) in &partials[i] {
            out[j] += dslope[i] * pj;
        }
    }
    out
}

/// `omega * int |u'|^n r^(n-1) dr` for the Hermite interpolant of `u`.
pub fn grad_energy(u: &RadialProfile, n: Dimension) -> Result<f64> {
    check_finite(interpolant_energy(u, n, |_, _| 1.0), "gradient energy")
}

/// Gradient of [`grad_energy`] with respect to node values.
pub fn grad_energy_gradient(u: &RadialProfile, n: Dimension) -> Vec<f64> {
    interpolant_energy_gradient(u, n, |_, _| 1.0)
}

/// Per-node weights of `omega * int |u|^n V r^(n-1) dr`.
fn potential_weights(g: &RadialGrid, v: &Potential, c: &Constants) -> Vec<f64> {
    let nf = c.n.as_f64();
    (0..g.len())
        .map(|i| {
            let r = g.nodes()[i];
            c.omega * g.weights()[i] * v.value_with_complement(r, g.complement()[i], c) * r.powf(nf - 1.0)
        })
        .collect()
}

fn potential_integral(u: &RadialProfile, v: &Potential, n: Dimension) -> Result<Flagged> {
    let c = Constants::new(n);
    let nf = n.as_f64();
    let w = potential_weights(u.grid(), v, &c);
    let contrib: Vec<f64> = w.iter().zip(u.values()).map(|(w, x)| w * x.abs().powf(nf)).collect();
    let value = check_finite(contrib.iter().sum(), "potential term")?;
    let divergent = v.is_boundary_critical() && last_decade_share(u.grid(), &contrib) > TAIL_SHARE_LIMIT;
    Ok(Flagged { value, overflow: false, divergent })
}

/// Sharp Hardy term `c_H * omega * int |u|^n (1-r^2)^(-n) r^(n-1) dr`.
///
/// Flagged divergent when more than half of the value sits in the last
/// decade before the boundary.
pub fn hardy_term(u: &RadialProfile, n: Dimension) -> Result<Flagged> {
    potential_integral(u, &Potential::HardyCritical, n)
}

/// Gradient of the Hardy term value.
pub fn hardy_term_gradient(u: &RadialProfile, n: Dimension) -> Vec<f64> {
    potential_gradient(u, &Potential::HardyCritical, n)
}

fn potential_gradient(u: &RadialProfile, v: &Potential, n: Dimension) -> Vec<f64> {
    let c = Constants::new(n);
    let nf = n.as_f64();
    let w = potential_weights(u.grid(), v, &c);
    w.iter()
        .zip(u.values())
        .map(|(w, x)| w * nf * x.abs().powf(nf - 1.0) * x.signum())
        .collect()
}

/// `grad_energy(u) - hardy_term(u)`.
pub fn h_functional(u: &RadialProfile, n: Dimension) -> Result<f64> {
    Ok(grad_energy(u, n)? - hardy_term(u, n)?.value)
}

/// Gradient of [`h_functional`].
pub fn h_functional_gradient(u: &RadialProfile, n: Dimension) -> Vec<f64> {
    let a = grad_energy_gradient(u, n);
    let b = hardy_term_gradient(u, n);
    a.iter().zip(&b).map(|(x, y)| x - y).collect()
}

/// `grad_energy(u) - omega * int V |u|^n r^(n-1) dr`.
pub fn q_v_functional(u: &RadialProfile, v: &Potential, n: Dimension) -> Result<f64> {
    Ok(grad_energy(u, n)? - potential_integral(u, v, n)?.value)
}

/// `omega * int |u|^n r^(n-1) dr`, the n-th power of the Euclidean L^n norm.
pub fn lebesgue_norm_n(u: &RadialProfile, n: Dimension) -> Result<f64> {
    Ok(potential_integral(u, &Potential::Constant(1.0), n)?.value)
}

/// Gradient of [`lebesgue_norm_n`].
pub fn lebesgue_norm_n_gradient(u: &RadialProfile, n: Dimension) -> Vec<f64> {
    potential_gradient(u, &Potential::Constant(1.0), n)
}

/// `int |u|^n dv_H` with the Poincare ball volume element.
pub fn hyperbolic_norm_n(u: &RadialProfile, n: Dimension) -> Result<f64> {
    let c = Constants::new(n);
    let nf = n.as_f64();
    let scale = 2f64.powf(nf) / c.hardy_const;
    Ok(scale * potential_integral(u, &Potential::HardyCritical, n)?.value)
}

/// Weights `W_i` with `int_0^1 f(r) r^(n-beta-1) dr ~ sum W_i f(r_i)` for `f`
/// flat near both ends: the trapezoid sum plus the exact head on `[0, r_0]`
/// and a one-node tail on `[1 - eps, 1]`.
fn mt_weights(g: &RadialGrid, n: Dimension, beta: f64, omega: f64) -> Vec<f64> {
    let p = n.as_f64() - beta - 1.0;
    let mut w: Vec<f64> = g
        .nodes()
        .iter()
        .zip(g.weights())
        .map(|(r, w)| omega * w * r.powf(p))
        .collect();
    let r0 = g.first();
    w[0] += omega * r0.powf(p + 1.0) / (p + 1.0);
    let last = w.len() - 1;
    w[last] += omega * g.epsilon() * g.last().powf(p);
    w
}

fn mt_exponents(u: &RadialProfile, c: &Constants, beta: f64, scale: f64) -> Vec<f64> {
    let k = scale * (1.0 - beta / c.n.as_f64()) * c.alpha_n;
    let q = c.conjugate();
    u.values().iter().map(|x| k * x.abs().powf(q)).collect()
}

/// Singular Moser-Trudinger integral
/// `omega * int_0^1 exp(scale (1 - beta/n) alpha_n |u|^(n/(n-1))) r^(n-beta-1) dr`.
///
/// Exponents above [`EXP_CLAMP`] are clamped and flagged.
pub fn singular_mt(u: &RadialProfile, n: Dimension, beta: f64, exponent_scale: f64) -> Result<Flagged> {
    Ok(singular_mt_with_gradient(u, n, beta, exponent_scale, false)?.0)
}

/// [`singular_mt`] and, if requested, its gradient with respect to node values.
pub fn singular_mt_with_gradient(
    u: &RadialProfile,
    n: Dimension,
    beta: f64,
    exponent_scale: f64,
    want_gradient: bool,
) -> Result<(Flagged, Vec<f64>)> {
    check_beta(n, beta)?;
    if !(exponent_scale > 0.0 && exponent_scale.is_finite()) {
        return Err(Error::Domain(format!("exponent scale {exponent_scale} must be positive")));
    }
    let c = Constants::new(n);
    let w = mt_weights(u.grid(), n, beta, c.omega);
    let e = mt_exponents(u, &c, beta, exponent_scale);
    let overflow = e.iter().any(|&x| x > EXP_CLAMP);
    let terms: Vec<f64> = e.iter().zip(&w).map(|(x, w)| w * x.min(EXP_CLAMP).exp()).collect();
    let value = check_finite(terms.iter().sum(), "singular Moser-Trudinger integral")?;
    let mut grad = Vec::new();
    if want_gradient {
        let q = c.conjugate();
        let k = exponent_scale * (1.0 - beta / n.as_f64()) * c.alpha_n;
        grad = terms
            .iter()
            .zip(u.values())
            .zip(&e)
            .map(|((t, x), ex)| {
                if *ex > EXP_CLAMP {
                    0.0
                } else {
                    t * k * q * x.abs().powf(q - 1.0) * x.signum()
                }
            })
            .collect();
    }
    Ok((Flagged { value, overflow, divergent: false }, grad))
}

/// Hyperbolic Moser-Trudinger integral
/// `omega * int E_m((1 - beta/n) alpha_n |u|^(n/(n-1))) (1-r^2)^(-n) r^(n-beta-1) dr`.
pub fn hyperbolic_mt(u: &RadialProfile, n: Dimension, beta: f64, m: u32) -> Result<Flagged> {
    check_beta(n, beta)?;
    if m + 1 < n.get() || m > n.get() {
        return Err(Error::Domain(format!("truncation index {m} must be n - 1 or n")));
    }
    let c = Constants::new(n);
    let g = u.grid();
    let nf = n.as_f64();
    let w = mt_weights(g, n, beta, c.omega);
    let last = w.len() - 1;
    let e = mt_exponents(u, &c, beta, 1.0);
    let mut overflow = false;
    let mut contrib = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        let x = if e[i] > EXP_CLAMP {
            overflow = true;
            EXP_CLAMP
        } else {
            e[i]
        };
        // The one-node boundary tail belongs to the flat-integrand model only.
        let wi = if i == last { c.omega * g.weights()[i] * g.last().powf(nf - beta - 1.0) } else { w[i] };
        contrib.push(wi * truncated_exp(x, m)? / g.one_minus_sq(i).powf(nf));
    }
    let value = check_finite(contrib.iter().sum(), "hyperbolic Moser-Trudinger integral")?;
    let divergent = last_decade_share(g, &contrib) > TAIL_SHARE_LIMIT;
    Ok(Flagged { value, overflow, divergent })
}

// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    for i in 0..order {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = order as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=order {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = order as f64 * (z * p1 - p0) / (z * z - 1.0);
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
        x[i] = z;
    }
    (x, w)
}

/// Geodesic radius `ln((1+r)/(1-r))` of the Euclidean radius `r`, given `s = 1 - r`.
fn geodesic_radius(r: f64, s: f64) -> f64 {
    r.ln_1p() - s.ln()
}

/// `int_a^b sinh^(n-1)(t) dt` by composite Gauss-Legendre.
fn sinh_power_integral(a: f64, b: f64, n: Dimension, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    if b <= a {
        return 0.0;
    }
    let k = n.get() as i32 - 1;
    let panels = ((b - a) / 0.5).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            sum += w * 0.5 * h * (mid + 0.5 * h * x).sinh().powi(k);
        }
    }
    sum
}

/// Hyperbolic volume of the Euclidean ball of radius `r`,
/// `omega * int_0^r (2/(1-s^2))^n s^(n-1) ds`.
pub fn hyperbolic_volume(r: f64, n: Dimension) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("radius {r} outside [0, 1)")));
    }
    let c = Constants::new(n);
    let rule = gauss_legendre(16);
    Ok(c.omega * sinh_power_integral(0.0, geodesic_radius(r, 1.0 - r), n, &rule))
}

/// Hyperbolic volumes of the balls bounded by each grid node.
pub fn hyperbolic_ball_volumes(g: &RadialGrid, n: Dimension) -> Vec<f64> {
    let c = Constants::new(n);
    let rule = gauss_legendre(10);
    let rho: Vec<f64> = g
        .nodes()
        .iter()
        .zip(g.complement())
        .map(|(&r, &s)| geodesic_radius(r, s))
        .collect();
    let mut out = Vec::with_capacity(g.len());
    let mut acc = c.omega * sinh_power_integral(0.0, rho[0], n, &rule);
    out.push(acc);
    for i in 1..g.len() {
        acc += c.omega * sinh_power_integral(rho[i - 1], rho[i], n, &rule);
        out.push(acc);
    }
    out
}

/// Pólya-Szegő check: energy drops under rearrangement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolyaSzego {
    /// `grad_energy(u) - grad_energy(u*)`.
    pub margin: f64,
    /// `H(u) - H(u*)`.
    pub h_margin: f64,
}

pub fn check_polya_szego(u: &RadialProfile, n: Dimension) -> Result<PolyaSzego> {
    let star = rearrange(u, n)?;
    Ok(PolyaSzego {
        margin: grad_energy(u, n)? - grad_energy(&star, n)?,
        h_margin: h_functional(u, n)? - h_functional(&star, n)?,
    })
}

/// `singular_mt(u*) - singular_mt(u)` at the sharp exponent.
pub fn check_hardy_littlewood(u: &RadialProfile, n: Dimension, beta: f64) -> Result<Flagged> {
    let star = rearrange(u, n)?;
    let a = singular_mt(&star, n, beta, 1.0)?;
    let b = singular_mt(u, n, beta, 1.0)?;
    Ok(Flagged { value: a.value - b.value, overflow: a.overflow || b.overflow, divergent: false })
}

/// `sup_{r > 1/2} u(r) / (1 - r^2)^((n-1)/p)` over grid nodes.
pub fn check_boundary_decay(u: &RadialProfile, n: Dimension, p: f64) -> Result<f64> {
    if !(p > n.as_f64()) {
        return Err(Error::Domain(format!("decay exponent p = {p} must exceed n = {n}")));
    }
    let g = u.grid();
    let e = (n.as_f64() - 1.0) / p;
    Ok((0..g.len())
        .filter(|&i| g.nodes()[i] > 0.5)
        .map(|i| u.values()[i] / g.one_minus_sq(i).powf(e))
        .fold(0.0, f64::max))
}

/// Signed margins reported by [`functional_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margins {
    /// `grad_energy - hardy_term`.
    pub hardy_inequality: f64,
    pub polya_szego: f64,
    pub hardy_littlewood: f64,
}

/// Every functional of one profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub grad_energy: f64,
    pub hardy_term: f64,
    pub h_value: f64,
    pub mt_integral: f64,
    pub hyperbolic_mt: f64,
    pub beta: f64,
    pub truncation_m: u32,
    pub overflow: bool,
    pub divergence_flag: bool,
    pub margins: Margins,
}

pub fn functional_report(u: &RadialProfile, n: Dimension, beta: f64) -> Result<FunctionalReport> {
    let grad = grad_energy(u, n)?;
    let hardy = hardy_term(u, n)?;
    let mt = singular_mt(u, n, beta, 1.0)?;
    let hyp = hyperbolic_mt(u, n, beta, n.get())?;
    let ps = check_polya_szego(u, n)?;
    let hl = check_hardy_littlewood(u, n, beta)?;
    Ok(FunctionalReport {
        grad_energy: grad,
        hardy_term: hardy.value,
        h_value: grad - hardy.value,
        mt_integral: mt.value,
        hyperbolic_mt: hyp.value,
        beta,
        truncation_m: n.get(),
        overflow: mt.overflow || hyp.overflow || hl.overflow,
        divergence_flag: hardy.divergent || hyp.divergent,
        margins: Margins {
            hardy_inequality: grad - hardy.value,
            polya_szego: ps.margin,
            hardy_littlewood: hl.value,
        },
    })
}
