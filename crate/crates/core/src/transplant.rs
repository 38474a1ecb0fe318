//! Transplantation `v(t) = u(a(t))` and the identities and inequalities that
//! carry the Hardy-deficit problem over to a pure Dirichlet-energy problem.
//!
//! All `t`-side integrals use the trapezoid rule on the maps' `t`-grid; the
//! region `t < t_0` is covered by a one-term head where needed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{grad_energy, interpolant_energy, q_v_functional, singular_mt, Flagged};
use crate::interp::hermite;
use crate::green::TransplantMaps;
use crate::profile::RadialProfile;
use crate::quad::{Constants, Dimension};

/// Signed margins and defects of one transplantation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransplantReport {
    pub grad_u: f64,
    pub grad_v: f64,
    /// `omega int V |u|^n r^(n-1) dr` for the maps' potential.
    pub hardy_u: f64,
    pub identity_grad_defect: f64,
    pub identity_hardy_defect: f64,
    pub hardy_lemma_margin: f64,
    /// `Q_V(u) - grad_energy(v)`.
    pub key_margin: f64,
    pub mt_comparison_margin: f64,
    /// Relative defect of the `Psi`-weighted change of variables.
    pub mt_identity_defect: f64,
    /// `singular_mt(u)`, the scale for the comparison margin.
    pub mt_scale: f64,
    pub beta: f64,
    pub overflow: bool,
}

fn check_same_truncation(u: &RadialProfile, maps: &TransplantMaps) -> Result<()> {
    let eps_u = *u.grid().complement().last().unwrap();
    let eps_m = *maps.one_minus_a.last().unwrap();
    if (eps_u - eps_m).abs() > 1e-9 * eps_m {
        return Err(Error::Config(format!(
            "profile truncation {eps_u:e} differs from the Green table truncation {eps_m:e}"
        )));
    }
    Ok(())
}

/// Relative rise tolerated as rounding noise in a non-increasing profile.
pub const MONOTONE_SLACK: f64 = 1e-13;

/// `v(t) = u(a(t))` on the maps' `t`-grid.
pub fn pushforward(u: &RadialProfile, maps: &TransplantMaps) -> Result<RadialProfile> {
    if !u.is_non_increasing_within(MONOTONE_SLACK) {
        return Err(Error::Precondition("pushforward needs a non-increasing profile; rearrange first".into()));
    }
    check_same_truncation(u, maps)?;
    let mut values: Vec<f64> = maps.a.iter().map(|&a| u.value_at(a)).collect();
    *values.last_mut().unwrap() = *u.values().last().unwrap();
    for i in 1..values.len() {
        if values[i] > values[i - 1] {
            values[i] = values[i - 1];
        }
    }
    RadialProfile::from_values(maps.t_grid.clone(), values)
}

fn t_integral(maps: &TransplantMaps, f: impl Fn(usize) -> f64) -> f64 {
    maps.t_grid.weights().iter().enumerate().map(|(j, w)| w * f(j)).sum()
}

/// `omega int |v'|^n t^(n-1) Phi dt`, with the same cell quadrature as
/// [`grad_energy`] and `Phi` interpolated from its values and closed-form slopes.
fn weighted_energy(v: &RadialProfile, maps: &TransplantMaps, n: Dimension) -> f64 {
    let t = maps.t_grid.nodes();
    interpolant_energy(v, n, |k, x| {
        hermite(t[k], t[k + 1], maps.phi[k], maps.phi[k + 1], maps.phi_prime[k], maps.phi_prime[k + 1], x)
    })
}

/// `omega int |v|^n Phi' (-ln t)^(1-n) dt`, with the logarithm in log space.
fn weighted_potential(v: &RadialProfile, maps: &TransplantMaps, n: Dimension) -> f64 {
    let c = Constants::new(n);
    let nf = n.as_f64();
    let t = maps.t_grid.nodes();
    let x = v.values();
    c.omega
        * t_integral(maps, |j| {
            if maps.phi_prime[j] == 0.0 || x[j] == 0.0 {
                return 0.0;
            }
            let log_w = nf * x[j].abs().ln() + maps.phi_prime[j].ln() - (nf - 1.0) * (-t[j].ln()).ln();
            log_w.exp()
        })
}

fn relative(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(1.0)
}

/// Relative defect of `grad_energy(u) = omega int |v'|^n t^(n-1) (1 + Phi) dt`.
pub fn verify_grad_identity(u: &RadialProfile, v: &RadialProfile, maps: &TransplantMaps, n: Dimension) -> Result<f64> {
    let lhs = grad_energy(u, n)?;
    let rhs = grad_energy(v, n)? + weighted_energy(v, maps, n);
    finite(relative(lhs, rhs), "gradient identity defect")
}

/// Relative defect of `omega int V |u|^n r^(n-1) dr = omega int |v|^n Phi' (-ln t)^(1-n) dt`.
pub fn verify_hardy_identity(u: &RadialProfile, v: &RadialProfile, maps: &TransplantMaps, n: Dimension) -> Result<f64> {
    let lhs = potential_term(u, maps, n)?;
    let rhs = weighted_potential(v, maps, n);
    finite(relative(lhs, rhs), "potential identity defect")
}

fn potential_term(u: &RadialProfile, maps: &TransplantMaps, n: Dimension) -> Result<f64> {
    Ok(grad_energy(u, n)? - q_v_functional(u, &maps.potential, n)?)
}

/// `omega int |v'|^n t^(n-1) Phi dt - omega int |v|^n Phi' (-ln t)^(1-n) dt`.
pub fn check_hardy_lemma(v: &RadialProfile, maps: &TransplantMaps, n: Dimension) -> Result<f64> {
    if !std::sync::Arc::ptr_eq(v.grid_arc(), &maps.t_grid) && v.grid().nodes() != maps.t_grid.nodes() {
        return Err(Error::Config("profile is not sampled on the maps' t-grid".into()));
    }
    finite(weighted_energy(v, maps, n) - weighted_potential(v, maps, n), "Hardy lemma margin")
}

/// `Q_V(u) - grad_energy(pushforward(u))`; nonnegative by the key inequality.
pub fn check_key_inequality(u: &RadialProfile, maps: &TransplantMaps, n: Dimension) -> Result<f64> {
    let v = pushforward(u, maps)?;
    finite(q_v_functional(u, &maps.potential, n)? - grad_energy(&v, n)?, "key margin")
}

/// `e^((1-beta/n) alpha_n C_G) singular_mt(v) - singular_mt(u)` and the
/// relative defect of the `Psi`-weighted change of variables.
pub fn check_mt_comparison(
    u: &RadialProfile,
    v: &RadialProfile,
    maps: &TransplantMaps,
    n: Dimension,
    beta: f64,
) -> Result<(Flagged, f64)> {
    let mt_u = singular_mt(u, n, beta, 1.0)?;
    let mt_v = singular_mt(v, n, beta, 1.0)?;
    let factor = maps_with_beta(maps, beta).comparison_factor();
    let margin = factor * mt_v.value - mt_u.value;

    let c = Constants::new(n);
    let nf = n.as_f64();
    let p = nf - beta - 1.0;
    let k = (1.0 - beta / nf) * c.alpha_n;
    let q = c.conjugate();
    let t = maps.t_grid.nodes();
    let x = v.values();
    let psi = psi_for(maps, beta);
    let body = t_integral(maps, |j| (k * x[j].abs().powf(q)).exp() * t[j].powf(p) * psi[j]);
    let head = (k * x[0].abs().powf(q)).exp() * psi[0] * t[0].powf(p + 1.0) / (p + 1.0);
    let r_eps = *maps.one_minus_a.last().unwrap();
    let b = *maps.a.last().unwrap();
    let tail = r_eps * b.powf(p);
    let rhs = c.omega * (body + head + tail);
    let defect = (mt_u.value - rhs).abs() / mt_u.value.abs().max(f64::MIN_POSITIVE);
    let flagged = Flagged { value: margin, overflow: mt_u.overflow || mt_v.overflow, divergent: false };
    Ok((flagged, finite(defect, "Moser-Trudinger identity defect")?))
}

fn maps_with_beta(maps: &TransplantMaps, beta: f64) -> TransplantMaps {
    let mut m = maps.clone();
    m.beta = beta;
    m
}

/// `Psi(t; beta)`; reuses the stored table when `beta` matches.
fn psi_for(maps: &TransplantMaps, beta: f64) -> Vec<f64> {
    if beta == maps.beta {
        return maps.psi.clone();
    }
    let nf = maps.n.as_f64();
    maps.a_over_t
        .iter()
        .zip(&maps.flux_at_a)
        .map(|(q, f)| q.powf(nf - beta) / f)
        .collect()
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Run every check of the transplantation chain for one profile.
pub fn transplant_report(u: &RadialProfile, maps: &TransplantMaps, n: Dimension, beta: f64) -> Result<TransplantReport> {
    let v = pushforward(u, maps)?;
    let grad_u = grad_energy(u, n)?;
    let grad_v = grad_energy(&v, n)?;
    let hardy_u = potential_term(u, maps, n)?;
    let (mt, mt_identity_defect) = check_mt_comparison(u, &v, maps, n, beta)?;
    Ok(TransplantReport {
        grad_u,
        grad_v,
        hardy_u,
        identity_grad_defect: verify_grad_identity(u, &v, maps, n)?,
        identity_hardy_defect: verify_hardy_identity(u, &v, maps, n)?,
        hardy_lemma_margin: check_hardy_lemma(&v, maps, n)?,
        key_margin: grad_u - hardy_u - grad_v,
        mt_comparison_margin: mt.value,
        mt_identity_defect,
        mt_scale: singular_mt(u, n, beta, 1.0)?.value,
        beta,
        overflow: mt.overflow,
    })
}

/// Check the pointwise properties of the maps: `a` increasing, `Phi > 0` and
/// flux above one for a nonzero potential, `H(a(t))` strictly decreasing
/// (so `a(t)/t` is), `a(t)/t` below its limit, and `Psi <= (a/t)^(n-beta)`.
pub fn check_maps(maps: &TransplantMaps) -> Result<()> {
    let fail = |m: String| Err(Error::CorruptTable(m));
    if maps.a.windows(2).any(|w| w[1] <= w[0]) {
        return fail("a(t) is not strictly increasing".into());
    }
    let nonzero = !maps.potential.is_zero();
    let nf = maps.n.as_f64();
    let limit = maps.ratio_limit();
    for j in 0..maps.len() {
        if nonzero && !(maps.phi[j] > 0.0) {
            return fail(format!("Phi not positive at t-node {j}"));
        }
        if maps.flux_at_a[j] < 1.0 {
            return fail(format!("normalized flux below one at t-node {j}"));
        }
        if maps.a_over_t[j] > limit + 1e-6 {
            return fail(format!("a(t)/t above its limit at t-node {j}"));
        }
        if maps.psi[j] > maps.a_over_t[j].powf(nf - maps.beta) {
            return fail(format!("Psi above (a/t)^(n-beta) at t-node {j}"));
        }
    }
    if nonzero && maps.h_at_a.windows(2).any(|w| w[1] >= w[0]) {
        return fail("H(a(t)) is not strictly decreasing".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{make_maps, solve_green};
    use crate::profile::Potential;
    use crate::quad::{make_grid, Grading};
    use std::sync::Arc;

    fn setup(n: u32, v: Potential, np: usize) -> (Dimension, Arc<crate::quad::RadialGrid>, TransplantMaps) {
        let d = Dimension::new(n).unwrap();
        let g = Arc::new(make_grid(np, 1e-6, Grading::default()).unwrap());
        let t = solve_green(d, &v, g.clone(), 1e-8, 500).unwrap();
        let maps = make_maps(&t, 0.0).unwrap();
        (d, g, maps)
    }

    #[test]
    fn zero_potential_is_identity() {
        let (n, g, maps) = setup(2, Potential::Zero, 2048);
        check_maps(&maps).unwrap();
        let u = RadialProfile::from_fn_complement(g, |r, s| s * (1.0 + r) - 1e-6 * (2.0 - 1e-6)).unwrap();
        let v = pushforward(&u, &maps).unwrap();
        for (j, &t) in maps.t_grid.nodes().iter().enumerate() {
            assert!((v.values()[j] - u.value_at(t)).abs() < 1e-8);
        }
        let rep = transplant_report(&u, &maps, n, 0.0).unwrap();
        assert_eq!(rep.hardy_lemma_margin, 0.0);
        assert!(rep.identity_hardy_defect == 0.0);
        assert!(rep.mt_comparison_margin.abs() < 1e-6 * rep.mt_scale);
    }

    #[test]
    fn zero_profile() {
        let (n, g, maps) = setup(2, Potential::HardyCritical, 1024);
        let u = RadialProfile::zero(g);
        let rep = transplant_report(&u, &maps, n, 0.0).unwrap();
        assert_eq!(rep.key_margin, 0.0);
        assert_eq!(rep.hardy_lemma_margin, 0.0);
    }

    #[test]
    fn increasing_profile_rejected() {
        let (_, g, maps) = setup(2, Potential::HardyCritical, 256);
        let u = RadialProfile::from_fn(g, |r| r).unwrap();
        assert!(matches!(pushforward(&u, &maps), Err(Error::Precondition(_))));
    }

    #[test]
    fn parabola_hardy_critical() {
        let (n, g, maps) = setup(2, Potential::HardyCritical, 4096);
        check_maps(&maps).unwrap();
        let u = RadialProfile::from_fn_complement(g, |r, s| s * (1.0 + r)).unwrap().admissible();
        let rep = transplant_report(&u, &maps, n, 0.0).unwrap();
        assert!((rep.hardy_u - std::f64::consts::PI).abs() < 1e-3, "{}", rep.hardy_u);
        assert!(rep.identity_grad_defect < 1e-5, "{rep:?}");
        assert!(rep.identity_hardy_defect < 1e-4, "{rep:?}");
        assert!(rep.key_margin >= -1e-6);
        assert!(rep.hardy_lemma_margin >= -1e-6);
        assert!(rep.mt_comparison_margin >= 0.0);
        assert!(rep.mt_identity_defect < 1e-4, "{rep:?}");
        // key = lemma + (grad identity residual) + (potential identity residual).
        let slack = rep.identity_grad_defect * rep.grad_u.max(1.0) + rep.identity_hardy_defect * rep.hardy_u.max(1.0);
        assert!((rep.key_margin - rep.hardy_lemma_margin).abs() <= slack * (1.0 + 1e-9) + 1e-12);
    }
}
