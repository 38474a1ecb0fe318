//! Subcommand bodies. Each returns a JSON result and a CSV table; the caller
//! picks the encoding.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use hmtlab::corpus::{bump_corpus, monotone_corpus};
use hmtlab::extremal::{
    boundedness_sweep, divergence_probe, dyadic_moser_family, estimate_lambda1, improved_sweep, maximize_mt,
    normalize_q_v, random_start, SearchOptions, SearchReport, SweepRow,
};
use hmtlab::functionals::{check_hardy_littlewood, check_polya_szego, hyperbolic_norm_n};
use hmtlab::green::{
    check_boundary_bound, comparison_supersolution_margin, extract_c_g, make_maps_with, solve_green, GreenTable,
    GreenTableRecord,
};
use hmtlab::rearrange::{equimeasurability_defect, rearrange};
use hmtlab::transplant::{check_maps, transplant_report, TransplantReport};
use hmtlab::{make_grid, Error, Potential, RadialGrid};

use crate::config::{ConfigError, RunConfig};
use crate::output::{flag, num, Table};

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Exit code 1.
    Config(String),
    /// Exit code 2.
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidDimension(_)
            | Error::Config(_)
            | Error::Domain(_)
            | Error::Precondition(_)
            | Error::Instability(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Numerical(format!("serialization failed: {e}"))
    }
}

/// Rendered result of a command.
pub struct Outcome {
    pub json: serde_json::Value,
    pub csv: Table,
    /// Violated certification: the report is still written, then exit 2.
    pub violation: Option<String>,
}

fn grid(cfg: &RunConfig) -> Result<Arc<RadialGrid>, Failure> {
    Ok(Arc::new(make_grid(cfg.grid_points, cfg.epsilon, cfg.grading())?))
}

#[derive(Serialize)]
struct GreenOut {
    table: GreenTableRecord,
    extracted_c_g: f64,
    boundary_bound: f64,
    /// Only for the critical Hardy potential.
    supersolution_margin: Option<f64>,
}

pub fn green(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let n = cfg.dimension()?;
    let v = cfg.potential()?;
    let grid = grid(cfg)?;
    let table = solve_green(n, &v, grid.clone(), cfg.tol, cfg.max_iter)?;
    let out = GreenOut {
        table: table.to_record(),
        extracted_c_g: extract_c_g(&table)?,
        boundary_bound: check_boundary_bound(&table),
        supersolution_margin: match v {
            Potential::HardyCritical => Some(comparison_supersolution_margin(n, &grid)?),
            _ => None,
        },
    };
    let mut csv = Table::new(&["r", "G", "Gprime", "remainder"]);
    for i in 0..grid.len() {
        csv.push(vec![
            num(grid.nodes()[i]),
            num(table.g_values[i]),
            num(table.g_deriv[i]),
            num(table.remainder[i]),
        ]);
    }
    Ok(Outcome { json: serde_json::to_value(out)?, csv, violation: None })
}

/// Read a table written by `green` (or a bare record) and validate it.
fn load_table(path: &Path, tol: f64) -> Result<GreenTable, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read table {}: {e}", path.display())))?;
    let corrupt = |m: String| Failure::Numerical(format!("corrupt Green table {}: {m}", path.display()));
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    if let Some(inner) = value.get_mut("result").and_then(|r| r.get_mut("table")) {
        value = inner.take();
    }
    let rec: GreenTableRecord = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    Ok(GreenTable::from_record(&rec, tol)?)
}

#[derive(Serialize)]
struct ProfileReport {
    profile: usize,
    #[serde(flatten)]
    report: TransplantReport,
}

#[derive(Serialize)]
struct Violation {
    profile: usize,
    margin: &'static str,
    value: f64,
}

#[derive(Serialize)]
struct VerifySummary {
    profiles: usize,
    c_g: f64,
    comparison_factor: f64,
    min_key_margin: f64,
    min_hardy_lemma_margin: f64,
    /// `mt_comparison_margin / mt_scale`.
    min_mt_margin_relative: f64,
    max_identity_grad_defect: f64,
    max_identity_hardy_defect: f64,
    max_mt_identity_defect: f64,
    any_overflow: bool,
    violations: Vec<Violation>,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyOut {
    reports: Vec<ProfileReport>,
    summary: VerifySummary,
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let n = cfg.dimension()?;
    let table = match &cfg.table {
        Some(p) => {
            let t = load_table(Path::new(p), cfg.tol)?;
            if t.n != n {
                return Err(Failure::Config(format!("table has n = {}, config has n = {}", t.n, cfg.n)));
            }
            t
        }
        None => solve_green(n, &cfg.potential()?, grid(cfg)?, cfg.tol, cfg.max_iter)?,
    };
    let v = table.potential.clone();
    let maps = make_maps_with(&table, cfg.beta, cfg.t_points)?;
    check_maps(&maps)?;
    let corpus = monotone_corpus(&table.grid, cfg.corpus_size, cfg.seed)?;

    let mut reports = Vec::with_capacity(corpus.len());
    for (i, u) in corpus.iter().enumerate() {
        let u = normalize_q_v(u, &v, n)?;
        reports.push(ProfileReport { profile: i, report: transplant_report(&u, &maps, n, cfg.beta)? });
    }

    let min = |f: fn(&TransplantReport) -> f64| reports.iter().map(|r| f(&r.report)).fold(f64::INFINITY, f64::min);
    let max = |f: fn(&TransplantReport) -> f64| reports.iter().map(|r| f(&r.report)).fold(0.0, f64::max);
    let mut violations = Vec::new();
    for r in &reports {
        let t = &r.report;
        let checks = [
            ("key_margin", t.key_margin, cfg.tol),
            ("hardy_lemma_margin", t.hardy_lemma_margin, cfg.tol),
            ("mt_comparison_margin", t.mt_comparison_margin, cfg.tol * t.mt_scale),
        ];
        for (name, value, slack) in checks {
            if !(value >= -slack) {
                violations.push(Violation { profile: r.profile, margin: name, value });
            }
        }
    }
    let summary = VerifySummary {
        profiles: reports.len(),
        c_g: maps.c_g,
        comparison_factor: maps.comparison_factor(),
        min_key_margin: min(|t| t.key_margin),
        min_hardy_lemma_margin: min(|t| t.hardy_lemma_margin),
        min_mt_margin_relative: min(|t| t.mt_comparison_margin / t.mt_scale),
        max_identity_grad_defect: max(|t| t.identity_grad_defect),
        max_identity_hardy_defect: max(|t| t.identity_hardy_defect),
        max_mt_identity_defect: max(|t| t.mt_identity_defect),
        any_overflow: reports.iter().any(|r| r.report.overflow),
        pass: violations.is_empty(),
        violations,
    };
    let violation = summary.violations.first().map(|v| {
        format!(
            "{} violated margin(s); first: profile {} {} = {:e}",
            summary.violations.len(),
            v.profile,
            v.margin,
            v.value
        )
    });

    let mut csv = Table::new(&[
        "profile",
        "grad_u",
        "grad_v",
        "hardy_u",
        "identity_grad_defect",
        "identity_hardy_defect",
        "hardy_lemma_margin",
        "key_margin",
        "mt_comparison_margin",
        "mt_identity_defect",
        "mt_scale",
        "overflow",
    ]);
    for r in &reports {
        let t = &r.report;
        csv.push(vec![
            r.profile.to_string(),
            num(t.grad_u),
            num(t.grad_v),
            num(t.hardy_u),
            num(t.identity_grad_defect),
            num(t.identity_hardy_defect),
            num(t.hardy_lemma_margin),
            num(t.key_margin),
            num(t.mt_comparison_margin),
            num(t.mt_identity_defect),
            num(t.mt_scale),
            flag(t.overflow),
        ]);
    }
    // Summary row: minima of margins, maxima of defects.
    let s = &summary;
    csv.push(vec![
        "summary".into(),
        String::new(),
        String::new(),
        String::new(),
        num(s.max_identity_grad_defect),
        num(s.max_identity_hardy_defect),
        num(s.min_hardy_lemma_margin),
        num(s.min_key_margin),
        num(min(|t| t.mt_comparison_margin)),
        num(s.max_mt_identity_defect),
        String::new(),
        flag(s.any_overflow),
    ]);
    Ok(Outcome { json: serde_json::to_value(VerifyOut { reports, summary })?, csv, violation })
}

fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut csv = Table::new(&["param", "value", "overflow", "divergence_flag"]);
    for r in rows {
        csv.push(vec![num(r.param), num(r.value), flag(r.overflow), flag(r.divergence_flag)]);
    }
    csv
}

fn ratio(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let hi = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.fold(f64::INFINITY, f64::min);
    hi / lo
}

#[derive(Serialize)]
struct SweepOut {
    rows: Vec<SweepRow>,
    max_min_ratio: f64,
    lambda1_hat: Option<f64>,
    lambda: Option<f64>,
}

#[derive(Serialize)]
struct ProbeOut {
    rows: Vec<hmtlab::extremal::ProbeRow>,
    /// `max/min` of the `m = n` column.
    upper_ratio: f64,
    /// Last over first value of the `m = n - 1` column.
    lower_growth: f64,
}

fn search_options(cfg: &RunConfig) -> SearchOptions {
    SearchOptions { max_iter: cfg.max_iter, seed: cfg.seed, ..SearchOptions::default() }
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let n = cfg.dimension()?;
    let grid = grid(cfg)?;
    let family = dyadic_moser_family(n, cfg.k_max);
    match cfg.mode() {
        "divergence" => {
            let ks: Vec<u32> = (2..=cfg.k_max.max(2)).collect();
            let rows = divergence_probe(&grid, n, cfg.beta, &ks)?;
            let mut csv = Table::new(&["param", "m", "value", "overflow", "divergence_flag"]);
            for r in &rows {
                for (m, s) in [(cfg.n - 1, &r.lower), (cfg.n, &r.upper)] {
                    csv.push(vec![num(r.param), m.to_string(), num(s.value), flag(s.overflow), flag(s.divergence_flag)]);
                }
            }
            let out = ProbeOut {
                upper_ratio: ratio(rows.iter().map(|r| r.upper.value)),
                lower_growth: rows.last().unwrap().lower.value / rows[0].lower.value,
                rows,
            };
            Ok(Outcome { json: serde_json::to_value(out)?, csv, violation: None })
        }
        "improved" => {
            let lambda1 = estimate_lambda1(&grid, n, &search_options(cfg))?.best_value;
            let lambda = cfg.lambda_fraction * lambda1;
            let rows = improved_sweep(&grid, n, cfg.beta, lambda, lambda1, &family)?;
            let csv = sweep_table(&rows);
            let out = SweepOut {
                max_min_ratio: ratio(rows.iter().map(|r| r.value)),
                rows,
                lambda1_hat: Some(lambda1),
                lambda: Some(lambda),
            };
            Ok(Outcome { json: serde_json::to_value(out)?, csv, violation: None })
        }
        _ => {
            let rows = boundedness_sweep(&grid, n, cfg.beta, &family, cfg.scale)?;
            let csv = sweep_table(&rows);
            let out =
                SweepOut { max_min_ratio: ratio(rows.iter().map(|r| r.value)), rows, lambda1_hat: None, lambda: None };
            Ok(Outcome { json: serde_json::to_value(out)?, csv, violation: None })
        }
    }
}

#[derive(Serialize)]
struct SearchOut {
    best_value: f64,
    iterations: usize,
    constraint_residual: f64,
    stalled: bool,
    gradient_check: f64,
    seed: u64,
    trajectory: Vec<(usize, f64)>,
    r: Vec<f64>,
    u: Vec<f64>,
}

impl From<SearchReport> for SearchOut {
    fn from(s: SearchReport) -> Self {
        SearchOut {
            best_value: s.best_value,
            iterations: s.iterations,
            constraint_residual: s.constraint_residual,
            stalled: s.stalled,
            gradient_check: s.gradient_check,
            seed: s.seed,
            r: s.best_profile.grid().nodes().to_vec(),
            u: s.best_profile.values().to_vec(),
            trajectory: s.trajectory,
        }
    }
}

pub fn search(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let n = cfg.dimension()?;
    let grid = grid(cfg)?;
    let options = search_options(cfg);
    let report = match cfg.mode() {
        "lambda1" => estimate_lambda1(&grid, n, &options)?,
        _ => maximize_mt(n, cfg.beta, &random_start(&grid, cfg.seed)?, &options)?,
    };
    let mut csv = Table::new(&["param", "value", "overflow", "divergence_flag"]);
    for &(it, value) in &report.trajectory {
        csv.push(vec![it.to_string(), num(value), flag(false), flag(false)]);
    }
    Ok(Outcome { json: serde_json::to_value(SearchOut::from(report))?, csv, violation: None })
}

#[derive(Serialize)]
struct RearrangeOut {
    polya_szego_margin: f64,
    h_margin: f64,
    hardy_littlewood_margin: f64,
    equimeasurability_defect: f64,
    hyperbolic_norm_defect: f64,
    r: Vec<f64>,
    u: Vec<f64>,
    u_star: Vec<f64>,
}

pub fn rearrange_demo(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let n = cfg.dimension()?;
    let grid = grid(cfg)?;
    let u = bump_corpus(&grid, 1, cfg.seed)?.remove(0);
    let star = rearrange(&u, n)?;
    let ps = check_polya_szego(&u, n)?;
    let hl = check_hardy_littlewood(&u, n, cfg.beta)?;
    let norm_u = hyperbolic_norm_n(&u, n)?;
    let out = RearrangeOut {
        polya_szego_margin: ps.margin,
        h_margin: ps.h_margin,
        hardy_littlewood_margin: hl.value,
        equimeasurability_defect: equimeasurability_defect(&u, &star, n, 100),
        hyperbolic_norm_defect: (hyperbolic_norm_n(&star, n)? - norm_u).abs() / norm_u,
        r: grid.nodes().to_vec(),
        u: u.values().to_vec(),
        u_star: star.values().to_vec(),
    };
    let violation = if out.polya_szego_margin < -cfg.tol {
        Some(format!("Polya-Szego margin {:e} below -tol", out.polya_szego_margin))
    } else if out.hardy_littlewood_margin < -cfg.tol {
        Some(format!("Hardy-Littlewood margin {:e} below -tol", out.hardy_littlewood_margin))
    } else {
        None
    };
    let mut csv = Table::new(&["r", "u", "u_star"]);
    for i in 0..grid.len() {
        csv.push(vec![num(out.r[i]), num(out.u[i]), num(out.u_star[i])]);
    }
    Ok(Outcome { json: serde_json::to_value(out)?, csv, violation })
}
