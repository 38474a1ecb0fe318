//! Versioned JSON and CSV emission.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use crate::config::RunConfig;

pub const FORMAT_VERSION: &str = "hmtlab-report/1";

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    format_version: &'static str,
    config: &'a RunConfig,
    result: &'a T,
}

/// A CSV table: header plus rows of already formatted cells.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// 17 significant digits, locale independent.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

pub fn render_json<T: Serialize>(config: &RunConfig, result: &T) -> anyhow::Result<Vec<u8>> {
    let doc = Document { format_version: FORMAT_VERSION, config, result };
    let mut out = serde_json::to_vec_pretty(&doc)?;
    out.push(b'\n');
    Ok(out)
}

/// CSV preceded by `#` comment lines carrying the version and the config.
pub fn render_csv(config: &RunConfig, table: &Table) -> anyhow::Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "# format_version: {FORMAT_VERSION}")?;
    writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

pub fn emit(bytes: &[u8], out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
