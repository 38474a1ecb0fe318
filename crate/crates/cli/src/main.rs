//! `hmtlab`: run Green-function solves, transplantation certificates,
//! sweeps and searches, and write versioned JSON or CSV reports.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure or a
//! violated certificate.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Outcome};
use config::{Command, Format, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "hmtlab", version, about = "Radial Hardy-Moser-Trudinger experiments on the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve for the Green function and its pole constant
    Green(Run),
    /// Certify the transplantation chain on a seeded corpus
    Verify(Run),
    /// Moser, boundary-divergence or improved-inequality sweeps
    Sweep(Run),
    /// Constrained maximization or lambda1 estimation
    Search(Run),
    /// Rearrange a seeded bump and check the rearrangement inequalities
    RearrangeDemo(Run),
}

#[derive(clap::Args)]
struct Run {
    /// JSON config with flat keys mirroring the flags; flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    flags: Overrides,
}

fn run(cmd: Command, args: Run) -> Result<Option<String>, Failure> {
    let cfg = RunConfig::resolve(cmd, args.flags, args.config.as_deref())?;
    let Outcome { json, csv, violation } = match cmd {
        Command::Green => commands::green(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Search => commands::search(&cfg),
        Command::RearrangeDemo => commands::rearrange_demo(&cfg),
    }?;
    let bytes = match cfg.format {
        Format::Json => output::render_json(&cfg, &json),
        Format::Csv => output::render_csv(&cfg, &csv),
    }
    .and_then(|b| output::emit(&b, args.out.as_deref()).map(|_| b));
    // An unwritable output path is a configuration problem.
    bytes.map_err(|e| Failure::Config(format!("{e:#}")))?;
    Ok(violation)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (cmd, args) = match cli.command {
        Sub::Green(a) => (Command::Green, a),
        Sub::Verify(a) => (Command::Verify, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Search(a) => (Command::Search, a),
        Sub::RearrangeDemo(a) => (Command::RearrangeDemo, a),
    };
    match run(cmd, args) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(msg)) => {
            eprintln!("hmtlab {}: certification failed: {msg}", cmd.name());
            ExitCode::from(2)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("hmtlab {}: {msg}", cmd.name());
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("hmtlab {}: numerical failure: {msg}", cmd.name());
            ExitCode::from(2)
        }
    }
}
