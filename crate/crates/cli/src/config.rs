//! Run configuration: a flat JSON file overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use hmtlab::green::{DEFAULT_MAX_ITER, DEFAULT_TOL, DEFAULT_T_POINTS};
use hmtlab::{Dimension, Grading, Potential};

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand. Each one also has a config-file key of
/// the same name with dashes replaced by underscores.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Dimension (>= 2)
    #[arg(long)]
    pub n: Option<u32>,
    /// Singular weight exponent, 0 <= beta < n
    #[arg(long)]
    pub beta: Option<f64>,
    /// zero | hardy | hardy+lambda=<x> | const=<x>
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Boundary truncation: the last node is 1 - epsilon
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Innermost grid node
    #[arg(long)]
    pub first_node: Option<f64>,
    /// Green solver tolerance, also the margin tolerance of `verify`
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Subcommand variant (sweep: boundedness | divergence | improved; search: maximize | lambda1)
    #[arg(long)]
    pub mode: Option<String>,
    /// Profiles in the verification corpus
    #[arg(long)]
    pub corpus_size: Option<usize>,
    /// Nodes of the transplantation grid
    #[arg(long)]
    pub t_points: Option<usize>,
    /// Largest family index in sweeps
    #[arg(long)]
    pub k_max: Option<u32>,
    /// Exponent scale of the boundedness sweep
    #[arg(long)]
    pub scale: Option<f64>,
    /// lambda / lambda1_hat for the improved sweep
    #[arg(long)]
    pub lambda_fraction: Option<f64>,
    /// Green table JSON to verify against instead of solving
    #[arg(long)]
    pub table: Option<PathBuf>,
}

impl Overrides {
    /// Fill unset fields from `base`.
    fn or(self, base: Overrides) -> Overrides {
        Overrides {
            n: self.n.or(base.n),
            beta: self.beta.or(base.beta),
            potential: self.potential.or(base.potential),
            grid_points: self.grid_points.or(base.grid_points),
            epsilon: self.epsilon.or(base.epsilon),
            first_node: self.first_node.or(base.first_node),
            tol: self.tol.or(base.tol),
            max_iter: self.max_iter.or(base.max_iter),
            seed: self.seed.or(base.seed),
            format: self.format.or(base.format),
            mode: self.mode.or(base.mode),
            corpus_size: self.corpus_size.or(base.corpus_size),
            t_points: self.t_points.or(base.t_points),
            k_max: self.k_max.or(base.k_max),
            scale: self.scale.or(base.scale),
            lambda_fraction: self.lambda_fraction.or(base.lambda_fraction),
            table: self.table.or(base.table),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Green,
    Verify,
    Sweep,
    Search,
    RearrangeDemo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Green => "green",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Search => "search",
            Command::RearrangeDemo => "rearrange-demo",
        }
    }

    fn modes(self) -> &'static [&'static str] {
        match self {
            Command::Sweep => &["boundedness", "divergence", "improved"],
            Command::Search => &["maximize", "lambda1"],
            _ => &[],
        }
    }
}

/// Invalid configuration; maps to exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Fully resolved and validated configuration, embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub n: u32,
    pub beta: f64,
    pub potential: String,
    pub grid_points: usize,
    pub epsilon: f64,
    pub first_node: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub format: Format,
    pub mode: Option<String>,
    pub corpus_size: usize,
    pub t_points: usize,
    pub k_max: u32,
    pub scale: f64,
    pub lambda_fraction: f64,
    pub table: Option<String>,
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn read_file(path: &Path) -> Result<Overrides, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("bad config {}: {e}", path.display())))
}

impl RunConfig {
    /// Overlay `flags` on the optional config file and validate the result.
    pub fn resolve(command: Command, flags: Overrides, file: Option<&Path>) -> Result<Self, ConfigError> {
        let o = match file {
            Some(p) => flags.or(read_file(p)?),
            None => flags,
        };
        let default_mode = match command {
            Command::Sweep => Some("boundedness".to_string()),
            Command::Search => Some("maximize".to_string()),
            _ => None,
        };
        let cfg = RunConfig {
            command: command.name(),
            n: o.n.unwrap_or(2),
            beta: o.beta.unwrap_or(0.0),
            potential: o.potential.unwrap_or_else(|| "hardy".into()),
            grid_points: o.grid_points.unwrap_or(4096),
            epsilon: o.epsilon.unwrap_or(1e-6),
            first_node: o.first_node.unwrap_or(Grading::default().first_node),
            tol: o.tol.unwrap_or(DEFAULT_TOL),
            max_iter: o.max_iter.unwrap_or(if command == Command::Search { 300 } else { DEFAULT_MAX_ITER }),
            seed: o.seed.unwrap_or(0),
            format: o.format.unwrap_or(Format::Json),
            mode: o.mode.or(default_mode),
            corpus_size: o.corpus_size.unwrap_or(50),
            t_points: o.t_points.unwrap_or(DEFAULT_T_POINTS),
            k_max: o.k_max.unwrap_or(20),
            scale: o.scale.unwrap_or(1.0),
            lambda_fraction: o.lambda_fraction.unwrap_or(0.5),
            table: o.table.map(|p| p.display().to_string()),
        };
        cfg.validate(command)?;
        Ok(cfg)
    }

    fn validate(&self, command: Command) -> Result<(), ConfigError> {
        let n = self.dimension()?;
        if !(self.beta >= 0.0 && self.beta < n.as_f64()) {
            return bad(format!("beta = {} must lie in [0, n) with n = {}", self.beta, self.n));
        }
        let v = self.potential()?;
        v.check_admissible(&hmtlab::make_constants(self.n).map_err(|e| ConfigError(e.to_string()))?)
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.grid_points < 16 {
            return bad("grid_points must be at least 16");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad(format!("epsilon = {} must lie in (0, 1/2)", self.epsilon));
        }
        if !(self.first_node > 0.0 && self.first_node < 0.5) {
            return bad(format!("first_node = {} must lie in (0, 1/2)", self.first_node));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol must be positive");
        }
        if self.max_iter == 0 || self.corpus_size == 0 || self.k_max == 0 {
            return bad("max_iter, corpus_size and k_max must be positive");
        }
        if self.t_points < 16 {
            return bad("t_points must be at least 16");
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad("scale must be positive");
        }
        if !(0.0..=0.9).contains(&self.lambda_fraction) {
            return bad("lambda_fraction must lie in [0, 0.9]");
        }
        let modes = command.modes();
        match &self.mode {
            Some(m) if !modes.contains(&m.as_str()) => {
                if modes.is_empty() {
                    bad(format!("{} takes no --mode", command.name()))
                } else {
                    bad(format!("unknown mode '{m}' for {} (expected one of {})", command.name(), modes.join(", ")))
                }
            }
            _ => Ok(()),
        }
    }

    pub fn dimension(&self) -> Result<Dimension, ConfigError> {
        Dimension::new(self.n).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn potential(&self) -> Result<Potential, ConfigError> {
        self.potential.parse().map_err(|e: hmtlab::Error| ConfigError(e.to_string()))
    }

    pub fn grading(&self) -> Grading {
        Grading { first_node: self.first_node }
    }

    pub fn mode(&self) -> &str {
        self.mode.as_deref().unwrap_or("")
    }
}
