use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension n = {0}: need n >= 2")]
    InvalidDimension(u32),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("Green function solver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("potential is not admissible: {0}")]
    Instability(String),
    #[error("pole constant extraction is unstable: {0}")]
    ExtractionUnstable(String),
    #[error("corrupt Green table: {0}")]
    CorruptTable(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate profile: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
