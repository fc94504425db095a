use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(String),

    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("basis dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: u128, cap: usize },

    #[error("basis: {0}")]
    Basis(String),

    #[error("operator: {0}")]
    Operator(String),

    #[error("solver did not converge after {iterations} matrix applications (best residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("inadmissible constants: {0}")]
    Inadmissible(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("config parse: {0}")]
    ConfigParse(String),

    #[error("record: {0}")]
    Record(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
