use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("entity `{0}` has no valid rows")]
    EmptySeries(String),

    #[error("no usable data: {0}")]
    NoUsableData(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("divergence is infinite: q(k) = 0 < p(k) at degree {degree}")]
    DivergenceInfinite { degree: usize },

    #[error("invalid generator spec: {0}")]
    Spec(String),

    #[error("power-law fit failed: {0}")]
    Fit(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix error: {0}")]
    Matrix(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
