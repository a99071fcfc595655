use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("degenerate configuration: {0}")]
    Degeneracy(String),
    #[error("flags are not transverse (margin {0:e})")]
    NotTransverse(f64),
    #[error("element is not loxodromic")]
    NotLoxodromic,
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("preset integrity: {0}")]
    PresetIntegrity(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("condition violated: {0}")]
    Condition(String),
    #[error("precision loss: {0}")]
    Precision(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
