use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column `{column}`: {message}")]
    Parse { line: usize, column: String, message: String },
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("treatment column has non-binary value `{value}` at line {line}")]
    NonBinaryTreatment { line: usize, value: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("gamma {gamma}, seed {seed}: {source}")]
    Cell {
        gamma: f64,
        seed: u64,
        #[source]
        source: randadjust_core::Error,
    },
    #[error(transparent)]
    Core(#[from] randadjust_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }
}

pub type AppResult<T> = Result<T, AppError>;
