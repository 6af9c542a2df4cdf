use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] seminpaint_core::Error),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("target label {label} at ({x}, {y}) is not a static class")]
    DynamicTarget { label: u8, x: usize, y: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("dataset {0} contains no samples")]
    EmptyDataset(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: not a checkpoint ({reason})")]
    BadCheckpoint { path: PathBuf, reason: String },
    #[error("checkpoint was trained for taxonomy {found:?} ({found_classes} classes), not {expected:?} ({expected_classes} classes)")]
    TaxonomyMismatch {
        expected: String,
        expected_classes: usize,
        found: String,
        found_classes: usize,
    },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
    Error::Io {
        path: path.into(),
        source,
    }
}
