use std::path::PathBuf;

use seminpaint_core::ClassId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] seminpaint_core::Error),
    #[error("the mask selects no pixel")]
    EmptyMask,
    #[error("{which} label {label} at pixel {pixel} is not a static class")]
    NonStaticLabel {
        which: &'static str,
        label: ClassId,
        pixel: usize,
    },
    #[error("confusion matrices over different taxonomies cannot be merged")]
    TaxonomyMismatch,
    #[error("method name {0:?} must be non-empty and use only ASCII letters, digits, '-', '_' or '.'")]
    InvalidMethod(String),
    #[error("no sample could be scored ({} failed, {excluded} had empty masks)", failures.len())]
    NothingScored {
        failures: Vec<SampleFailure>,
        excluded: usize,
    },
    #[error("nothing to report")]
    NoResults,
    #[error("{path}: column layout {found:?} differs from {expected:?}")]
    HeaderMismatch {
        path: PathBuf,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A sample that could not be scored; evaluation carries on without it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleFailure {
    pub id: String,
    pub reason: String,
}

impl std::fmt::Display for SampleFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.id, self.reason)
    }
}

pub(crate) fn csv_err(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> Error {
    let path = path.into();
    move |source| Error::Csv { path, source }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
