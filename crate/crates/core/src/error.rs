use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("png decode error on {path}: {source}")]
    PngDecode {
        path: PathBuf,
        #[source]
        source: png::DecodingError,
    },
    #[error("png encode error on {path}: {source}")]
    PngEncode {
        path: PathBuf,
        #[source]
        source: png::EncodingError,
    },
    #[error("unsupported png layout in {path}: {detail}")]
    PngLayout { path: PathBuf, detail: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid taxonomy: {0}")]
    Taxonomy(String),
    #[error("unknown taxonomy {0:?}")]
    UnknownTaxonomy(String),
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("buffer of length {len} does not match {width}x{height}")]
    BufferSize { width: usize, height: usize, len: usize },
    #[error("empty image ({width}x{height})")]
    EmptyImage { width: usize, height: usize },
    #[error("label {label} at ({x}, {y}) is outside the channel set of size {channels}")]
    LabelOutOfRange {
        label: u8,
        x: usize,
        y: usize,
        channels: usize,
    },
    #[error("image {image:?} is smaller than the requested crop {crop:?}")]
    CropTooLarge {
        image: (usize, usize),
        crop: (usize, usize),
    },
    #[error("invalid crop sampler: {0}")]
    CropSampler(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
