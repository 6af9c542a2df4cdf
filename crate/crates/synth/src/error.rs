pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] seminpaint_core::Error),
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
    #[error("taxonomy {1:?} has no class named {0:?}")]
    MissingClass(String, String),
    #[error("cannot create {path}: {source}")]
    CreateDir {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}
