pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] seminpaint_core::Error),
    #[error("no unmasked static pixel is available as context")]
    NoStaticContext,
    #[error("invalid diffusion parameters: {0}")]
    InvalidDiffusion(String),
    #[error("invalid patch parameters: {0}")]
    InvalidPatch(String),
    #[error("image {image:?} cannot host a fully unmasked {patch_size}x{patch_size} patch")]
    NoSourcePatch { image: (usize, usize), patch_size: usize },
    #[error("patch centered at {center:?} leaves the {image:?} image")]
    PatchOutOfBounds {
        center: (usize, usize),
        image: (usize, usize),
    },
}
