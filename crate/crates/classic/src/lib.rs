//! Baseline inpainting engines working directly on categorical label maps.
//!
//! * [`inpaint_nn`] copies the label of the closest unmasked static pixel.
//! * [`inpaint_navier_stokes`] diffuses each static one-hot channel into the
//!   hole with an isophote-transport phase, then takes the argmax.
//! * [`inpaint_patchmatch`] matches patches with a randomized nearest-neighbor
//!   field under Hamming distance and fills the hole by patch voting.
//!
//! Every engine leaves unmasked pixels untouched and writes only static
//! classes inside the mask.

mod diffusion;
mod error;
mod nn;
mod patchmatch;

pub use diffusion::{inpaint_navier_stokes, inpaint_navier_stokes_report, DiffusionParams, DiffusionReport};
pub use error::{Error, Result};
pub use nn::inpaint_nn;
pub use patchmatch::{inpaint_patchmatch, nnf_iterate, patch_distance, NnfField, PatchParams, Point};

use seminpaint_core::{InpaintMask, LabelMap};

fn check_inputs(m: &LabelMap, mask: &InpaintMask) -> Result<()> {
    mask.ensure_dims(m.dims())?;
    Ok(())
}
