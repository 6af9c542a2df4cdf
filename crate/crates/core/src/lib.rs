//! Categorical image model shared by every inpainting engine.
//!
//! A [`LabelMap`] is a grid of class ids drawn from a [`ClassTaxonomy`], which
//! splits its classes into a static set (road, building, ...) and a dynamic set
//! (cars, people). Engines reconstruct the pixels marked by an [`InpaintMask`]
//! using static classes only.

mod error;
pub mod io;
pub mod labelmap;
pub mod manifest;
pub mod onehot;
pub mod ops;
pub mod seed;
pub mod taxonomy;

pub use error::{Error, Result};
pub use labelmap::{ClassId, InpaintMask, LabelMap, PairedSample};
pub use manifest::{write_manifest, Manifest, ManifestRecord};
pub use onehot::{decode_argmax, encode_one_hot, ChannelSpace, ChannelTensor};
pub use ops::{compose_inpainted, extract_dynamic_mask, sample_training_crop, CropSampler};
pub use taxonomy::{load_taxonomy, remap_labels, ClassInfo, ClassKind, ClassTaxonomy};
