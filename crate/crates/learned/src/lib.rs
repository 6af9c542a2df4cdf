//! A compact trainable inpainter for categorical label maps.
//!
//! The generator sees the one-hot input with the hole zeroed plus the mask
//! as an extra plane, and predicts a distribution over the static classes at
//! every pixel. Training minimizes a spatially discounted cross-entropy,
//! optionally joined by a non-saturating adversarial term from a small
//! discriminator. Everything runs on the CPU and is bit-deterministic for a
//! fixed seed.

mod adam;
pub mod checkpoint;
mod conv;
mod error;
mod fit;
pub mod gradcheck;
mod infer;
mod loss;
mod net;
mod real;
mod train;

pub use adam::{Adam, ADAM_EPSILON};
pub use checkpoint::{loss_csv_path, sidecar_path, Checkpoint};
pub use conv::ConvSpec;
pub use error::{Error, Result};
pub use fit::{fit, fit_frames, read_loss_csv, smooth, write_loss_csv, BatchSource, FitOutcome, TrainSidecar};
pub use infer::{infer_inpaint, infer_logits, TILE, TILE_STRIDE};
pub use loss::{discount_weight_map, masked_ce_loss, sigmoid, softmax, softplus};
pub use net::{
    discriminator_forward, generator_forward, generator_input, DiscriminatorParams, GeneratorParams,
    DEFAULT_DISCRIMINATOR_WIDTH, DEFAULT_GENERATOR_WIDTH, LEAKY_SLOPE,
};
pub use real::Real;
pub use train::{generator_loss_and_grad, GeneratorLoss, LossReport, TrainConfig, Trainer};
