//! Paired label-map dataset synthesis.
//!
//! Each sample is one procedurally rendered street seen twice: once with cars
//! and pedestrians and once without. Acquisition drift between the two
//! renderings is simulated on demand and then corrected, and frames with too
//! few dynamic pixels are filtered out before the dataset is written.

mod dataset;
mod drift;
mod error;
pub mod scene;

pub use dataset::{build_dataset, DatasetSummary, SynthConfig, Synthesized};
pub use drift::{align_correct, apply_drift};
pub use error::{Error, Result};
pub use scene::{generate_scene_pair, render_pair, SceneClasses, SceneSpec};
