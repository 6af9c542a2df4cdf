//! Scoring of inpainted label maps.
//!
//! The headline number is the fraction of correctly reconstructed pixels
//! inside each mask, averaged over images. Pixel-pooled accuracy, per-class
//! accuracy and row-normalized confusion matrices are reported alongside.

mod dataset;
mod error;
mod metrics;
mod report;

pub use dataset::{evaluate_dataset, validate_method, EvalResult, Evaluator, ImageScore};
pub use error::{Error, Result, SampleFailure};
pub use metrics::{confusion_matrix, masked_accuracy, mean, ConfusionMatrix};
pub use report::{
    accuracy_header, combine_accuracy_csvs, heatmap_rgb, render_report, write_accuracy_csv, write_confusion_csv,
    ACCURACY_CSV, HEATMAP_CELL,
};
