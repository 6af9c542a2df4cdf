//! Per-image scoring of a method's predictions against a manifest.

use std::collections::BTreeMap;
use std::path::Path;

use seminpaint_core::io::read_label_png;
use seminpaint_core::{ClassId, ClassTaxonomy, InpaintMask, LabelMap, Manifest};

use crate::error::{Error, Result, SampleFailure};
use crate::metrics::{masked_accuracy, mean, ConfusionMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct ImageScore {
    pub id: String,
    pub accuracy: f64,
    pub masked_pixels: usize,
}

/// Scores of one method over a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub method: String,
    /// Static class names in channel order.
    pub class_names: Vec<String>,
    pub images: Vec<ImageScore>,
    /// Mean of the per-image accuracies.
    pub mean: f64,
    pub confusion: ConfusionMatrix,
    /// Ids of samples skipped because their mask is empty.
    pub excluded: Vec<String>,
    pub failures: Vec<SampleFailure>,
}

impl EvalResult {
    pub fn samples(&self) -> usize {
        self.images.len()
    }

    /// Accuracy over all masked pixels of the dataset at once.
    pub fn pooled(&self) -> f64 {
        self.confusion.pooled_accuracy().unwrap_or(0.0)
    }

    /// Accuracy per static class present in the ground truth.
    pub fn per_class(&self) -> BTreeMap<ClassId, f64> {
        self.confusion
            .static_ids()
            .iter()
            .zip(self.confusion.class_accuracy())
            .filter_map(|(&id, a)| a.map(|a| (id, a)))
            .collect()
    }

    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Method names end up in file names.
pub fn validate_method(method: &str) -> Result<()> {
    let ok = !method.is_empty()
        && !method.starts_with('.')
        && method
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidMethod(method.to_string()))
    }
}

/// Accumulates scores image by image; a sample that fails is recorded and
/// leaves the totals untouched.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    tax: &'a ClassTaxonomy,
    method: String,
    images: Vec<ImageScore>,
    confusion: ConfusionMatrix,
    excluded: Vec<String>,
    failures: Vec<SampleFailure>,
}

impl<'a> Evaluator<'a> {
    pub fn new(method: &str, tax: &'a ClassTaxonomy) -> Result<Self> {
        validate_method(method)?;
        Ok(Self {
            tax,
            method: method.to_string(),
            images: Vec::new(),
            confusion: ConfusionMatrix::new(tax),
            excluded: Vec::new(),
            failures: Vec::new(),
        })
    }

    /// Scores one image and returns its masked accuracy, or `None` if the
    /// sample was excluded or failed.
    pub fn score(&mut self, id: &str, pred: &LabelMap, truth: &LabelMap, mask: &InpaintMask) -> Option<f64> {
        if mask.ensure_dims(truth.dims()).is_ok() && mask.is_all_clear() {
            self.exclude(id);
            return None;
        }
        let mut one = ConfusionMatrix::new(self.tax);
        let scored = one
            .add(pred, truth, mask, self.tax)
            .and_then(|()| masked_accuracy(pred, truth, mask));
        match scored {
            Ok(accuracy) => {
                self.confusion.merge(&one).expect("same taxonomy");
                self.images.push(ImageScore {
                    id: id.to_string(),
                    accuracy,
                    masked_pixels: mask.count(),
                });
                Some(accuracy)
            }
            Err(e) => {
                self.fail(id, e.to_string());
                None
            }
        }
    }

    /// Records a sample with an empty mask.
    pub fn exclude(&mut self, id: &str) {
        self.excluded.push(id.to_string());
    }

    pub fn fail(&mut self, id: &str, reason: impl Into<String>) {
        self.failures.push(SampleFailure {
            id: id.to_string(),
            reason: reason.into(),
        });
    }

    pub fn finish(self) -> Result<EvalResult> {
        let accs: Vec<f64> = self.images.iter().map(|s| s.accuracy).collect();
        let Some(mean) = mean(&accs) else {
            return Err(Error::NothingScored {
                failures: self.failures,
                excluded: self.excluded.len(),
            });
        };
        Ok(EvalResult {
            method: self.method,
            class_names: self
                .tax
                .static_ids()
                .iter()
                .map(|&id| self.tax.class(id).expect("static id").name.clone())
                .collect(),
            images: self.images,
            mean,
            confusion: self.confusion,
            excluded: self.excluded,
            failures: self.failures,
        })
    }
}

/// Scores `pred_dir/<id>.png` against the static frame of every manifest
/// sample with a non-empty mask. Missing or malformed predictions are listed in
/// [`EvalResult::failures`] and the remaining samples are still scored.
pub fn evaluate_dataset(
    manifest: impl AsRef<Path>,
    pred_dir: impl AsRef<Path>,
    method: &str,
    tax: &ClassTaxonomy,
) -> Result<EvalResult> {
    let manifest = Manifest::read(manifest)?;
    let pred_dir = pred_dir.as_ref();
    let mut ev = Evaluator::new(method, tax)?;
    for record in &manifest.records {
        let sample = match manifest.load_sample(record) {
            Ok(s) => s,
            Err(e) => {
                ev.fail(&record.id, format!("ground truth: {e}"));
                continue;
            }
        };
        if sample.mask.is_all_clear() {
            ev.exclude(&record.id);
            continue;
        }
        match read_label_png(pred_dir.join(format!("{}.png", record.id))) {
            Ok(pred) => {
                ev.score(&record.id, &pred, &sample.static_frame, &sample.mask);
            }
            Err(e) => ev.fail(&record.id, format!("prediction: {e}")),
        }
    }
    ev.finish()
}
