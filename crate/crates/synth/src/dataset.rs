use std::path::Path;

use rand::Rng;
use seminpaint_core::io::{write_label_png, write_mask_png};
use seminpaint_core::seed::{derive_seed, rng_from_seed};
use seminpaint_core::{write_manifest, ClassTaxonomy, ManifestRecord, PairedSample};

use crate::drift::{align_correct, apply_drift};
use crate::error::{Error, Result};
use crate::scene::{render_pair, SceneClasses, SceneSpec};

/// Dataset generation settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub count: usize,
    pub seed: u64,
    /// A sample is kept only if its dynamic pixel count exceeds this fraction
    /// of the frame area. 0.0104 matches 5000 pixels of an 800x600 frame.
    pub threshold_fraction: f64,
    pub drift_probability: f64,
    pub drift_max: u32,
    pub taxonomy: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 400,
            height: 300,
            count: 100,
            seed: 0,
            threshold_fraction: 0.0104,
            drift_probability: 0.5,
            drift_max: 2,
            taxonomy: "carla9".into(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.threshold_fraction) {
            return Err(Error::InvalidConfig(format!(
                "threshold fraction {} is not in [0, 1)",
                self.threshold_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.drift_probability) {
            return Err(Error::InvalidConfig(format!(
                "drift probability {} is not in [0, 1]",
                self.drift_probability
            )));
        }
        Ok(())
    }

    /// Minimum dynamic pixel count, exclusive.
    pub fn threshold_pixels(&self) -> f64 {
        self.threshold_fraction * (self.width * self.height) as f64
    }

    pub fn passes_threshold(&self, dyn_pixels: usize) -> bool {
        dyn_pixels as f64 > self.threshold_pixels()
    }

    /// Generates, drifts and corrects every sample in index order.
    pub fn samples(&self) -> Result<impl Iterator<Item = Result<Synthesized>> + '_> {
        self.validate()?;
        let tax = ClassTaxonomy::resolve(&self.taxonomy)?;
        let classes = SceneClasses::from_taxonomy(&tax)?;
        Ok((0..self.count).map(move |index| self.synthesize(index, &tax, &classes)))
    }

    fn synthesize(&self, index: usize, tax: &ClassTaxonomy, classes: &SceneClasses) -> Result<Synthesized> {
        let seed = derive_seed(self.seed, index as u64);
        let spec = SceneSpec::sample(seed, self.width, self.height);
        let mut sample = render_pair(&spec, classes, tax)?;
        sample.id = format!("{index:06}");
        let mut rng = rng_from_seed(derive_seed(seed, 0xD21F7));
        if self.drift_max > 0 && rng.gen_bool(self.drift_probability) {
            sample = apply_drift(&sample, rng.gen(), self.drift_max);
        }
        let sample = align_correct(&sample, tax);
        let dyn_pixels = sample.mask.count();
        Ok(Synthesized {
            kept: self.passes_threshold(dyn_pixels),
            sample,
            seed,
            dyn_pixels,
        })
    }
}

/// One generated sample and its filter verdict.
#[derive(Clone, Debug)]
pub struct Synthesized {
    pub sample: PairedSample,
    pub seed: u64,
    pub dyn_pixels: usize,
    pub kept: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatasetSummary {
    pub generated: usize,
    pub kept: usize,
    pub rejected: usize,
}

/// Writes `dynamic/`, `static/` and `mask/` PNGs plus `manifest.jsonl`
/// (sorted by sample id) under `out_dir`. A run that keeps nothing still
/// writes an empty manifest; callers should check [`DatasetSummary::kept`].
pub fn build_dataset(cfg: &SynthConfig, out_dir: impl AsRef<Path>) -> Result<DatasetSummary> {
    let out_dir = out_dir.as_ref();
    let tax = ClassTaxonomy::resolve(&cfg.taxonomy)?;
    for sub in ["dynamic", "static", "mask"] {
        let dir = out_dir.join(sub);
        std::fs::create_dir_all(&dir).map_err(|source| Error::CreateDir { path: dir, source })?;
    }
    let mut summary = DatasetSummary {
        generated: 0,
        kept: 0,
        rejected: 0,
    };
    let mut records = Vec::new();
    for item in cfg.samples()? {
        let item = item?;
        summary.generated += 1;
        if !item.kept {
            summary.rejected += 1;
            continue;
        }
        summary.kept += 1;
        let id = &item.sample.id;
        let record = ManifestRecord {
            id: id.clone(),
            dynamic_png: format!("dynamic/{id}.png"),
            static_png: format!("static/{id}.png"),
            mask_png: format!("mask/{id}.png"),
            dyn_pixels: item.dyn_pixels as u64,
            seed: item.seed,
        };
        write_label_png(
            out_dir.join(&record.dynamic_png),
            &item.sample.dynamic_frame,
            Some(&tax),
        )?;
        write_label_png(out_dir.join(&record.static_png), &item.sample.static_frame, Some(&tax))?;
        write_mask_png(out_dir.join(&record.mask_png), &item.sample.mask)?;
        records.push(record);
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    write_manifest(out_dir.join("manifest.jsonl"), &records)?;
    Ok(summary)
}
