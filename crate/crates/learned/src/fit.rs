//! Training loop over a manifest of paired samples.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use seminpaint_core::seed::{derive_seed, rng_from_seed};
use seminpaint_core::{ClassTaxonomy, LabelMap, Manifest, PairedSample};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{loss_csv_path, sidecar_path, Checkpoint};
use crate::error::{io, Error, Result};
use crate::train::{LossReport, TrainConfig, Trainer};

const SHUFFLE_STREAM: u64 = 0x5348_5546;
const CROP_STREAM: u64 = 0x4352_4F50;
pub const LOSS_CSV_HEADER: &str = "step,ce,adv_g,adv_d,batch_acc";

/// Sidecar written next to every checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSidecar {
    pub taxonomy: String,
    pub config: TrainConfig,
}

/// Draws the batch for `step`: samples are visited in a fresh seeded
/// permutation each epoch, and each visit gets its own crop and rectangle.
pub struct BatchSource<'a> {
    frames: &'a [LabelMap],
    cfg: &'a TrainConfig,
    epoch: Option<(usize, Vec<usize>)>,
}

impl<'a> BatchSource<'a> {
    pub fn new(frames: &'a [LabelMap], cfg: &'a TrainConfig) -> Self {
        Self {
            frames,
            cfg,
            epoch: None,
        }
    }

    fn index(&mut self, visit: usize) -> usize {
        let n = self.frames.len();
        let epoch = visit / n;
        if self.epoch.as_ref().map(|e| e.0) != Some(epoch) {
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = rng_from_seed(derive_seed(
                derive_seed(self.cfg.rng_seed, SHUFFLE_STREAM),
                epoch as u64,
            ));
            order.shuffle(&mut rng);
            self.epoch = Some((epoch, order));
        }
        self.epoch.as_ref().expect("epoch order").1[visit % n]
    }

    pub fn batch(&mut self, step: usize) -> Result<Vec<PairedSample>> {
        let sampler = self.cfg.crop_sampler();
        let b = self.cfg.batch_size;
        (step * b..(step + 1) * b)
            .map(|visit| {
                let idx = self.index(visit);
                let seed = derive_seed(derive_seed(self.cfg.rng_seed, CROP_STREAM), visit as u64);
                let (crop, mask) = sampler.sample(&self.frames[idx], seed)?;
                Ok(PairedSample::new(format!("{idx}@{visit}"), crop.clone(), crop, mask)?)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub trainer: Trainer<f32>,
    /// Loss reports for every step from 0, including resumed history.
    pub reports: Vec<LossReport>,
}

/// Trains on the static frames of a manifest.
///
/// Writes the checkpoint, a `.json` sidecar with the configuration and a
/// `.loss.csv` curve next to `checkpoint`. With `resume`, training continues
/// from an existing checkpoint up to `cfg.steps` total steps and the result
/// is identical to an uninterrupted run.
pub fn fit(
    manifest: impl AsRef<Path>,
    tax: &ClassTaxonomy,
    cfg: &TrainConfig,
    checkpoint: impl AsRef<Path>,
    resume: bool,
) -> Result<FitOutcome> {
    let manifest_path = manifest.as_ref();
    let manifest = Manifest::read(manifest_path)?;
    if manifest.records.is_empty() {
        return Err(Error::EmptyDataset(manifest_path.to_path_buf()));
    }
    let frames = manifest
        .records
        .iter()
        .map(|r| Ok(manifest.load_sample(r)?.static_frame))
        .collect::<Result<Vec<_>>>()?;
    fit_frames(&frames, tax, cfg, checkpoint, resume)
}

/// [`fit`] on in-memory static frames.
pub fn fit_frames(
    frames: &[LabelMap],
    tax: &ClassTaxonomy,
    cfg: &TrainConfig,
    checkpoint: impl AsRef<Path>,
    resume: bool,
) -> Result<FitOutcome> {
    cfg.validate()?;
    let checkpoint = checkpoint.as_ref();
    if frames.is_empty() {
        return Err(Error::EmptyDataset(checkpoint.to_path_buf()));
    }
    let (mut trainer, mut reports) = if resume && checkpoint.exists() {
        let ck = Checkpoint::load(checkpoint)?;
        ck.ensure_taxonomy(tax)?;
        let done = ck.trainer.step;
        let history = read_loss_csv(&loss_csv_path(checkpoint))?
            .into_iter()
            .filter(|r| r.step < done)
            .collect();
        log::info!("resuming from step {done}");
        (ck.trainer, history)
    } else {
        (Trainer::new(tax, cfg)?, Vec::new())
    };
    let mut source = BatchSource::new(frames, cfg);
    while trainer.step < cfg.steps {
        let batch = source.batch(trainer.step)?;
        let report = trainer.train_step(&batch, tax, cfg)?;
        if report.step % 50 == 0 || report.step + 1 == cfg.steps {
            log::info!(
                "step {} ce {:.4} adv_g {:.4} adv_d {:.4} acc {:.3}",
                report.step,
                report.ce,
                report.adv_g,
                report.adv_d,
                report.batch_acc
            );
        }
        reports.push(report);
    }
    let ck = Checkpoint::new(tax, trainer);
    ck.save(checkpoint)?;
    let sidecar = TrainSidecar {
        taxonomy: tax.name().to_string(),
        config: cfg.clone(),
    };
    let side = sidecar_path(checkpoint);
    let json = serde_json::to_string_pretty(&sidecar).expect("config serializes");
    std::fs::write(&side, json + "\n").map_err(|e| io(&side, e))?;
    write_loss_csv(&loss_csv_path(checkpoint), &reports)?;
    Ok(FitOutcome {
        trainer: ck.trainer,
        reports,
    })
}

pub fn write_loss_csv(path: &Path, reports: &[LossReport]) -> Result<()> {
    let mut out = String::from(LOSS_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.step, r.ce, r.adv_g, r.adv_d, r.batch_acc
        ));
    }
    let mut f = std::fs::File::create(path).map_err(|e| io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| io(path, e))
}

/// Reads a loss curve; a missing file is an empty curve.
pub fn read_loss_csv(path: &Path) -> Result<Vec<LossReport>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io(path, e)),
    };
    let bad = |line: usize| {
        io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("malformed loss row {line}")),
        )
    };
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(i + 1));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1));
            Ok(LossReport {
                step: f[0].parse().map_err(|_| bad(i + 1))?,
                ce: num(f[1])?,
                adv_g: num(f[2])?,
                adv_d: num(f[3])?,
                batch_acc: num(f[4])?,
            })
        })
        .collect()
}

/// Centered moving average with the window clipped at the ends.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}
