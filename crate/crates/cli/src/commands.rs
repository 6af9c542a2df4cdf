use std::path::Path;

use anyhow::{bail, Context, Result};
use seminpaint_classic::{inpaint_navier_stokes, inpaint_nn, inpaint_patchmatch, DiffusionParams, PatchParams};
use seminpaint_core::io::{read_label_png, read_mask_png, write_label_png};
use seminpaint_core::{extract_dynamic_mask, remap_labels, ClassTaxonomy, InpaintMask, LabelMap, Manifest};
use seminpaint_eval::{combine_accuracy_csvs, evaluate_dataset, render_report};
use seminpaint_learned::{fit, infer_inpaint, Checkpoint, TrainConfig};
use seminpaint_synth::{build_dataset, SynthConfig};

use crate::args::{Command, EvalArgs, InpaintArgs, Method, ReportArgs, SynthArgs, TaxonomyArgs, TrainArgs};

/// How a successful command ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// Some evaluation samples could not be scored.
    Partial,
}

pub fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Inpaint(a) => inpaint(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report(a),
        Command::Taxonomy(a) => taxonomy(a),
    }
    .map(|()| Outcome::Done)
    .or_else(|e| match e.downcast::<PartialEval>() {
        Ok(_) => Ok(Outcome::Partial),
        Err(e) => Err(e),
    })
}

#[derive(Debug, thiserror::Error)]
#[error("evaluation finished with failed samples")]
struct PartialEval;

fn taxonomy_named(name: &str) -> Result<ClassTaxonomy> {
    ClassTaxonomy::resolve(name).with_context(|| format!("loading taxonomy {name:?}"))
}

fn synth(a: SynthArgs) -> Result<()> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        width: a.width.unwrap_or(d.width),
        height: a.height.unwrap_or(d.height),
        count: a.count.unwrap_or(d.count),
        seed: a.seed,
        threshold_fraction: a.threshold.unwrap_or(d.threshold_fraction),
        drift_probability: a.drift_prob.unwrap_or(d.drift_probability),
        drift_max: a.drift_max.unwrap_or(d.drift_max),
        taxonomy: a.taxonomy,
    };
    let s = build_dataset(&cfg, &a.out).with_context(|| format!("writing dataset to {}", a.out.display()))?;
    log::info!(
        "kept {} of {} samples ({} below the dynamic-pixel threshold)",
        s.kept,
        s.generated,
        s.rejected
    );
    if s.kept == 0 {
        log::warn!("no sample passed the threshold; the manifest is empty");
    }
    Ok(())
}

enum Engine {
    Nn,
    Ns(DiffusionParams),
    Pm(PatchParams),
    Learned(Box<Checkpoint>),
}

impl Engine {
    fn from_args(a: &InpaintArgs, tax: &ClassTaxonomy) -> Result<Self> {
        Ok(match a.method {
            Method::Nn => Engine::Nn,
            Method::Ns => {
                let d = DiffusionParams::default();
                let p = DiffusionParams {
                    dt: a.dt.unwrap_or(d.dt),
                    max_iters: a.iters.unwrap_or(d.max_iters),
                    residual_tol: a.tol.unwrap_or(d.residual_tol),
                    transport_weight: a.transport.unwrap_or(d.transport_weight),
                };
                p.validate()?;
                Engine::Ns(p)
            }
            Method::Pm => {
                let d = PatchParams::default();
                let p = PatchParams {
                    patch_size: a.patch_size.unwrap_or(d.patch_size),
                    nnf_iters: a.nnf_iters.unwrap_or(d.nnf_iters),
                    search_alpha: a.alpha.unwrap_or(d.search_alpha),
                    search_radius_start: d.search_radius_start,
                    vote_iters: a.vote_iters.unwrap_or(d.vote_iters),
                    rng_seed: a.seed,
                };
                p.validate()?;
                Engine::Pm(p)
            }
            Method::Learned => {
                let path = a.ckpt.as_deref().context("--ckpt is required for the learned engine")?;
                let ck = Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
                ck.ensure_taxonomy(tax)?;
                Engine::Learned(Box::new(ck))
            }
        })
    }

    fn fill(&self, m: &LabelMap, mask: &InpaintMask, tax: &ClassTaxonomy) -> Result<LabelMap> {
        Ok(match self {
            Engine::Nn => inpaint_nn(m, mask, tax)?,
            Engine::Ns(p) => inpaint_navier_stokes(m, mask, tax, p)?,
            Engine::Pm(p) => inpaint_patchmatch(m, mask, tax, p)?,
            Engine::Learned(ck) => infer_inpaint(ck.generator(), m, mask, tax)?,
        })
    }
}

fn load_map(path: &Path, tax: &ClassTaxonomy, remap: bool) -> Result<LabelMap> {
    let raw = read_label_png(path)?;
    let m = if remap { remap_labels(&raw, tax) } else { raw };
    m.validate(tax)
        .with_context(|| format!("{} does not fit taxonomy {} (try --remap)", path.display(), tax.name()))?;
    Ok(m)
}

fn inpaint(a: InpaintArgs) -> Result<()> {
    let tax = taxonomy_named(&a.taxonomy)?;
    let engine = Engine::from_args(&a, &tax)?;
    if let Some(manifest_path) = &a.manifest {
        let manifest = Manifest::read(manifest_path)?;
        std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
        for record in &manifest.records {
            let sample = manifest.load_sample(record)?;
            let m = if a.remap {
                remap_labels(&sample.dynamic_frame, &tax)
            } else {
                sample.dynamic_frame
            };
            m.validate(&tax).with_context(|| format!("sample {}", record.id))?;
            let out = engine
                .fill(&m, &sample.mask, &tax)
                .with_context(|| format!("inpainting sample {}", record.id))?;
            write_label_png(a.out.join(format!("{}.png", record.id)), &out, Some(&tax))?;
        }
        log::info!("filled {} samples into {}", manifest.records.len(), a.out.display());
        return Ok(());
    }
    let input = a.input.as_deref().context("--in is required without --manifest")?;
    let m = load_map(input, &tax, a.remap)?;
    let mask = match &a.mask {
        Some(p) => read_mask_png(p)?,
        None => extract_dynamic_mask(&m, &tax, a.dilation),
    };
    let out = engine.fill(&m, &mask, &tax)?;
    write_label_png(&a.out, &out, Some(&tax))?;
    log::info!("filled {} pixels into {}", mask.count(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let tax = taxonomy_named(&a.taxonomy)?;
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        steps: a.steps.unwrap_or(d.steps),
        batch_size: a.batch.unwrap_or(d.batch_size),
        learning_rate: a.lr.unwrap_or(d.learning_rate),
        beta1: a.beta1.unwrap_or(d.beta1),
        beta2: a.beta2.unwrap_or(d.beta2),
        gamma: a.gamma.unwrap_or(d.gamma),
        adv_weight: a.adv_weight.unwrap_or(d.adv_weight),
        rng_seed: a.seed,
        generator_width: a.width.unwrap_or(d.generator_width),
        discriminator_width: a.disc_width.unwrap_or(d.discriminator_width),
        crop_width: a.crop_width.unwrap_or(d.crop_width),
        crop_height: a.crop_height.unwrap_or(d.crop_height),
        rect_min: a.rect_min.unwrap_or(d.rect_min),
        rect_max: a.rect_max.unwrap_or(d.rect_max),
    };
    let out = fit(&a.manifest, &tax, &cfg, &a.out, a.resume)?;
    if let (Some(first), Some(last)) = (out.reports.first(), out.reports.last()) {
        log::info!(
            "trained {} steps: ce {:.4} -> {:.4}, batch accuracy {:.3}",
            out.reports.len(),
            first.ce,
            last.ce,
            last.batch_acc
        );
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let tax = taxonomy_named(&a.taxonomy)?;
    let result = match evaluate_dataset(&a.manifest, &a.pred_dir, &a.method, &tax) {
        Ok(r) => r,
        Err(seminpaint_eval::Error::NothingScored { failures, excluded }) => {
            for f in &failures {
                log::error!("sample {f}");
            }
            bail!(
                "no sample could be scored ({} failed, {excluded} had empty masks)",
                failures.len()
            );
        }
        Err(e) => return Err(e.into()),
    };
    for f in &result.failures {
        log::error!("sample {f}");
    }
    log::info!(
        "{}: mean masked accuracy {:.4} over {} images (pooled {:.4}, {} excluded, {} failed)",
        result.method,
        result.mean,
        result.samples(),
        result.pooled(),
        result.excluded.len(),
        result.failures.len()
    );
    render_report(std::slice::from_ref(&result), &tax, &a.out)?;
    if result.is_partial() {
        return Err(PartialEval.into());
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let rows = combine_accuracy_csvs(&a.results, &a.out)?;
    log::info!("wrote {rows} rows to {}", a.out.display());
    Ok(())
}

fn taxonomy(a: TaxonomyArgs) -> Result<()> {
    let Some(name) = a.name else {
        for name in ClassTaxonomy::builtin_names() {
            let t = ClassTaxonomy::builtin(name).expect("built-in");
            println!("{name}\t{} classes ({} static)", t.num_classes(), t.num_static());
        }
        return Ok(());
    };
    let tax = taxonomy_named(&name)?;
    if let Some(out) = a.out {
        std::fs::write(&out, tax.to_json()).with_context(|| format!("writing {}", out.display()))?;
        return Ok(());
    }
    for c in tax.classes() {
        let kind = if tax.is_static(c.id) { "static" } else { "dynamic" };
        let [r, g, b] = c.color;
        println!("{}\t{}\t{kind}\t#{r:02x}{g:02x}{b:02x}", c.id, c.name);
    }
    Ok(())
}
