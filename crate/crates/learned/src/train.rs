//! One optimization step of the generator/discriminator pair.

use seminpaint_core::seed::derive_seed;
use seminpaint_core::{
    encode_one_hot, ChannelSpace, ChannelTensor, ClassTaxonomy, CropSampler, InpaintMask, PairedSample,
};
use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::error::{Error, Result};
use crate::loss::{ce_from_probs, discount_weight_map, sigmoid, softmax, softmax_backward, softplus, target_channels};
use crate::net::{
    generator_input, DiscriminatorParams, GeneratorParams, DEFAULT_DISCRIMINATOR_WIDTH, DEFAULT_GENERATOR_WIDTH,
};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Base of the spatial discount inside the mask.
    pub gamma: f64,
    /// Weight of the adversarial term; 0 trains the reconstruction loss only.
    pub adv_weight: f64,
    pub rng_seed: u64,
    pub generator_width: usize,
    pub discriminator_width: usize,
    pub crop_width: usize,
    pub crop_height: usize,
    pub rect_min: usize,
    pub rect_max: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let crop = CropSampler::default();
        Self {
            steps: 1000,
            batch_size: 8,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            gamma: 0.99,
            adv_weight: 0.01,
            rng_seed: 0,
            generator_width: DEFAULT_GENERATOR_WIDTH,
            discriminator_width: DEFAULT_DISCRIMINATOR_WIDTH,
            crop_width: crop.crop_width,
            crop_height: crop.crop_height,
            rect_min: crop.rect_min,
            rect_max: crop.rect_max,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} is not in (0, 1]", self.gamma));
        }
        if !(self.adv_weight >= 0.0 && self.adv_weight.is_finite()) {
            return bad(format!(
                "adversarial weight {} must be finite and >= 0",
                self.adv_weight
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("moment decays must lie in [0, 1)".into());
        }
        if self.batch_size == 0 || self.generator_width == 0 || self.discriminator_width == 0 {
            return bad("batch size and network widths must be at least 1".into());
        }
        self.crop_sampler().validate()?;
        Ok(())
    }

    pub fn crop_sampler(&self) -> CropSampler {
        CropSampler {
            crop_width: self.crop_width,
            crop_height: self.crop_height,
            rect_min: self.rect_min,
            rect_max: self.rect_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub step: usize,
    /// Discounted reconstruction cross-entropy, averaged over the batch.
    pub ce: f64,
    pub adv_g: f64,
    pub adv_d: f64,
    /// Fraction of masked pixels whose argmax matches the target.
    pub batch_acc: f64,
}

/// Batch-averaged generator objective and its parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorLoss {
    pub total: f64,
    pub ce: f64,
    pub adv: f64,
    pub masked_correct: usize,
    pub masked_pixels: usize,
}

/// One-hot target over the static classes, and the same volume with the
/// predicted distribution pasted inside the mask.
pub(crate) fn real_and_fake<T: Real>(
    probs: &ChannelTensor<T>,
    target: &[usize],
    mask: &InpaintMask,
) -> (Vec<T>, Vec<T>) {
    let (s_count, n) = (probs.channels(), target.len());
    let mut real = vec![T::ZERO; s_count * n];
    for (p, &t) in target.iter().enumerate() {
        real[t * n + p] = T::ONE;
    }
    let mut fake = real.clone();
    for (p, &m) in mask.data().iter().enumerate() {
        if m {
            for k in 0..s_count {
                fake[k * n + p] = probs.data()[k * n + p];
            }
        }
    }
    (real, fake)
}

struct BatchPass<T> {
    gen_loss: GeneratorLoss,
    gen_grads: Vec<T>,
    disc_loss: f64,
    disc_grads: Option<Vec<T>>,
}

fn batch_pass<T: Real>(
    gen: &GeneratorParams<T>,
    disc: &DiscriminatorParams<T>,
    batch: &[PairedSample],
    tax: &ClassTaxonomy,
    cfg: &TrainConfig,
    want_disc: bool,
) -> Result<BatchPass<T>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if gen.num_classes != tax.num_classes() || gen.num_static != tax.num_static() || disc.num_static != tax.num_static()
    {
        return Err(Error::Shape("network does not match the taxonomy".into()));
    }
    let adversarial = cfg.adv_weight > 0.0;
    let scale = T::from_f64(1.0 / batch.len() as f64);
    let mut gen_grads = vec![T::ZERO; gen.param_count()];
    let mut disc_grads = (want_disc && adversarial).then(|| vec![T::ZERO; disc.param_count()]);
    let mut scratch = vec![T::ZERO; if adversarial { disc.param_count() } else { 0 }];
    let mut loss = GeneratorLoss {
        total: 0.0,
        ce: 0.0,
        adv: 0.0,
        masked_correct: 0,
        masked_pixels: 0,
    };
    let mut disc_loss = 0.0;
    let s_count = tax.num_static();
    for sample in batch {
        let (w, h) = sample.mask.dims();
        let n = w * h;
        let onehot: ChannelTensor<T> = encode_one_hot(&sample.dynamic_frame, tax, ChannelSpace::Full)?;
        let x = generator_input(&onehot, &sample.mask)?;
        let (logits, trace) = gen.forward_trace(&x, h, w);
        let logits = ChannelTensor::from_vec(s_count, h, w, logits);
        let probs = softmax(&logits);
        let target = target_channels(&sample.static_frame, tax)?;
        let weights = discount_weight_map(&sample.mask, cfg.gamma);
        let (ce, mut dlogits) = ce_from_probs(&logits, &probs, &target, &weights);
        loss.ce += ce;
        for (p, &m) in sample.mask.data().iter().enumerate() {
            if !m {
                continue;
            }
            loss.masked_pixels += 1;
            let mut best = 0;
            for k in 1..s_count {
                if logits.data()[k * n + p] > logits.data()[best * n + p] {
                    best = k;
                }
            }
            if best == target[p] {
                loss.masked_correct += 1;
            }
        }
        if adversarial {
            let (real, fake) = real_and_fake(&probs, &target, &sample.mask);
            let (d_fake, fake_trace) = disc.forward_trace(&fake, h, w);
            let d_fake = d_fake.to_f64();
            loss.adv += softplus(-d_fake);
            let g_adv = T::from_f64(-cfg.adv_weight * sigmoid(-d_fake));
            let mut d_in = disc
                .backward(&fake_trace, g_adv, &mut scratch, true)
                .expect("input gradient requested");
            for (p, &m) in sample.mask.data().iter().enumerate() {
                if !m {
                    for k in 0..s_count {
                        d_in[k * n + p] = T::ZERO;
                    }
                }
            }
            let d_adv = softmax_backward(&probs, &d_in);
            for (g, v) in dlogits.data_mut().iter_mut().zip(d_adv) {
                *g += v;
            }
            if let Some(dg) = disc_grads.as_mut() {
                let (d_real, real_trace) = disc.forward_trace(&real, h, w);
                let d_real = d_real.to_f64();
                disc_loss += softplus(-d_real) + softplus(d_fake);
                disc.backward(&fake_trace, T::from_f64(sigmoid(d_fake)) * scale, dg, false);
                disc.backward(&real_trace, T::from_f64(-sigmoid(-d_real)) * scale, dg, false);
            }
        }
        for g in dlogits.data_mut() {
            *g *= scale;
        }
        gen.backward(&trace, dlogits.data(), h, w, &mut gen_grads);
    }
    let b = batch.len() as f64;
    loss.ce /= b;
    loss.adv /= b;
    loss.total = loss.ce + cfg.adv_weight * loss.adv;
    Ok(BatchPass {
        gen_loss: loss,
        gen_grads,
        disc_loss: disc_loss / b,
        disc_grads,
    })
}

/// Batch-averaged `CE + adv_weight * softplus(-D(fake))` and its gradient
/// with respect to every generator parameter. `fake` is the softmax output
/// inside the mask pasted over the one-hot target outside it.
pub fn generator_loss_and_grad<T: Real>(
    gen: &GeneratorParams<T>,
    disc: &DiscriminatorParams<T>,
    batch: &[PairedSample],
    tax: &ClassTaxonomy,
    cfg: &TrainConfig,
) -> Result<(GeneratorLoss, Vec<T>)> {
    let pass = batch_pass(gen, disc, batch, tax, cfg, false)?;
    Ok((pass.gen_loss, pass.gen_grads))
}

/// Networks plus optimizer state; advancing it is deterministic in its inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Trainer<T> {
    pub generator: GeneratorParams<T>,
    pub discriminator: DiscriminatorParams<T>,
    pub gen_opt: Adam<T>,
    pub disc_opt: Adam<T>,
    /// Number of completed steps.
    pub step: usize,
}

impl<T: Real> Trainer<T> {
    /// Freshly initialized networks seeded from `cfg.rng_seed`.
    pub fn new(tax: &ClassTaxonomy, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let generator = GeneratorParams::for_taxonomy(tax, cfg.generator_width, derive_seed(cfg.rng_seed, 0x6E4));
        let discriminator = DiscriminatorParams::init(
            tax.num_static(),
            cfg.discriminator_width,
            derive_seed(cfg.rng_seed, 0xD15),
        );
        Ok(Self::from_networks(generator, discriminator))
    }

    pub fn from_networks(generator: GeneratorParams<T>, discriminator: DiscriminatorParams<T>) -> Self {
        let (gn, dn) = (generator.param_count(), discriminator.param_count());
        Self {
            generator,
            discriminator,
            gen_opt: Adam::new(gn),
            disc_opt: Adam::new(dn),
            step: 0,
        }
    }

    /// One update of the generator against the current discriminator, then
    /// (in adversarial mode) one discriminator update on the same fakes.
    pub fn train_step(&mut self, batch: &[PairedSample], tax: &ClassTaxonomy, cfg: &TrainConfig) -> Result<LossReport> {
        cfg.validate()?;
        let pass = batch_pass(&self.generator, &self.discriminator, batch, tax, cfg, true)?;
        let step = self.step;
        let finite = |v: f64, what| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::NonFinite { what, step })
            }
        };
        finite(pass.gen_loss.ce, "reconstruction loss")?;
        finite(pass.gen_loss.adv, "adversarial loss")?;
        finite(pass.disc_loss, "discriminator loss")?;
        self.gen_opt.step(
            &mut self.generator.params,
            &pass.gen_grads,
            cfg.learning_rate,
            cfg.beta1,
            cfg.beta2,
        );
        if let Some(dg) = &pass.disc_grads {
            self.disc_opt.step(
                &mut self.discriminator.params,
                dg,
                cfg.learning_rate,
                cfg.beta1,
                cfg.beta2,
            );
        }
        if !self.generator.is_finite() || !self.discriminator.is_finite() {
            return Err(Error::NonFinite {
                what: "parameters",
                step,
            });
        }
        self.step += 1;
        let l = pass.gen_loss;
        Ok(LossReport {
            step,
            ce: l.ce,
            adv_g: l.adv,
            adv_d: pass.disc_loss,
            batch_acc: if l.masked_pixels == 0 {
                1.0
            } else {
                l.masked_correct as f64 / l.masked_pixels as f64
            },
        })
    }
}
