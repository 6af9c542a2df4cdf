//! Central finite-difference check of the generator gradient.
//!
//! The leaky activation is piecewise linear, so a finite difference whose
//! step moves any hidden unit across zero measures a secant over the kink
//! rather than the derivative. [`crossed_kinks`] detects this from forward
//! passes alone, which lets callers pick instances where the comparison is
//! meaningful.

use seminpaint_core::{encode_one_hot, ChannelSpace, ChannelTensor, ClassTaxonomy, PairedSample};

use crate::error::Result;
use crate::loss::{softmax, target_channels};
use crate::net::{generator_input, DiscriminatorParams, GeneratorParams};
use crate::train::{generator_loss_and_grad, real_and_fake, TrainConfig};

/// Kink side of every hidden unit of the generator and (in adversarial
/// mode) of the discriminator on the fake input, over the whole batch.
pub fn activation_pattern(
    gen: &GeneratorParams<f64>,
    disc: &DiscriminatorParams<f64>,
    batch: &[PairedSample],
    tax: &ClassTaxonomy,
    cfg: &TrainConfig,
) -> Result<Vec<bool>> {
    let mut pattern = Vec::new();
    for sample in batch {
        let (w, h) = sample.mask.dims();
        let onehot: ChannelTensor<f64> = encode_one_hot(&sample.dynamic_frame, tax, ChannelSpace::Full)?;
        let x = generator_input(&onehot, &sample.mask)?;
        let (logits, trace) = gen.forward_trace(&x, h, w);
        pattern.extend(trace.signs());
        if cfg.adv_weight > 0.0 {
            let probs = softmax(&ChannelTensor::from_vec(gen.num_static, h, w, logits));
            let target = target_channels(&sample.static_frame, tax)?;
            let (_, fake) = real_and_fake(&probs, &target, &sample.mask);
            pattern.extend(disc.forward_trace(&fake, h, w).1.signs());
        }
    }
    Ok(pattern)
}

fn perturbed(gen: &GeneratorParams<f64>, i: usize, delta: f64) -> GeneratorParams<f64> {
    let mut g = gen.clone();
    g.params[i] += delta;
    g
}

/// Number of parameters whose `±step` perturbation changes the activation pattern.
pub fn crossed_kinks(
    gen: &GeneratorParams<f64>,
    disc: &DiscriminatorParams<f64>,
    batch: &[PairedSample],
    tax: &ClassTaxonomy,
    cfg: &TrainConfig,
    step: f64,
) -> Result<usize> {
    let mut crossed = 0;
    for i in 0..gen.param_count() {
        let up = activation_pattern(&perturbed(gen, i, step), disc, batch, tax, cfg)?;
        let down = activation_pattern(&perturbed(gen, i, -step), disc, batch, tax, cfg)?;
        if up != down {
            crossed += 1;
        }
    }
    Ok(crossed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub params: usize,
}

/// Compares the analytic gradient of the full generator loss with central
/// differences of step `step` for every parameter.
pub fn check_generator_gradient(
    gen: &GeneratorParams<f64>,
    disc: &DiscriminatorParams<f64>,
    batch: &[PairedSample],
    tax: &ClassTaxonomy,
    cfg: &TrainConfig,
    step: f64,
) -> Result<GradCheck> {
    let (_, analytic) = generator_loss_and_grad(gen, disc, batch, tax, cfg)?;
    let mut out = GradCheck {
        max_rel_error: 0.0,
        worst_param: 0,
        params: gen.param_count(),
    };
    for (i, &a) in analytic.iter().enumerate() {
        let up = generator_loss_and_grad(&perturbed(gen, i, step), disc, batch, tax, cfg)?
            .0
            .total;
        let down = generator_loss_and_grad(&perturbed(gen, i, -step), disc, batch, tax, cfg)?
            .0
            .total;
        let numeric = (up - down) / (2.0 * step);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        if rel > out.max_rel_error {
            out.max_rel_error = rel;
            out.worst_param = i;
        }
    }
    Ok(out)
}
