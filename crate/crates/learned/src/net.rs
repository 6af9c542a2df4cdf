//! Generator and discriminator architectures with hand-written backward passes.
//!
//! Parameters of each network live in one flat vector so the optimizer,
//! checkpointing and gradient checks can treat them uniformly.

use rand::Rng;
use seminpaint_core::seed::rng_from_seed;
use seminpaint_core::{ChannelTensor, ClassTaxonomy, InpaintMask};

use crate::conv::{conv_backward, conv_forward, ConvCache, ConvSpec};
use crate::error::{Error, Result};
use crate::real::Real;

pub const LEAKY_SLOPE: f64 = 0.2;
pub const DEFAULT_GENERATOR_WIDTH: usize = 32;
pub const DEFAULT_DISCRIMINATOR_WIDTH: usize = 16;

fn leaky<T: Real>(v: &mut [T]) {
    let slope = T::from_f64(LEAKY_SLOPE);
    for x in v {
        if *x < T::ZERO {
            *x *= slope;
        }
    }
}

/// Multiplies `grad` by the activation derivative, read off the activation output.
fn leaky_backward<T: Real>(grad: &mut [T], out: &[T]) {
    let slope = T::from_f64(LEAKY_SLOPE);
    for (g, &o) in grad.iter_mut().zip(out) {
        if o <= T::ZERO {
            *g *= slope;
        }
    }
}

fn offsets(specs: &[ConvSpec]) -> Vec<usize> {
    let mut acc = 0;
    let mut out = Vec::with_capacity(specs.len() + 1);
    out.push(0);
    for s in specs {
        acc += s.param_len();
        out.push(acc);
    }
    out
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`; biases start at zero.
fn glorot<T: Real>(rng: &mut impl Rng, len: usize, fan_in: usize, fan_out: usize, out: &mut Vec<T>) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    out.extend((0..len).map(|_| T::from_f64(rng.gen_range(-limit..=limit))));
}

/// Seven-stage encoder/decoder producing per-pixel logits over the static classes:
/// 3x3 conv, strided 3x3 conv, two dilated 3x3 convs (rates 2 and 4),
/// nearest 2x upsampling, 3x3 conv, and a 1x1 classification head.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams<T> {
    pub num_classes: usize,
    pub num_static: usize,
    pub width: usize,
    pub params: Vec<T>,
}

impl<T: Real> GeneratorParams<T> {
    pub fn layer_specs(num_classes: usize, num_static: usize, width: usize) -> [ConvSpec; 6] {
        let w = width;
        [
            ConvSpec::new(num_classes + 1, w, 3, 1, 1),
            ConvSpec::new(w, 2 * w, 3, 2, 1),
            ConvSpec::new(2 * w, 2 * w, 3, 1, 2),
            ConvSpec::new(2 * w, 2 * w, 3, 1, 4),
            ConvSpec::new(2 * w, w, 3, 1, 1),
            ConvSpec::new(w, num_static, 1, 1, 1),
        ]
    }

    pub fn specs(&self) -> [ConvSpec; 6] {
        Self::layer_specs(self.num_classes, self.num_static, self.width)
    }

    pub fn zeros(num_classes: usize, num_static: usize, width: usize) -> Self {
        let len = Self::layer_specs(num_classes, num_static, width)
            .iter()
            .map(ConvSpec::param_len)
            .sum();
        Self {
            num_classes,
            num_static,
            width,
            params: vec![T::ZERO; len],
        }
    }

    pub fn init(num_classes: usize, num_static: usize, width: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut params = Vec::new();
        for s in Self::layer_specs(num_classes, num_static, width) {
            let k2 = s.kernel * s.kernel;
            glorot(
                &mut rng,
                s.weight_len(),
                s.in_channels * k2,
                s.out_channels * k2,
                &mut params,
            );
            params.extend(std::iter::repeat_n(T::ZERO, s.out_channels));
        }
        Self {
            num_classes,
            num_static,
            width,
            params,
        }
    }

    pub fn for_taxonomy(tax: &ClassTaxonomy, width: usize, seed: u64) -> Self {
        Self::init(tax.num_classes(), tax.num_static(), width, seed)
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// `(spec, parameter range)` for every layer.
    pub fn layers(&self) -> Vec<(ConvSpec, std::ops::Range<usize>)> {
        let specs = self.specs();
        let off = offsets(&specs);
        specs
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, off[i]..off[i + 1]))
            .collect()
    }

    pub fn cast<U: Real>(&self) -> GeneratorParams<U> {
        GeneratorParams {
            num_classes: self.num_classes,
            num_static: self.num_static,
            width: self.width,
            params: self.params.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }

    pub(crate) fn forward_trace(&self, input: &[T], h: usize, w: usize) -> (Vec<T>, GenTrace<T>) {
        let specs = self.specs();
        let off = offsets(&specs);
        let layer = |i: usize| &self.params[off[i]..off[i + 1]];
        let mut caches = Vec::with_capacity(6);
        let mut acts = Vec::with_capacity(5);

        let (mut x, c) = conv_forward(&specs[0], layer(0), input, h, w);
        leaky(&mut x);
        caches.push(c);
        let (mut dims_h, mut dims_w) = (h, w);
        for (i, spec) in specs.iter().enumerate().take(4).skip(1) {
            acts.push(x.clone());
            let (mut y, c) = conv_forward(spec, layer(i), &x, dims_h, dims_w);
            let (oh, ow) = spec.out_dims(dims_h, dims_w);
            leaky(&mut y);
            caches.push(c);
            x = y;
            dims_h = oh;
            dims_w = ow;
        }
        let (low_h, low_w) = (dims_h, dims_w);
        acts.push(x.clone());
        let up = upsample2x(&x, 2 * self.width, low_h, low_w, h, w);
        let (mut y, c) = conv_forward(&specs[4], layer(4), &up, h, w);
        leaky(&mut y);
        caches.push(c);
        acts.push(y.clone());
        let (logits, c) = conv_forward(&specs[5], layer(5), &y, h, w);
        caches.push(c);
        (
            logits,
            GenTrace {
                caches,
                acts,
                low: (low_h, low_w),
            },
        )
    }

    /// Gradient of the loss w.r.t. every parameter given `d loss / d logits`.
    pub(crate) fn backward(&self, trace: &GenTrace<T>, grad_logits: &[T], h: usize, w: usize, grads: &mut [T]) {
        let specs = self.specs();
        let off = offsets(&specs);
        let layer = |i: usize| &self.params[off[i]..off[i + 1]];
        let mut g: &mut [T] = grads;
        let mut slices: Vec<&mut [T]> = Vec::with_capacity(6);
        for i in 0..6 {
            let (a, b) = g.split_at_mut(off[i + 1] - off[i]);
            slices.push(a);
            g = b;
        }
        let t = &trace;
        let mut d = conv_backward(&specs[5], layer(5), slices[5], &t.caches[5], grad_logits, true).unwrap();
        leaky_backward(&mut d, &t.acts[4]);
        let d_up = conv_backward(&specs[4], layer(4), slices[4], &t.caches[4], &d, true).unwrap();
        let mut d = upsample2x_backward(&d_up, 2 * self.width, t.low.0, t.low.1, h, w);
        for i in (1..4).rev() {
            leaky_backward(&mut d, &t.acts[i]);
            d = conv_backward(&specs[i], layer(i), slices[i], &t.caches[i], &d, true).unwrap();
        }
        leaky_backward(&mut d, &t.acts[0]);
        conv_backward(&specs[0], layer(0), slices[0], &t.caches[0], &d, false);
    }
}

impl<T: Real> GenTrace<T> {
    /// Which side of the activation kink every hidden unit sits on.
    pub(crate) fn signs(&self) -> impl Iterator<Item = bool> + '_ {
        self.acts.iter().flatten().map(|v| *v > T::ZERO)
    }
}

pub(crate) struct GenTrace<T> {
    caches: Vec<ConvCache<T>>,
    // activation outputs of layers 0..=4
    acts: Vec<Vec<T>>,
    low: (usize, usize),
}

/// Nearest-neighbor 2x upsampling of `(c, lh, lw)` planes, cropped to `(h, w)`.
fn upsample2x<T: Real>(x: &[T], c: usize, lh: usize, lw: usize, h: usize, w: usize) -> Vec<T> {
    let mut out = vec![T::ZERO; c * h * w];
    for ch in 0..c {
        for y in 0..h {
            let src = &x[(ch * lh + y / 2) * lw..(ch * lh + y / 2 + 1) * lw];
            let dst = &mut out[(ch * h + y) * w..(ch * h + y + 1) * w];
            for (xx, v) in dst.iter_mut().enumerate() {
                *v = src[xx / 2];
            }
        }
    }
    out
}

fn upsample2x_backward<T: Real>(g: &[T], c: usize, lh: usize, lw: usize, h: usize, w: usize) -> Vec<T> {
    let mut out = vec![T::ZERO; c * lh * lw];
    for ch in 0..c {
        for y in 0..h {
            let src = &g[(ch * h + y) * w..(ch * h + y + 1) * w];
            let dst = &mut out[(ch * lh + y / 2) * lw..(ch * lh + y / 2 + 1) * lw];
            for (xx, &v) in src.iter().enumerate() {
                dst[xx / 2] += v;
            }
        }
    }
    out
}

/// Builds the generator input: the one-hot planes with masked pixels zeroed,
/// followed by the mask itself as an extra plane.
pub fn generator_input<T: Real>(onehot: &ChannelTensor<T>, mask: &InpaintMask) -> Result<Vec<T>> {
    let (h, w) = (onehot.height(), onehot.width());
    if mask.dims() != (w, h) {
        return Err(Error::Shape(format!("mask is {:?}, input is {}x{}", mask.dims(), w, h)));
    }
    let n = w * h;
    let mut x = Vec::with_capacity((onehot.channels() + 1) * n);
    for c in 0..onehot.channels() {
        x.extend(
            onehot
                .plane(c)
                .iter()
                .zip(mask.data())
                .map(|(&v, &m)| if m { T::ZERO } else { v }),
        );
    }
    x.extend(mask.data().iter().map(|&m| if m { T::ONE } else { T::ZERO }));
    Ok(x)
}

/// Logits over the static classes for a `|C|`-channel one-hot input.
pub fn generator_forward<T: Real>(
    params: &GeneratorParams<T>,
    input: &ChannelTensor<T>,
    mask: &InpaintMask,
) -> Result<ChannelTensor<T>> {
    if input.channels() != params.num_classes {
        return Err(Error::Shape(format!(
            "input has {} channels, generator expects {}",
            input.channels(),
            params.num_classes
        )));
    }
    let x = generator_input(input, mask)?;
    let (h, w) = (input.height(), input.width());
    let (logits, _) = params.forward_trace(&x, h, w);
    Ok(ChannelTensor::from_vec(params.num_static, h, w, logits))
}

/// Three strided 3x3 convolutions, global average pooling and an affine
/// map to a single real/fake logit.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorParams<T> {
    pub num_static: usize,
    pub width: usize,
    pub params: Vec<T>,
}

impl<T: Real> DiscriminatorParams<T> {
    pub fn layer_specs(num_static: usize, width: usize) -> [ConvSpec; 3] {
        [
            ConvSpec::new(num_static, width, 3, 2, 1),
            ConvSpec::new(width, 2 * width, 3, 2, 1),
            ConvSpec::new(2 * width, 4 * width, 3, 2, 1),
        ]
    }

    pub fn specs(&self) -> [ConvSpec; 3] {
        Self::layer_specs(self.num_static, self.width)
    }

    fn conv_len(num_static: usize, width: usize) -> usize {
        Self::layer_specs(num_static, width)
            .iter()
            .map(ConvSpec::param_len)
            .sum()
    }

    pub fn zeros(num_static: usize, width: usize) -> Self {
        Self {
            num_static,
            width,
            params: vec![T::ZERO; Self::conv_len(num_static, width) + 4 * width + 1],
        }
    }

    pub fn init(num_static: usize, width: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut params = Vec::new();
        for s in Self::layer_specs(num_static, width) {
            let k2 = s.kernel * s.kernel;
            glorot(
                &mut rng,
                s.weight_len(),
                s.in_channels * k2,
                s.out_channels * k2,
                &mut params,
            );
            params.extend(std::iter::repeat_n(T::ZERO, s.out_channels));
        }
        glorot(&mut rng, 4 * width, 4 * width, 1, &mut params);
        params.push(T::ZERO);
        Self {
            num_static,
            width,
            params,
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn cast<U: Real>(&self) -> DiscriminatorParams<U> {
        DiscriminatorParams {
            num_static: self.num_static,
            width: self.width,
            params: self.params.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }

    pub(crate) fn forward_trace(&self, input: &[T], h: usize, w: usize) -> (T, DiscTrace<T>) {
        let specs = self.specs();
        let off = offsets(&specs);
        let mut caches = Vec::with_capacity(3);
        let mut acts = Vec::with_capacity(3);
        let mut x = input.to_vec();
        let (mut ch, mut cw) = (h, w);
        for (i, s) in specs.iter().enumerate() {
            let (mut y, c) = conv_forward(s, &self.params[off[i]..off[i + 1]], &x, ch, cw);
            (ch, cw) = s.out_dims(ch, cw);
            leaky(&mut y);
            caches.push(c);
            acts.push(y.clone());
            x = y;
        }
        let feat_len = 4 * self.width;
        let area = (ch * cw) as f64;
        let pooled: Vec<T> = (0..feat_len)
            .map(|c| {
                T::from_f64(
                    x[c * ch * cw..(c + 1) * ch * cw]
                        .iter()
                        .map(|v| v.to_f64())
                        .sum::<f64>()
                        / area,
                )
            })
            .collect();
        let head = &self.params[off[3]..];
        let mut logit = head[feat_len];
        for (a, &f) in head[..feat_len].iter().zip(&pooled) {
            logit += *a * f;
        }
        (
            logit,
            DiscTrace {
                caches,
                acts,
                pooled,
                low: (ch, cw),
            },
        )
    }

    /// Accumulates parameter gradients for `d loss / d logit` and optionally
    /// returns the gradient with respect to the input planes.
    pub(crate) fn backward(
        &self,
        trace: &DiscTrace<T>,
        grad_logit: T,
        grads: &mut [T],
        want_input_grad: bool,
    ) -> Option<Vec<T>> {
        let specs = self.specs();
        let off = offsets(&specs);
        let feat_len = 4 * self.width;
        let (head_g, conv_g) = {
            let (c, h) = grads.split_at_mut(off[3]);
            (h, c)
        };
        for (g, &f) in head_g[..feat_len].iter_mut().zip(&trace.pooled) {
            *g += grad_logit * f;
        }
        head_g[feat_len] += grad_logit;
        let head = &self.params[off[3]..];
        let (ch, cw) = trace.low;
        let inv_area = T::from_f64(1.0 / (ch * cw) as f64);
        let mut d = vec![T::ZERO; feat_len * ch * cw];
        for c in 0..feat_len {
            d[c * ch * cw..(c + 1) * ch * cw].fill(grad_logit * head[c] * inv_area);
        }
        let mut rest = conv_g;
        let mut slices: Vec<&mut [T]> = Vec::with_capacity(3);
        for i in 0..3 {
            let (a, b) = rest.split_at_mut(off[i + 1] - off[i]);
            slices.push(a);
            rest = b;
        }
        for i in (0..3).rev() {
            leaky_backward(&mut d, &trace.acts[i]);
            let need = i > 0 || want_input_grad;
            d = conv_backward(
                &specs[i],
                &self.params[off[i]..off[i + 1]],
                slices[i],
                &trace.caches[i],
                &d,
                need,
            )?;
        }
        Some(d)
    }
}

impl<T: Real> DiscTrace<T> {
    pub(crate) fn signs(&self) -> impl Iterator<Item = bool> + '_ {
        self.acts.iter().flatten().map(|v| *v > T::ZERO)
    }
}

pub(crate) struct DiscTrace<T> {
    caches: Vec<ConvCache<T>>,
    acts: Vec<Vec<T>>,
    pooled: Vec<T>,
    low: (usize, usize),
}

/// Real/fake logit for an `|S|`-channel probability volume.
pub fn discriminator_forward<T: Real>(params: &DiscriminatorParams<T>, input: &ChannelTensor<T>) -> Result<T> {
    if input.channels() != params.num_static {
        return Err(Error::Shape(format!(
            "input has {} channels, discriminator expects {}",
            input.channels(),
            params.num_static
        )));
    }
    Ok(params.forward_trace(input.data(), input.height(), input.width()).0)
}
