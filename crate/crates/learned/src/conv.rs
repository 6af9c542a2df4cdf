//! 2-D convolution over channel-major planes via im2col + GEMM.

use crate::real::Real;

/// Square convolution with "same"-style zero padding of
/// `dilation * (kernel / 2)` on every side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub dilation: usize,
}

impl ConvSpec {
    pub const fn new(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, dilation: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            dilation,
        }
    }

    pub fn pad(&self) -> usize {
        self.dilation * (self.kernel / 2)
    }

    pub fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        let span = self.dilation * (self.kernel - 1) + 1;
        let p = 2 * self.pad();
        ((h + p - span) / self.stride + 1, (w + p - span) / self.stride + 1)
    }

    /// Rows of the im2col matrix.
    pub fn patch_len(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.patch_len()
    }

    /// Weights (`out x in x k x k`) followed by one bias per output channel.
    pub fn param_len(&self) -> usize {
        self.weight_len() + self.out_channels
    }

    fn is_pointwise(&self) -> bool {
        self.kernel == 1 && self.stride == 1
    }
}

/// What the backward pass needs from a forward call.
#[derive(Clone, Debug)]
pub struct ConvCache<T> {
    cols: Vec<T>,
    in_h: usize,
    in_w: usize,
    out_h: usize,
    out_w: usize,
}

fn im2col<T: Real>(spec: &ConvSpec, input: &[T], h: usize, w: usize, oh: usize, ow: usize) -> Vec<T> {
    let k = spec.kernel;
    let (s, d, pad) = (spec.stride as isize, spec.dilation as isize, spec.pad() as isize);
    let p = oh * ow;
    let mut cols = vec![T::ZERO; spec.patch_len() * p];
    for ci in 0..spec.in_channels {
        let plane = &input[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = oy as isize * s - pad + ky as isize * d;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    let out = &mut dst[oy * ow..(oy + 1) * ow];
                    let x0 = kx as isize * d - pad;
                    for (ox, o) in out.iter_mut().enumerate() {
                        let ix = ox as isize * s + x0;
                        if ix >= 0 && ix < w as isize {
                            *o = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im<T: Real>(spec: &ConvSpec, cols: &[T], h: usize, w: usize, oh: usize, ow: usize) -> Vec<T> {
    let k = spec.kernel;
    let (s, d, pad) = (spec.stride as isize, spec.dilation as isize, spec.pad() as isize);
    let p = oh * ow;
    let mut out = vec![T::ZERO; spec.in_channels * h * w];
    for ci in 0..spec.in_channels {
        let plane = &mut out[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = oy as isize * s - pad + ky as isize * d;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    let x0 = kx as isize * d - pad;
                    for (ox, &v) in src[oy * ow..(oy + 1) * ow].iter().enumerate() {
                        let ix = ox as isize * s + x0;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] += v;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Returns the `out_channels x oh x ow` output and the cache for backward.
pub fn conv_forward<T: Real>(spec: &ConvSpec, params: &[T], input: &[T], h: usize, w: usize) -> (Vec<T>, ConvCache<T>) {
    debug_assert_eq!(params.len(), spec.param_len());
    debug_assert_eq!(input.len(), spec.in_channels * h * w);
    let (oh, ow) = spec.out_dims(h, w);
    let p = oh * ow;
    let cols = if spec.is_pointwise() {
        input.to_vec()
    } else {
        im2col(spec, input, h, w, oh, ow)
    };
    let (weight, bias) = params.split_at(spec.weight_len());
    let mut out = vec![T::ZERO; spec.out_channels * p];
    for (o, &b) in bias.iter().enumerate() {
        out[o * p..(o + 1) * p].fill(b);
    }
    T::gemm(
        spec.out_channels,
        spec.patch_len(),
        p,
        T::ONE,
        weight,
        false,
        &cols,
        false,
        T::ONE,
        &mut out,
    );
    let cache = ConvCache {
        cols,
        in_h: h,
        in_w: w,
        out_h: oh,
        out_w: ow,
    };
    (out, cache)
}

/// Accumulates parameter gradients into `grads` and, when asked, returns the
/// gradient with respect to the layer input.
pub fn conv_backward<T: Real>(
    spec: &ConvSpec,
    params: &[T],
    grads: &mut [T],
    cache: &ConvCache<T>,
    grad_out: &[T],
    want_input_grad: bool,
) -> Option<Vec<T>> {
    let p = cache.out_h * cache.out_w;
    debug_assert_eq!(grad_out.len(), spec.out_channels * p);
    let wl = spec.weight_len();
    let (gw, gb) = grads.split_at_mut(wl);
    T::gemm(
        spec.out_channels,
        p,
        spec.patch_len(),
        T::ONE,
        grad_out,
        false,
        &cache.cols,
        true,
        T::ONE,
        gw,
    );
    for (o, b) in gb.iter_mut().enumerate() {
        *b += grad_out[o * p..(o + 1) * p].iter().copied().sum::<T>();
    }
    if !want_input_grad {
        return None;
    }
    let mut dcols = vec![T::ZERO; spec.patch_len() * p];
    T::gemm(
        spec.patch_len(),
        spec.out_channels,
        p,
        T::ONE,
        &params[..wl],
        true,
        grad_out,
        false,
        T::ZERO,
        &mut dcols,
    );
    if spec.is_pointwise() {
        Some(dcols)
    } else {
        Some(col2im(spec, &dcols, cache.in_h, cache.in_w, cache.out_h, cache.out_w))
    }
}
