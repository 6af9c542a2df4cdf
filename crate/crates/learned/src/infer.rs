//! Whole-image inference with overlapping tiles.

use seminpaint_core::{encode_one_hot, ChannelSpace, ChannelTensor, ClassTaxonomy, InpaintMask, LabelMap};

use crate::error::{Error, Result};
use crate::net::{generator_input, GeneratorParams};
use crate::real::Real;

pub const TILE: (usize, usize) = (256, 128);
pub const TILE_STRIDE: (usize, usize) = (128, 64);

/// Tile origins along one axis; the last tile is flush with the far edge.
fn tile_starts(len: usize, tile: usize, stride: usize) -> Vec<usize> {
    if len <= tile {
        return vec![0];
    }
    let mut starts: Vec<usize> = (0..).map(|k| k * stride).take_while(|&s| s + tile < len).collect();
    starts.push(len - tile);
    starts
}

/// Static-class logits for the whole image, averaged where tiles overlap.
pub fn infer_logits<T: Real>(
    gen: &GeneratorParams<T>,
    m: &LabelMap,
    mask: &InpaintMask,
    tax: &ClassTaxonomy,
) -> Result<ChannelTensor<T>> {
    if gen.num_classes != tax.num_classes() || gen.num_static != tax.num_static() {
        return Err(Error::Shape(format!(
            "generator expects {} classes ({} static), taxonomy {} has {} ({})",
            gen.num_classes,
            gen.num_static,
            tax.name(),
            tax.num_classes(),
            tax.num_static()
        )));
    }
    mask.ensure_dims(m.dims())?;
    let (w, h) = m.dims();
    let s = gen.num_static;
    let onehot: ChannelTensor<T> = encode_one_hot(m, tax, ChannelSpace::Full)?;
    let (tw, th) = (TILE.0.min(w), TILE.1.min(h));
    let mut sum = vec![T::ZERO; s * w * h];
    let mut hits = vec![0u32; w * h];
    for &y0 in &tile_starts(h, th, TILE_STRIDE.1) {
        for &x0 in &tile_starts(w, tw, TILE_STRIDE.0) {
            let tile_map = m.crop(x0, y0, tw, th);
            let tile_mask = mask.crop(x0, y0, tw, th);
            let tile_hot = if (tw, th) == (w, h) {
                onehot.clone()
            } else {
                encode_one_hot(&tile_map, tax, ChannelSpace::Full)?
            };
            let x = generator_input(&tile_hot, &tile_mask)?;
            let (logits, _) = gen.forward_trace(&x, th, tw);
            for k in 0..s {
                for ty in 0..th {
                    let src = &logits[(k * th + ty) * tw..(k * th + ty + 1) * tw];
                    let row = (k * h + y0 + ty) * w + x0;
                    for (d, &v) in sum[row..row + tw].iter_mut().zip(src) {
                        *d += v;
                    }
                }
            }
            for ty in 0..th {
                for c in &mut hits[(y0 + ty) * w + x0..(y0 + ty) * w + x0 + tw] {
                    *c += 1;
                }
            }
        }
    }
    for k in 0..s {
        for (v, &c) in sum[k * w * h..(k + 1) * w * h].iter_mut().zip(&hits) {
            if c > 1 {
                *v = *v / T::from_f64(f64::from(c));
            }
        }
    }
    Ok(ChannelTensor::from_vec(s, h, w, sum))
}

/// Argmax over the static classes inside the mask; context is copied through.
pub fn infer_inpaint<T: Real>(
    gen: &GeneratorParams<T>,
    m: &LabelMap,
    mask: &InpaintMask,
    tax: &ClassTaxonomy,
) -> Result<LabelMap> {
    mask.ensure_dims(m.dims())?;
    if mask.is_all_clear() {
        return Ok(m.clone());
    }
    let logits = infer_logits(gen, m, mask, tax)?;
    let n = m.width() * m.height();
    let src = logits.data();
    let mut out = m.clone();
    for (p, l) in out.data_mut().iter_mut().enumerate() {
        if !mask.data()[p] {
            continue;
        }
        let mut best = 0;
        for k in 1..gen.num_static {
            if src[k * n + p] > src[best * n + p] {
                best = k;
            }
        }
        *l = tax.static_ids()[best];
    }
    Ok(out)
}
