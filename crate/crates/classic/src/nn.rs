use seminpaint_core::{ClassTaxonomy, InpaintMask, LabelMap};

use crate::error::{Error, Result};

/// Assigns every masked pixel the label of the nearest (Euclidean) unmasked
/// static-class pixel. Equidistant candidates resolve to the first one in
/// row-major order.
pub fn inpaint_nn(m: &LabelMap, mask: &InpaintMask, tax: &ClassTaxonomy) -> Result<LabelMap> {
    crate::check_inputs(m, mask)?;
    let (w, h) = m.dims();
    let source: Vec<bool> = m
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&l, &masked)| !masked && tax.is_static(l))
        .collect();
    let mut out = m.clone();
    if mask.is_all_clear() {
        return Ok(out);
    }
    if !source.iter().any(|&s| s) {
        return Err(Error::NoStaticContext);
    }
    let max_r = w.max(h) as i64;
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !mask.get(x as usize, y as usize) {
                continue;
            }
            // (squared distance, row-major index) of the best candidate so far
            let mut best: Option<(i64, usize)> = None;
            let consider = |best: &mut Option<(i64, usize)>, cx: i64, cy: i64| {
                if cx < 0 || cy < 0 || cx >= w as i64 || cy >= h as i64 {
                    return;
                }
                let idx = cy as usize * w + cx as usize;
                if !source[idx] {
                    return;
                }
                let d2 = (cx - x).pow(2) + (cy - y).pow(2);
                if best.is_none_or(|b| (d2, idx) < b) {
                    *best = Some((d2, idx));
                }
            };
            for r in 1..=max_r {
                // every pixel on Chebyshev ring r is at least r away
                if let Some((d2, _)) = best {
                    if r * r > d2 {
                        break;
                    }
                }
                for cx in x - r..=x + r {
                    consider(&mut best, cx, y - r);
                    consider(&mut best, cx, y + r);
                }
                for cy in y - r + 1..y + r {
                    consider(&mut best, x - r, cy);
                    consider(&mut best, x + r, cy);
                }
            }
            let (_, idx) = best.expect("a static source pixel exists");
            out.set(x as usize, y as usize, m.data()[idx]);
        }
    }
    Ok(out)
}
