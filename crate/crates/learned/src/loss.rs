//! Reconstruction and adversarial losses.

use std::collections::VecDeque;

use seminpaint_core::{ChannelTensor, ClassTaxonomy, InpaintMask, LabelMap};

use crate::error::{Error, Result};
use crate::real::Real;

/// Row-major per-pixel loss weights: 1 on context pixels and `gamma^d` inside
/// the mask, where `d` is the Chebyshev distance to the nearest unmasked
/// pixel. A mask with no context at all uses `d = width + height` throughout.
pub fn discount_weight_map(mask: &InpaintMask, gamma: f64) -> Vec<f64> {
    let (w, h) = mask.dims();
    let mut dist = vec![usize::MAX; w * h];
    let mut queue = VecDeque::new();
    for (i, &m) in mask.data().iter().enumerate() {
        if !m {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    // 8-connected BFS distance is the Chebyshev distance
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
    }
    dist.into_iter()
        .map(|d| if d == usize::MAX { w + h } else { d })
        .map(|d| if d == 0 { 1.0 } else { gamma.powi(d as i32) })
        .collect()
}

/// Per-pixel softmax over the channels of a logit volume.
pub fn softmax<T: Real>(logits: &ChannelTensor<T>) -> ChannelTensor<T> {
    let (c, h, w) = (logits.channels(), logits.height(), logits.width());
    let n = h * w;
    let src = logits.data();
    let mut out = vec![T::ZERO; c * n];
    for p in 0..n {
        let mut max = src[p];
        for k in 1..c {
            if src[k * n + p] > max {
                max = src[k * n + p];
            }
        }
        let mut sum = T::ZERO;
        for k in 0..c {
            let e = (src[k * n + p] - max).exp();
            out[k * n + p] = e;
            sum += e;
        }
        for k in 0..c {
            out[k * n + p] = out[k * n + p] / sum;
        }
    }
    ChannelTensor::from_vec(c, h, w, out)
}

/// Static channel of every target pixel.
pub(crate) fn target_channels(target: &LabelMap, tax: &ClassTaxonomy) -> Result<Vec<usize>> {
    let w = target.width();
    target
        .data()
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            tax.static_channel(label).ok_or(Error::DynamicTarget {
                label,
                x: i % w,
                y: i / w,
            })
        })
        .collect()
}

/// Weighted softmax cross-entropy over the static classes,
/// `sum_p w(p) * -log softmax(logits(p))[target(p)] / sum_p w(p)`, with its
/// gradient with respect to the logits.
pub fn masked_ce_loss<T: Real>(
    logits: &ChannelTensor<T>,
    target: &LabelMap,
    tax: &ClassTaxonomy,
    weights: &[f64],
) -> Result<(f64, ChannelTensor<T>)> {
    let (h, w) = (logits.height(), logits.width());
    if target.dims() != (w, h) || weights.len() != w * h || logits.channels() != tax.num_static() {
        return Err(Error::Shape(format!(
            "logits {}x{}x{}, target {:?}, {} weights, {} static classes",
            logits.channels(),
            w,
            h,
            target.dims(),
            weights.len(),
            tax.num_static()
        )));
    }
    let channels = target_channels(target, tax)?;
    let probs = softmax(logits);
    Ok(ce_from_probs(logits, &probs, &channels, weights))
}

pub(crate) fn ce_from_probs<T: Real>(
    logits: &ChannelTensor<T>,
    probs: &ChannelTensor<T>,
    target: &[usize],
    weights: &[f64],
) -> (f64, ChannelTensor<T>) {
    let (c, n) = (logits.channels(), logits.height() * logits.width());
    let total: f64 = weights.iter().sum();
    let mut grad = probs.clone();
    if total <= 0.0 {
        grad.data_mut().fill(T::ZERO);
        return (0.0, grad);
    }
    let src = logits.data();
    let mut loss = 0.0;
    let g = grad.data_mut();
    for p in 0..n {
        let wp = weights[p] / total;
        // log-sum-exp in f64 keeps the loss value accurate in f32 training
        let max = (0..c)
            .map(|k| src[k * n + p].to_f64())
            .fold(f64::NEG_INFINITY, f64::max);
        let lse = max + (0..c).map(|k| (src[k * n + p].to_f64() - max).exp()).sum::<f64>().ln();
        loss += wp * (lse - src[target[p] * n + p].to_f64());
        let wt = T::from_f64(wp);
        for k in 0..c {
            g[k * n + p] *= wt;
        }
        g[target[p] * n + p] -= wt;
    }
    (loss, grad)
}

/// `ln(1 + e^x)`, computed without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Backpropagates `grad_probs` through a per-pixel softmax.
pub(crate) fn softmax_backward<T: Real>(probs: &ChannelTensor<T>, grad_probs: &[T]) -> Vec<T> {
    let (c, n) = (probs.channels(), probs.height() * probs.width());
    let s = probs.data();
    let mut out = vec![T::ZERO; c * n];
    for p in 0..n {
        let mut dot = T::ZERO;
        for k in 0..c {
            dot += s[k * n + p] * grad_probs[k * n + p];
        }
        for k in 0..c {
            out[k * n + p] = s[k * n + p] * (grad_probs[k * n + p] - dot);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use seminpaint_core::seed::rng_from_seed;

    fn carla() -> ClassTaxonomy {
        ClassTaxonomy::builtin("carla9").unwrap()
    }

    /// Chebyshev distance by exhaustive scan.
    fn oracle_distance(mask: &InpaintMask, x: usize, y: usize) -> usize {
        let (w, h) = mask.dims();
        let mut best = usize::MAX;
        for cy in 0..h {
            for cx in 0..w {
                if !mask.get(cx, cy) {
                    best = best.min(cx.abs_diff(x).max(cy.abs_diff(y)));
                }
            }
        }
        best
    }

    #[test]
    fn discount_examples() {
        let mask = InpaintMask::from_fn(9, 9, |x, y| (2..7).contains(&x) && (2..7).contains(&y));
        assert!(discount_weight_map(&mask, 1.0).iter().all(|&v| v == 1.0));
        let wmap = discount_weight_map(&mask, 0.99);
        assert_eq!(wmap[2 * 9 + 2], 0.99);
        assert!((wmap[4 * 9 + 4] - 0.970299).abs() < 1e-12);
        assert_eq!(wmap[0], 1.0);
    }

    #[test]
    fn discount_matches_exhaustive_distance() {
        let mut rng = rng_from_seed(11);
        for _ in 0..20 {
            let mask = InpaintMask::from_fn(17, 13, |_, _| rng.gen_bool(0.8));
            if mask.is_all_clear() || !mask.has_context() {
                continue;
            }
            let wmap = discount_weight_map(&mask, 0.9);
            for y in 0..13 {
                for x in 0..17 {
                    let d = oracle_distance(&mask, x, y);
                    assert!((wmap[y * 17 + x] - 0.9f64.powi(d as i32)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn uniform_logits_give_log_of_class_count() {
        let tax = carla();
        let logits = ChannelTensor::filled(7, 4, 5, 0.0f64);
        let target = LabelMap::filled(5, 4, 1);
        let (loss, _) = masked_ce_loss(&logits, &target, &tax, &[1.0; 20]).unwrap();
        assert!((loss - 7f64.ln()).abs() < 1e-12);

        let cs = ClassTaxonomy::builtin("cityscapes12").unwrap();
        let logits = ChannelTensor::filled(8, 4, 5, 0.0f64);
        let (loss, _) = masked_ce_loss(&logits, &target, &cs, &[0.5; 20]).unwrap();
        assert!((loss - 2.0794415).abs() < 1e-6);
    }

    #[test]
    fn peaked_logits_approach_zero_loss() {
        let tax = carla();
        let target = LabelMap::from_fn(6, 3, |x, _| (x % 7) as u8);
        let mut logits = ChannelTensor::filled(7, 3, 6, 0.0f64);
        for y in 0..3 {
            for x in 0..6 {
                logits.set(tax.static_channel(target.get(x, y)).unwrap(), x, y, 40.0);
            }
        }
        let (loss, _) = masked_ce_loss(&logits, &target, &tax, &[1.0; 18]).unwrap();
        assert!((0.0..1e-12).contains(&loss));
    }

    #[test]
    fn dynamic_target_is_rejected() {
        let tax = carla();
        let logits = ChannelTensor::filled(7, 2, 2, 0.0f64);
        let target = LabelMap::new(2, 2, vec![1, 1, 8, 1]).unwrap();
        assert!(matches!(
            masked_ce_loss(&logits, &target, &tax, &[1.0; 4]),
            Err(Error::DynamicTarget { label: 8, x: 0, y: 1 })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let tax = carla();
        let mut rng = rng_from_seed(3);
        let (w, h) = (5, 4);
        let target = LabelMap::from_fn(w, h, |_, _| tax.static_ids()[rng.gen_range(0..7)]);
        let logits = ChannelTensor::from_vec(7, h, w, (0..7 * w * h).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let mask = InpaintMask::from_fn(w, h, |x, y| x > 0 && y > 0 && x < 4);
        let wmap = discount_weight_map(&mask, 0.8);
        let (_, grad) = masked_ce_loss(&logits, &target, &tax, &wmap).unwrap();
        let eps = 1e-4;
        for i in 0..logits.data().len() {
            let (mut a, mut b) = (logits.clone(), logits.clone());
            a.data_mut()[i] += eps;
            b.data_mut()[i] -= eps;
            let fa = masked_ce_loss(&a, &target, &tax, &wmap).unwrap().0;
            let fb = masked_ce_loss(&b, &target, &tax, &wmap).unwrap().0;
            let fd = (fa - fb) / (2.0 * eps);
            let g = grad.data()[i];
            assert!(
                (fd - g).abs() / fd.abs().max(g.abs()).max(1e-8) < 1e-3,
                "{i}: {fd} vs {g}"
            );
        }
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
