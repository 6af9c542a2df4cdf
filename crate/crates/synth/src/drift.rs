use rand::Rng;
use seminpaint_core::seed::rng_from_seed;
use seminpaint_core::{ClassTaxonomy, LabelMap, PairedSample};

/// Translates the static frame by an integer offset drawn uniformly from
/// `[-max_offset, max_offset]^2`, replicating edge pixels into the uncovered
/// border. A non-zero offset is appended to the sample id.
pub fn apply_drift(sample: &PairedSample, rng_seed: u64, max_offset: u32) -> PairedSample {
    let m = i64::from(max_offset);
    let mut rng = rng_from_seed(rng_seed);
    let dx = rng.gen_range(-m..=m);
    let dy = rng.gen_range(-m..=m);
    shift_static(sample, dx, dy)
}

pub(crate) fn shift_static(sample: &PairedSample, dx: i64, dy: i64) -> PairedSample {
    if dx == 0 && dy == 0 {
        return sample.clone();
    }
    let src = &sample.static_frame;
    let (w, h) = src.dims();
    let shifted = LabelMap::from_fn(w, h, |x, y| {
        let sx = (x as i64 - dx).clamp(0, w as i64 - 1) as usize;
        let sy = (y as i64 - dy).clamp(0, h as i64 - 1) as usize;
        src.get(sx, sy)
    });
    PairedSample {
        id: format!("{}_dx{dx:+}_dy{dy:+}", sample.id),
        dynamic_frame: sample.dynamic_frame.clone(),
        static_frame: shifted,
        mask: sample.mask.clone(),
    }
}

/// Overwrites static-frame pixels that disagree with a static-class pixel of
/// the dynamic frame. Pixels covered by dynamic classes are left alone.
pub fn align_correct(sample: &PairedSample, tax: &ClassTaxonomy) -> PairedSample {
    let mut out = sample.clone();
    let dynamic = sample.dynamic_frame.data();
    for (i, s) in out.static_frame.data_mut().iter_mut().enumerate() {
        let d = dynamic[i];
        if tax.is_static(d) && *s != d {
            *s = d;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_scene_pair, SceneSpec};
    use seminpaint_core::InpaintMask;

    fn carla() -> ClassTaxonomy {
        ClassTaxonomy::builtin("carla9").unwrap()
    }

    fn boundary_pair() -> PairedSample {
        // Road (1) on the left half, Sidewalk (2) on the right
        let m = LabelMap::from_fn(10, 6, |x, _| if x < 5 { 1 } else { 2 });
        PairedSample::new("b", m.clone(), m, InpaintMask::empty(10, 6)).unwrap()
    }

    #[test]
    fn zero_offset_is_identity() {
        let pair = generate_scene_pair(&SceneSpec::sample(3, 120, 90)).unwrap();
        for seed in 0..5 {
            assert_eq!(apply_drift(&pair, seed, 0), pair);
        }
    }

    #[test]
    fn shift_moves_boundary() {
        let moved = shift_static(&boundary_pair(), 1, 0);
        for y in 0..6 {
            let first_sidewalk = (0..10).find(|&x| moved.static_frame.get(x, y) == 2).unwrap();
            assert_eq!(first_sidewalk, 6);
        }
        assert_eq!(moved.id, "b_dx+1_dy+0");
        assert_eq!(moved.dynamic_frame, boundary_pair().dynamic_frame);
    }

    #[test]
    fn drift_creates_disagreements_and_correction_removes_them() {
        let tax = carla();
        let pair = boundary_pair();
        for (dx, dy) in [(1, 0), (-2, 1), (2, 2), (-1, -1)] {
            let drifted = shift_static(&pair, dx, dy);
            let disagree = drifted
                .static_frame
                .data()
                .iter()
                .zip(drifted.dynamic_frame.data())
                .filter(|(a, b)| a != b)
                .count();
            assert!(disagree >= 1, "offset ({dx},{dy})");
            let fixed = align_correct(&drifted, &tax);
            assert_eq!(fixed.static_frame, fixed.dynamic_frame);
        }
    }

    #[test]
    fn correction_is_fixpoint_on_aligned_pairs_and_idempotent() {
        let tax = carla();
        for seed in 0..10 {
            let pair = generate_scene_pair(&SceneSpec::sample(seed, 160, 120)).unwrap();
            assert_eq!(align_correct(&pair, &tax), pair);
            let drifted = apply_drift(&pair, seed + 100, 2);
            let once = align_correct(&drifted, &tax);
            assert_eq!(align_correct(&once, &tax), once);
            for i in 0..once.mask.data().len() {
                let d = once.dynamic_frame.data()[i];
                if tax.is_static(d) {
                    assert_eq!(once.static_frame.data()[i], d);
                } else {
                    // under the mask the drifted ground truth is kept
                    assert_eq!(once.static_frame.data()[i], drifted.static_frame.data()[i]);
                }
            }
        }
    }
}
