use rand::Rng;

use crate::error::{Error, Result};
use crate::labelmap::{InpaintMask, LabelMap};
use crate::seed::rng_from_seed;
use crate::taxonomy::ClassTaxonomy;

/// Marks every dynamic-class pixel, then grows the mask `dilation` times with
/// a 3x3 square structuring element.
pub fn extract_dynamic_mask(m: &LabelMap, tax: &ClassTaxonomy, dilation: usize) -> InpaintMask {
    let (w, h) = m.dims();
    let mut mask = InpaintMask::from_fn(w, h, |x, y| tax.is_dynamic(m.get(x, y)));
    for _ in 0..dilation {
        mask = dilate3x3(&mask);
    }
    mask
}

pub fn dilate3x3(mask: &InpaintMask) -> InpaintMask {
    let (w, h) = mask.dims();
    InpaintMask::from_fn(w, h, |x, y| {
        let (x0, x1) = (x.saturating_sub(1), (x + 1).min(w - 1));
        let (y0, y1) = (y.saturating_sub(1), (y + 1).min(h - 1));
        (y0..=y1).any(|yy| (x0..=x1).any(|xx| mask.get(xx, yy)))
    })
}

/// Takes `generated` inside the mask and `original` everywhere else.
pub fn compose_inpainted(original: &LabelMap, generated: &LabelMap, mask: &InpaintMask) -> Result<LabelMap> {
    generated.ensure_dims(original.dims())?;
    mask.ensure_dims(original.dims())?;
    let data = original
        .data()
        .iter()
        .zip(generated.data())
        .zip(mask.data())
        .map(|((&o, &g), &m)| if m { g } else { o })
        .collect();
    LabelMap::new(original.width(), original.height(), data)
}

/// Draws a training crop and a rectangular occlusion inside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CropSampler {
    pub crop_width: usize,
    pub crop_height: usize,
    /// Inclusive bounds on each side of the occlusion rectangle.
    pub rect_min: usize,
    pub rect_max: usize,
}

impl Default for CropSampler {
    fn default() -> Self {
        Self {
            crop_width: 256,
            crop_height: 128,
            rect_min: 16,
            rect_max: 64,
        }
    }
}

impl CropSampler {
    pub fn validate(&self) -> Result<()> {
        if self.crop_width == 0 || self.crop_height == 0 {
            return Err(Error::CropSampler("empty crop".into()));
        }
        if self.rect_min == 0 || self.rect_min > self.rect_max {
            return Err(Error::CropSampler(format!(
                "rectangle bounds [{}, {}] are invalid",
                self.rect_min, self.rect_max
            )));
        }
        if self.rect_max > self.crop_width || self.rect_max > self.crop_height {
            return Err(Error::CropSampler("rectangle may not exceed the crop".into()));
        }
        Ok(())
    }

    /// Deterministic in `(m, seed)`. The crop offset is uniform over valid
    /// positions; rectangle width and height are each uniform in
    /// `[rect_min, rect_max]` (clipped to the crop) and placed uniformly.
    pub fn sample(&self, m: &LabelMap, seed: u64) -> Result<(LabelMap, InpaintMask)> {
        self.validate()?;
        let (w, h) = m.dims();
        if w < self.crop_width || h < self.crop_height {
            return Err(Error::CropTooLarge {
                image: (w, h),
                crop: (self.crop_width, self.crop_height),
            });
        }
        let mut rng = rng_from_seed(seed);
        let x0 = rng.gen_range(0..=w - self.crop_width);
        let y0 = rng.gen_range(0..=h - self.crop_height);
        let rw = rng.gen_range(self.rect_min..=self.rect_max);
        let rh = rng.gen_range(self.rect_min..=self.rect_max);
        let rx = rng.gen_range(0..=self.crop_width - rw);
        let ry = rng.gen_range(0..=self.crop_height - rh);
        let crop = m.crop(x0, y0, self.crop_width, self.crop_height);
        let mask = InpaintMask::from_fn(self.crop_width, self.crop_height, |x, y| {
            (rx..rx + rw).contains(&x) && (ry..ry + rh).contains(&y)
        });
        Ok((crop, mask))
    }
}

/// 256x128 crop with one occlusion rectangle of side 16..=64.
pub fn sample_training_crop(m: &LabelMap, seed: u64) -> Result<(LabelMap, InpaintMask)> {
    CropSampler::default().sample(m, seed)
}

/// Bounding box `(x0, y0, x1, y1)` (exclusive upper bounds) of the set pixels.
pub fn mask_bounds(mask: &InpaintMask) -> Option<(usize, usize, usize, usize)> {
    let (w, h) = mask.dims();
    let mut b: Option<(usize, usize, usize, usize)> = None;
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                b = Some(match b {
                    None => (x, y, x + 1, y + 1),
                    Some((a, bb, c, d)) => (a.min(x), bb.min(y), c.max(x + 1), d.max(y + 1)),
                });
            }
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

    fn carla() -> ClassTaxonomy {
        ClassTaxonomy::builtin("carla9").unwrap()
    }

    #[test]
    fn mask_counts_dynamic_pixels() {
        let tax = carla();
        let car = tax.id_of("Car").unwrap();
        let road = tax.id_of("Road").unwrap();
        let m = LabelMap::from_fn(20, 10, |x, y| if y * 20 + x < 37 { car } else { road });
        assert_eq!(extract_dynamic_mask(&m, &tax, 0).count(), 37);
        let statics = LabelMap::filled(20, 10, road);
        assert!(extract_dynamic_mask(&statics, &tax, 2).is_all_clear());
    }

    #[test]
    fn single_pixel_dilation() {
        let tax = carla();
        let person = tax.id_of("Person").unwrap();
        let m = LabelMap::from_fn(7, 7, |x, y| if (x, y) == (3, 3) { person } else { 1 });
        let mask = extract_dynamic_mask(&m, &tax, 1);
        assert_eq!(mask.count(), 9);
        assert_eq!(mask_bounds(&mask), Some((2, 2, 5, 5)));
        let corner = LabelMap::from_fn(7, 7, |x, y| if (x, y) == (0, 0) { person } else { 1 });
        assert_eq!(extract_dynamic_mask(&corner, &tax, 1).count(), 4);
    }

    #[test]
    fn compose_rules() {
        let a = LabelMap::from_fn(4, 4, |x, _| x as u8);
        let b = LabelMap::from_fn(4, 4, |_, y| y as u8);
        let empty = InpaintMask::empty(4, 4);
        assert_eq!(compose_inpainted(&a, &b, &empty).unwrap(), a);
        let almost = InpaintMask::from_fn(4, 4, |x, y| (x, y) != (2, 1));
        let out = compose_inpainted(&a, &b, &almost).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let differs = out.get(x, y) != b.get(x, y);
                assert_eq!(differs, (x, y) == (2, 1) && a.get(x, y) != b.get(x, y));
            }
        }
        let small = LabelMap::filled(3, 4, 0);
        assert!(compose_inpainted(&a, &small, &empty).is_err());
    }

    #[test]
    fn compose_matches_select_oracle() {
        let mut rng = rng_from_seed(3);
        let a = LabelMap::from_fn(8, 8, |_, _| rng.gen_range(0..9));
        let b = LabelMap::from_fn(8, 8, |_, _| rng.gen_range(0..9));
        let mask = InpaintMask::from_fn(8, 8, |_, _| rng.gen_bool(0.4));
        let out = compose_inpainted(&a, &b, &mask).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let expected = if mask.get(x, y) { b.get(x, y) } else { a.get(x, y) };
                assert_eq!(out.get(x, y), expected);
            }
        }
    }

    #[test]
    fn crop_determinism_and_bounds() {
        let m = LabelMap::from_fn(300, 200, |x, y| ((x / 7 + y / 5) % 7) as u8);
        let a = sample_training_crop(&m, 42).unwrap();
        let b = sample_training_crop(&m, 42).unwrap();
        assert_eq!(a, b);
        for seed in 0..10_000u64 {
            let (crop, mask) = sample_training_crop(&m, seed).unwrap();
            assert_eq!(crop.dims(), (256, 128));
            let (x0, y0, x1, y1) = mask_bounds(&mask).unwrap();
            let (rw, rh) = (x1 - x0, y1 - y0);
            assert!((16..=64).contains(&rw) && (16..=64).contains(&rh));
            assert_eq!(mask.count(), rw * rh);
        }
    }

    #[test]
    fn exact_size_forces_origin() {
        let m = LabelMap::from_fn(256, 128, |x, y| ((x * 3 + y) % 9) as u8);
        for seed in 0..20 {
            let (crop, _) = sample_training_crop(&m, seed).unwrap();
            assert_eq!(crop, m);
        }
        let small = LabelMap::filled(255, 128, 0);
        assert!(matches!(
            sample_training_crop(&small, 0),
            Err(Error::CropTooLarge { .. })
        ));
    }

    proptest! {
        #[test]
        fn compose_is_idempotent(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let a = LabelMap::from_fn(6, 5, |_, _| rng.gen_range(0..9));
            let b = LabelMap::from_fn(6, 5, |_, _| rng.gen_range(0..9));
            let mask = InpaintMask::from_fn(6, 5, |_, _| rng.gen_bool(0.5));
            let once = compose_inpainted(&a, &b, &mask).unwrap();
            prop_assert_eq!(compose_inpainted(&once, &b, &mask).unwrap(), once);
        }

        #[test]
        fn mask_soundness_and_monotone_dilation(seed in any::<u64>()) {
            let tax = carla();
            let mut rng = rng_from_seed(seed);
            let m = LabelMap::from_fn(12, 9, |_, _| if rng.gen_bool(0.1) { 8 } else { rng.gen_range(0..7) });
            let base = extract_dynamic_mask(&m, &tax, 0);
            for (i, &l) in m.data().iter().enumerate() {
                prop_assert_eq!(base.data()[i], tax.is_dynamic(l));
            }
            let mut prev = base.count();
            for d in 1..4 {
                let c = extract_dynamic_mask(&m, &tax, d).count();
                prop_assert!(c >= prev);
                prev = c;
            }
        }
    }
}
