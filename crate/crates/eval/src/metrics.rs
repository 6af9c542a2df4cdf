//! Masked accuracy and confusion counts over static classes.

use seminpaint_core::{ClassId, ClassTaxonomy, InpaintMask, LabelMap};

use crate::error::{Error, Result};

/// Fraction of masked pixels where `pred` equals `truth`.
pub fn masked_accuracy(pred: &LabelMap, truth: &LabelMap, mask: &InpaintMask) -> Result<f64> {
    pred.ensure_dims(truth.dims())?;
    mask.ensure_dims(truth.dims())?;
    let (mut hit, mut total) = (0usize, 0usize);
    for ((&p, &t), &m) in pred.data().iter().zip(truth.data()).zip(mask.data()) {
        if m {
            total += 1;
            hit += usize::from(p == t);
        }
    }
    if total == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(hit as f64 / total as f64)
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// `|S| x |S|` counts of masked pixels, rows indexed by the true static
/// class and columns by the predicted one (both in static-channel order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    taxonomy: String,
    static_ids: Vec<ClassId>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(tax: &ClassTaxonomy) -> Self {
        let s = tax.num_static();
        Self {
            taxonomy: tax.name().to_string(),
            static_ids: tax.static_ids().to_vec(),
            counts: vec![0; s * s],
        }
    }

    pub fn size(&self) -> usize {
        self.static_ids.len()
    }

    pub fn static_ids(&self) -> &[ClassId] {
        &self.static_ids
    }

    /// Accumulates the masked pixels of one image. Nothing is counted if
    /// either map holds a non-static label under the mask.
    pub fn add(&mut self, pred: &LabelMap, truth: &LabelMap, mask: &InpaintMask, tax: &ClassTaxonomy) -> Result<()> {
        if tax.name() != self.taxonomy || tax.static_ids() != self.static_ids.as_slice() {
            return Err(Error::TaxonomyMismatch);
        }
        pred.ensure_dims(truth.dims())?;
        mask.ensure_dims(truth.dims())?;
        let channel = |which, label, pixel| {
            tax.static_channel(label)
                .ok_or(Error::NonStaticLabel { which, label, pixel })
        };
        let mut cells = Vec::with_capacity(mask.count());
        for (pixel, &m) in mask.data().iter().enumerate() {
            if m {
                let t = channel("true", truth.data()[pixel], pixel)?;
                let p = channel("predicted", pred.data()[pixel], pixel)?;
                cells.push(t * self.size() + p);
            }
        }
        for c in cells {
            self.counts[c] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.taxonomy != self.taxonomy || other.static_ids != self.static_ids {
            return Err(Error::TaxonomyMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Count at (true channel, predicted channel).
    pub fn count(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.size() + pred]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        let s = self.size();
        &self.counts[truth * s..(truth + 1) * s]
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.row(truth).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.size()).map(|k| self.count(k, k)).sum()
    }

    /// Pixel-pooled accuracy; `None` when nothing was counted.
    pub fn pooled_accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.trace() as f64 / total as f64)
    }

    /// Recall of each static class; `None` for classes absent from the truth.
    pub fn class_accuracy(&self) -> Vec<Option<f64>> {
        (0..self.size())
            .map(|k| {
                let n = self.row_sum(k);
                (n > 0).then(|| self.count(k, k) as f64 / n as f64)
            })
            .collect()
    }

    /// Each row divided by its sum; rows without support stay all zero.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        (0..self.size())
            .map(|k| {
                let n = self.row_sum(k);
                self.row(k)
                    .iter()
                    .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }

    /// Static channels whose row has no support.
    pub fn empty_rows(&self) -> Vec<usize> {
        (0..self.size()).filter(|&k| self.row_sum(k) == 0).collect()
    }
}

/// Confusion counts over a set of `(pred, truth, mask)` triples.
pub fn confusion_matrix<'a>(
    pairs: impl IntoIterator<Item = (&'a LabelMap, &'a LabelMap, &'a InpaintMask)>,
    tax: &ClassTaxonomy,
) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(tax);
    for (pred, truth, mask) in pairs {
        cm.add(pred, truth, mask, tax)?;
    }
    Ok(cm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn carla() -> ClassTaxonomy {
        ClassTaxonomy::builtin("carla9").unwrap()
    }

    fn id(tax: &ClassTaxonomy, name: &str) -> ClassId {
        tax.id_of(name).unwrap()
    }

    #[test]
    fn accuracy_examples() {
        let truth = LabelMap::from_fn(4, 4, |x, y| ((x + y) % 3) as u8);
        let mask = InpaintMask::from_fn(4, 4, |x, y| x < 2 && y < 2);
        assert_eq!(masked_accuracy(&truth, &truth, &mask).unwrap(), 1.0);
        let mut pred = truth.clone();
        pred.set(1, 1, 7);
        assert_eq!(masked_accuracy(&pred, &truth, &mask).unwrap(), 0.75);
        assert!(matches!(
            masked_accuracy(&pred, &truth, &InpaintMask::empty(4, 4)),
            Err(Error::EmptyMask)
        ));
        assert!(masked_accuracy(&LabelMap::filled(3, 4, 0), &truth, &mask).is_err());
    }

    #[test]
    fn per_image_mean() {
        assert_eq!(mean(&[1.0, 0.5]), Some(0.75));
        assert_eq!(mean(&[]), None);
    }

    #[test]
    fn single_pixel_confusion() {
        let tax = carla();
        let (road, walk) = (id(&tax, "Road"), id(&tax, "Sidewalk"));
        let truth = LabelMap::from_fn(3, 1, |x, _| if x == 1 { walk } else { road });
        let pred = LabelMap::filled(3, 1, road);
        let mask = InpaintMask::from_fn(3, 1, |x, _| x == 1);
        let cm = confusion_matrix([(&pred, &truth, &mask)], &tax).unwrap();
        let (r, w) = (tax.static_channel(road).unwrap(), tax.static_channel(walk).unwrap());
        assert_eq!(cm.count(w, r), 1);
        assert_eq!(cm.total(), 1);
        assert_eq!(cm.pooled_accuracy(), Some(0.0));
        assert_eq!(cm.empty_rows().len(), cm.size() - 1);
        assert_eq!(cm.class_accuracy()[w], Some(0.0));
        assert_eq!(cm.class_accuracy()[r], None);
    }

    #[test]
    fn dynamic_labels_are_rejected() {
        let tax = carla();
        let car = id(&tax, "Car");
        let truth = LabelMap::filled(2, 2, id(&tax, "Road"));
        let mut pred = truth.clone();
        pred.set(0, 0, car);
        let mut cm = ConfusionMatrix::new(&tax);
        let mask = InpaintMask::from_fn(2, 2, |_, _| true);
        assert!(matches!(
            cm.add(&pred, &truth, &mask, &tax),
            Err(Error::NonStaticLabel { which: "predicted", .. })
        ));
        assert_eq!(cm.total(), 0);
        assert!(matches!(
            cm.add(&truth, &pred, &mask, &tax),
            Err(Error::NonStaticLabel { which: "true", .. })
        ));
        let outside = InpaintMask::from_fn(2, 2, |x, y| (x, y) != (0, 0));
        cm.add(&pred, &truth, &outside, &tax).unwrap();
        assert_eq!(cm.total(), 3);
    }

    #[test]
    fn merge_requires_same_taxonomy() {
        let tax = carla();
        let other = ClassTaxonomy::builtin("cityscapes12").unwrap();
        let mut a = ConfusionMatrix::new(&tax);
        assert!(matches!(
            a.merge(&ConfusionMatrix::new(&other)),
            Err(Error::TaxonomyMismatch)
        ));
        let m = LabelMap::filled(2, 2, 0);
        assert!(matches!(
            a.add(&m, &m, &InpaintMask::empty(2, 2), &other),
            Err(Error::TaxonomyMismatch)
        ));
    }

    fn static_map(tax: &ClassTaxonomy, w: usize, h: usize, picks: &[usize]) -> LabelMap {
        let ids = tax.static_ids();
        LabelMap::new(w, h, picks.iter().map(|&k| ids[k % ids.len()]).collect()).unwrap()
    }

    fn instance() -> impl Strategy<Value = (usize, usize, Vec<usize>, Vec<usize>, Vec<bool>)> {
        (1usize..16, 1usize..16).prop_flat_map(|(w, h)| {
            let n = w * h;
            (
                Just(w),
                Just(h),
                proptest::collection::vec(0usize..7, n),
                proptest::collection::vec(0usize..7, n),
                proptest::collection::vec(any::<bool>(), n),
            )
        })
    }

    proptest! {
        #[test]
        fn accuracy_matches_recount((w, h, p, t, m) in instance()) {
            let tax = carla();
            let (pred, truth) = (static_map(&tax, w, h, &p), static_map(&tax, w, h, &t));
            let mask = InpaintMask::new(w, h, m.clone()).unwrap();
            let mut hit = 0;
            let mut total = 0;
            for y in 0..h {
                for x in 0..w {
                    if mask.get(x, y) {
                        total += 1;
                        if pred.get(x, y) == truth.get(x, y) {
                            hit += 1;
                        }
                    }
                }
            }
            match masked_accuracy(&pred, &truth, &mask) {
                Ok(a) => prop_assert_eq!(a, hit as f64 / total as f64),
                Err(_) => prop_assert_eq!(total, 0),
            }
        }

        #[test]
        fn accuracy_ignores_unmasked_predictions((w, h, p, t, m) in instance(), other in proptest::collection::vec(0usize..7, 225)) {
            let tax = carla();
            let (pred, truth) = (static_map(&tax, w, h, &p), static_map(&tax, w, h, &t));
            let mask = InpaintMask::new(w, h, m).unwrap();
            prop_assume!(mask.count() > 0);
            let mut changed = pred.clone();
            for (i, v) in changed.data_mut().iter_mut().enumerate() {
                if !mask.data()[i] {
                    *v = tax.static_ids()[other[i] % 7];
                }
            }
            prop_assert_eq!(masked_accuracy(&pred, &truth, &mask).unwrap(), masked_accuracy(&changed, &truth, &mask).unwrap());
        }

        #[test]
        fn confusion_rows_and_trace((w, h, p, t, m) in instance()) {
            let tax = carla();
            let (pred, truth) = (static_map(&tax, w, h, &p), static_map(&tax, w, h, &t));
            let mask = InpaintMask::new(w, h, m).unwrap();
            let cm = confusion_matrix([(&pred, &truth, &mask)], &tax).unwrap();
            for k in 0..cm.size() {
                let support = truth
                    .data()
                    .iter()
                    .zip(mask.data())
                    .filter(|&(&l, &m)| m && tax.static_channel(l) == Some(k))
                    .count() as u64;
                prop_assert_eq!(cm.row_sum(k), support);
            }
            for (k, row) in cm.normalized().iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if cm.empty_rows().contains(&k) {
                    prop_assert_eq!(sum, 0.0);
                } else {
                    prop_assert!((sum - 1.0).abs() < 1e-9);
                }
            }
            match masked_accuracy(&pred, &truth, &mask) {
                Ok(a) => prop_assert!((cm.pooled_accuracy().unwrap() - a).abs() < 1e-12),
                Err(_) => prop_assert_eq!(cm.pooled_accuracy(), None),
            }
        }

        #[test]
        fn mean_is_permutation_invariant(mut v in proptest::collection::vec(0.0f64..=1.0, 1..20), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let a = mean(&v).unwrap();
            v.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
            prop_assert!((mean(&v).unwrap() - a).abs() < 1e-12);
        }
    }
}
