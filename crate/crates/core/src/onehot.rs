//! One-hot encoding of label maps and argmax hardening of soft outputs.

use crate::error::{Error, Result};
use crate::labelmap::{ClassId, LabelMap};
use crate::taxonomy::ClassTaxonomy;

/// A `channels x height x width` volume stored channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTensor<T> {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Copy> ChannelTensor<T> {
    /// # Panics
    /// If `data.len() != channels * height * width`.
    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), channels * height * width, "tensor shape mismatch");
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: T) -> Self {
        Self::from_vec(channels, height, width, vec![value; channels * height * width])
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> T {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, x: usize, y: usize, v: T) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn plane(&self, c: usize) -> &[T] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }
}

/// Which channel set a one-hot volume uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelSpace {
    /// `|C|` channels, channel index = class id.
    Full,
    /// `|S|` channels, channel index = position in [`ClassTaxonomy::static_ids`].
    Static,
}

impl ChannelSpace {
    pub fn channels(self, tax: &ClassTaxonomy) -> usize {
        match self {
            ChannelSpace::Full => tax.num_classes(),
            ChannelSpace::Static => tax.num_static(),
        }
    }

    pub fn channel_of(self, tax: &ClassTaxonomy, id: ClassId) -> Option<usize> {
        match self {
            ChannelSpace::Full => (usize::from(id) < tax.num_classes()).then_some(usize::from(id)),
            ChannelSpace::Static => tax.static_channel(id),
        }
    }

    pub fn class_of(self, tax: &ClassTaxonomy, channel: usize) -> ClassId {
        match self {
            ChannelSpace::Full => channel as ClassId,
            ChannelSpace::Static => tax.static_ids()[channel],
        }
    }
}

/// Encodes `m` as a `{0,1}` volume with exactly one active channel per pixel.
pub fn encode_one_hot<T: Copy + From<u8>>(
    m: &LabelMap,
    tax: &ClassTaxonomy,
    space: ChannelSpace,
) -> Result<ChannelTensor<T>> {
    let channels = space.channels(tax);
    let (w, h) = m.dims();
    let mut t = ChannelTensor::filled(channels, h, w, T::from(0));
    for y in 0..h {
        for x in 0..w {
            let label = m.get(x, y);
            let c = space
                .channel_of(tax, label)
                .ok_or(Error::LabelOutOfRange { label, x, y, channels })?;
            t.set(c, x, y, T::from(1));
        }
    }
    Ok(t)
}

/// Per-pixel index of the largest channel; ties go to the lowest index.
///
/// The result holds channel indices; map them through
/// [`ChannelSpace::class_of`] (or use [`decode_to_classes`]) for `|S|` volumes.
///
/// # Panics
/// If the tensor has no channels or more than 256.
pub fn decode_argmax<T: Copy + PartialOrd>(t: &ChannelTensor<T>) -> LabelMap {
    assert!(t.channels() >= 1 && t.channels() <= 256, "channel count out of range");
    let (w, h) = (t.width(), t.height());
    let n = w * h;
    let mut best = t.plane(0).to_vec();
    let mut label = vec![0u8; n];
    for c in 1..t.channels() {
        for (i, &v) in t.plane(c).iter().enumerate() {
            if v > best[i] {
                best[i] = v;
                label[i] = c as u8;
            }
        }
    }
    LabelMap::new(w, h, label).expect("tensor dims are non-zero")
}

/// [`decode_argmax`] followed by the channel-to-class mapping of `space`.
pub fn decode_to_classes<T: Copy + PartialOrd>(
    t: &ChannelTensor<T>,
    tax: &ClassTaxonomy,
    space: ChannelSpace,
) -> LabelMap {
    let mut m = decode_argmax(t);
    for l in m.data_mut() {
        *l = space.class_of(tax, usize::from(*l));
    }
    m
}
