use crate::error::{Error, Result};
use crate::taxonomy::ClassTaxonomy;

/// Integer id of a class inside a taxonomy (or a raw source-dataset id before remapping).
pub type ClassId = u8;

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::BufferSize { width, height, len });
    }
    Ok(())
}

/// A `width x height` grid of class ids stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    data: Vec<ClassId>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, data: Vec<ClassId>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self { width, height, data })
    }

    /// A map with every pixel set to `label`.
    ///
    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: usize, height: usize, label: ClassId) -> Self {
        assert!(width > 0 && height > 0, "label map must be non-empty");
        Self {
            width,
            height,
            data: vec![label; width * height],
        }
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> ClassId) -> Self {
        assert!(width > 0 && height > 0, "label map must be non-empty");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> ClassId {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: ClassId) {
        self.data[y * self.width + x] = label;
    }

    pub fn data(&self) -> &[ClassId] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [ClassId] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<ClassId> {
        self.data
    }

    /// Copies the `width x height` window whose top-left corner is `(x0, y0)`.
    ///
    /// # Panics
    /// If the window leaves the image or is empty.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> LabelMap {
        assert!(x0 + width <= self.width && y0 + height <= self.height);
        LabelMap::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y))
    }

    /// Checks every id against the taxonomy.
    pub fn validate(&self, tax: &ClassTaxonomy) -> Result<()> {
        let n = tax.num_classes();
        match self.data.iter().position(|&l| usize::from(l) >= n) {
            None => Ok(()),
            Some(i) => Err(Error::LabelOutOfRange {
                label: self.data[i],
                x: i % self.width,
                y: i / self.width,
                channels: n,
            }),
        }
    }

    /// True when every pixel belongs to the static set of `tax`.
    pub fn is_static_only(&self, tax: &ClassTaxonomy) -> bool {
        self.data.iter().all(|&l| tax.is_static(l))
    }

    pub fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

/// Binary grid marking the pixels to reconstruct (`true` = reconstruct).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InpaintMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl InpaintMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self { width, height, data })
    }

    /// An all-zero mask.
    ///
    /// # Panics
    /// If either dimension is zero.
    pub fn empty(width: usize, height: usize) -> Self {
        Self::from_fn(width, height, |_, _| false)
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "mask must be non-empty");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    /// Number of pixels marked for reconstruction.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&m| m).count()
    }

    pub fn is_all_clear(&self) -> bool {
        !self.data.iter().any(|&m| m)
    }

    /// At least one pixel is left as context.
    pub fn has_context(&self) -> bool {
        self.data.iter().any(|&m| !m)
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> InpaintMask {
        assert!(x0 + width <= self.width && y0 + height <= self.height);
        InpaintMask::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y))
    }

    pub fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

/// The same scene with and without dynamic objects, plus the mask of the objects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairedSample {
    pub id: String,
    pub dynamic_frame: LabelMap,
    pub static_frame: LabelMap,
    pub mask: InpaintMask,
}

impl PairedSample {
    pub fn new(
        id: impl Into<String>,
        dynamic_frame: LabelMap,
        static_frame: LabelMap,
        mask: InpaintMask,
    ) -> Result<Self> {
        let dims = dynamic_frame.dims();
        static_frame.ensure_dims(dims)?;
        mask.ensure_dims(dims)?;
        Ok(Self {
            id: id.into(),
            dynamic_frame,
            static_frame,
            mask,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dynamic_frame.dims()
    }
}
