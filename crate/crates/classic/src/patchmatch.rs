//! Categorical PatchMatch.
//!
//! Patches are compared by Hamming distance over their labels. A
//! nearest-neighbor field maps every patch overlapping the hole to a patch
//! made only of known static pixels; it is improved by alternating
//! propagation and random search, and the hole is refilled by majority vote
//! of all matched patches covering each pixel.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use seminpaint_core::seed::rng_from_seed;
use seminpaint_core::{ClassTaxonomy, InpaintMask, LabelMap};

use crate::error::{Error, Result};
use crate::nn::inpaint_nn;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: usize,
    pub y: usize,
}

impl Point {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchParams {
    /// Odd side length of the square patches.
    pub patch_size: usize,
    /// Propagation + search passes per vote.
    pub nnf_iters: usize,
    /// Ratio between successive random-search radii.
    pub search_alpha: f64,
    /// First random-search radius; `None` uses the larger image side.
    pub search_radius_start: Option<usize>,
    pub vote_iters: usize,
    pub rng_seed: u64,
}

impl Default for PatchParams {
    fn default() -> Self {
        Self {
            patch_size: 7,
            nnf_iters: 5,
            search_alpha: 0.5,
            search_radius_start: None,
            vote_iters: 3,
            rng_seed: 0,
        }
    }
}

impl PatchParams {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size < 3 || self.patch_size.is_multiple_of(2) {
            return Err(Error::InvalidPatch(format!(
                "patch size {} must be odd and at least 3",
                self.patch_size
            )));
        }
        if self.nnf_iters == 0 || self.vote_iters == 0 {
            return Err(Error::InvalidPatch("iteration counts must be at least 1".into()));
        }
        if !(self.search_alpha > 0.0 && self.search_alpha < 1.0) {
            return Err(Error::InvalidPatch(format!(
                "search alpha {} is not in (0, 1)",
                self.search_alpha
            )));
        }
        if self.search_radius_start == Some(0) {
            return Err(Error::InvalidPatch("search radius must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_patch(c: Point, half: usize, dims: (usize, usize)) -> Result<()> {
    let (w, h) = dims;
    if c.x < half || c.y < half || c.x + half >= w || c.y + half >= h {
        return Err(Error::PatchOutOfBounds {
            center: (c.x, c.y),
            image: dims,
        });
    }
    Ok(())
}

/// Number of positions where the patches around `a` and `b` carry different
/// labels, skipping positions where `a`'s patch is marked in `mask`
/// (unknown, not yet filled). `b`'s patch is expected to be fully known.
pub fn patch_distance(a: Point, b: Point, m: &LabelMap, mask: &InpaintMask, patch_size: usize) -> Result<u32> {
    mask.ensure_dims(m.dims())?;
    let half = patch_size / 2;
    check_patch(a, half, m.dims())?;
    check_patch(b, half, m.dims())?;
    let w = m.width();
    Ok(raw_distance(
        a.y * w + a.x,
        b.y * w + b.x,
        m.data(),
        mask.data(),
        w,
        half,
        u32::MAX,
    ))
}

/// Hamming distance between the patches centered at flat indices `a` and
/// `b`; stops early and returns a value above `bound` once it is exceeded.
#[inline]
fn raw_distance(a: usize, b: usize, labels: &[u8], skip: &[bool], w: usize, half: usize, bound: u32) -> u32 {
    let side = 2 * half + 1;
    let a0 = a - half * w - half;
    let b0 = b - half * w - half;
    let mut d = 0u32;
    for row in 0..side {
        let ra = a0 + row * w;
        let rb = b0 + row * w;
        for k in 0..side {
            if !skip[ra + k] && labels[ra + k] != labels[rb + k] {
                d += 1;
            }
        }
        if d > bound {
            return d;
        }
    }
    d
}

/// Nearest-neighbor field from hole-overlapping patches to known patches.
#[derive(Clone, Debug)]
pub struct NnfField {
    width: usize,
    height: usize,
    half: usize,
    sources: Vec<usize>,
    // flat center index -> position in `sources`
    source_slot: Vec<Option<usize>>,
    valid_target: Vec<bool>,
    target_pool: Vec<usize>,
    targets: Vec<usize>,
    distances: Vec<u32>,
    passes: usize,
    rng: ChaCha8Rng,
}

impl NnfField {
    /// Seeds every source patch with a uniformly drawn valid target.
    ///
    /// Sources are the patch centers whose patch overlaps `hole`; valid
    /// targets are patches containing no `hole` pixel and only static
    /// labels. Distances are measured on `m`, skipping `skip` pixels.
    pub fn random(
        m: &LabelMap,
        hole: &InpaintMask,
        skip: &InpaintMask,
        tax: &ClassTaxonomy,
        params: &PatchParams,
    ) -> Result<Self> {
        params.validate()?;
        hole.ensure_dims(m.dims())?;
        skip.ensure_dims(m.dims())?;
        let (w, h) = m.dims();
        let ps = params.patch_size;
        let half = ps / 2;
        let no_patch = Error::NoSourcePatch {
            image: (w, h),
            patch_size: ps,
        };
        if w < ps || h < ps {
            return Err(no_patch);
        }
        // summed-area tables of hole pixels and of unusable pixels
        let mut hole_sum = vec![0u32; (w + 1) * (h + 1)];
        let mut bad_sum = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let hv = u32::from(hole.data()[i]);
                let bv = u32::from(hole.data()[i] || !tax.is_static(m.data()[i]));
                let s = (y + 1) * (w + 1) + x + 1;
                hole_sum[s] = hv + hole_sum[s - 1] + hole_sum[s - (w + 1)] - hole_sum[s - (w + 1) - 1];
                bad_sum[s] = bv + bad_sum[s - 1] + bad_sum[s - (w + 1)] - bad_sum[s - (w + 1) - 1];
            }
        }
        let window = |t: &[u32], x: usize, y: usize| {
            let (x0, y0, x1, y1) = (x - half, y - half, x + half + 1, y + half + 1);
            t[y1 * (w + 1) + x1] + t[y0 * (w + 1) + x0] - t[y0 * (w + 1) + x1] - t[y1 * (w + 1) + x0]
        };
        let mut sources = Vec::new();
        let mut source_slot = vec![None; w * h];
        let mut valid_target = vec![false; w * h];
        let mut target_pool = Vec::new();
        for y in half..h - half {
            for x in half..w - half {
                let i = y * w + x;
                if window(&hole_sum, x, y) > 0 {
                    source_slot[i] = Some(sources.len());
                    sources.push(i);
                }
                if window(&bad_sum, x, y) == 0 {
                    valid_target[i] = true;
                    target_pool.push(i);
                }
            }
        }
        if target_pool.is_empty() {
            return Err(no_patch);
        }
        let mut rng = rng_from_seed(params.rng_seed);
        let targets: Vec<usize> = sources
            .iter()
            .map(|_| target_pool[rng.gen_range(0..target_pool.len())])
            .collect();
        let mut nnf = Self {
            width: w,
            height: h,
            half,
            sources,
            source_slot,
            valid_target,
            target_pool,
            targets,
            distances: Vec::new(),
            passes: 0,
            rng,
        };
        nnf.refresh(m, skip);
        Ok(nnf)
    }

    /// Recomputes every stored distance, e.g. after the image was refilled.
    pub fn refresh(&mut self, m: &LabelMap, skip: &InpaintMask) {
        self.distances = self
            .sources
            .iter()
            .zip(&self.targets)
            .map(|(&s, &t)| raw_distance(s, t, m.data(), skip.data(), self.width, self.half, u32::MAX))
            .collect();
    }

    /// Sum of stored patch distances.
    pub fn energy(&self) -> u64 {
        self.distances.iter().map(|&d| u64::from(d)).sum()
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn patch_size(&self) -> usize {
        2 * self.half + 1
    }

    /// `(source center, target center, stored distance)` in row-major source order.
    pub fn entries(&self) -> impl Iterator<Item = (Point, Point, u32)> + '_ {
        let p = |i: usize| Point::new(i % self.width, i / self.width);
        self.sources
            .iter()
            .zip(&self.targets)
            .zip(&self.distances)
            .map(move |((&s, &t), &d)| (p(s), p(t), d))
    }

    pub fn is_valid_target(&self, c: Point) -> bool {
        c.x < self.width && c.y < self.height && self.valid_target[c.y * self.width + c.x]
    }

    /// Number of valid target patches.
    pub fn target_count(&self) -> usize {
        self.target_pool.len()
    }

    fn try_candidate(&mut self, slot: usize, cand: usize, m: &LabelMap, skip: &InpaintMask) {
        if !self.valid_target[cand] || cand == self.targets[slot] {
            return;
        }
        let best = self.distances[slot];
        if best == 0 {
            return;
        }
        let d = raw_distance(
            self.sources[slot],
            cand,
            m.data(),
            skip.data(),
            self.width,
            self.half,
            best,
        );
        if d < best {
            self.targets[slot] = cand;
            self.distances[slot] = d;
        }
    }
}

/// One propagation + random-search pass.
///
/// Even passes scan sources forward and borrow offsets from the left and
/// upper neighbors; odd passes scan backward using the right and lower
/// neighbors. Random search samples around the current match with radii
/// `r0 * alpha^k` while the radius is at least one pixel. A candidate is
/// accepted only when strictly better, so the field energy never increases.
pub fn nnf_iterate(nnf: &mut NnfField, m: &LabelMap, mask: &InpaintMask, params: &PatchParams) {
    let (w, h) = (nnf.width, nnf.height);
    debug_assert_eq!(m.dims(), (w, h));
    let half = nnf.half;
    let forward = nnf.passes.is_multiple_of(2);
    let r0 = params.search_radius_start.unwrap_or(w.max(h)) as f64;
    let count = nnf.sources.len();
    for step in 0..count {
        let slot = if forward { step } else { count - 1 - step };
        let s = nnf.sources[slot];
        let (sx, sy) = (s % w, s / w);
        // propagation
        let neighbors: [Option<usize>; 2] = if forward {
            [(sx > 0).then(|| s - 1), (sy > 0).then(|| s - w)]
        } else {
            [(sx + 1 < w).then(|| s + 1), (sy + 1 < h).then(|| s + w)]
        };
        for nb in neighbors.into_iter().flatten() {
            let Some(nslot) = nnf.source_slot[nb] else {
                continue;
            };
            let nt = nnf.targets[nslot];
            let (tx, ty) = (
                (nt % w) as i64 + sx as i64 - (nb % w) as i64,
                (nt / w) as i64 + sy as i64 - (nb / w) as i64,
            );
            if tx < half as i64 || ty < half as i64 || tx >= (w - half) as i64 || ty >= (h - half) as i64 {
                continue;
            }
            nnf.try_candidate(slot, ty as usize * w + tx as usize, m, mask);
        }
        // random search
        let mut radius = r0;
        while radius >= 1.0 {
            let r = radius as i64;
            let t = nnf.targets[slot];
            let (tx, ty) = ((t % w) as i64, (t / w) as i64);
            let cx = (tx + nnf.rng.gen_range(-r..=r)).clamp(half as i64, (w - half - 1) as i64);
            let cy = (ty + nnf.rng.gen_range(-r..=r)).clamp(half as i64, (h - half - 1) as i64);
            nnf.try_candidate(slot, cy as usize * w + cx as usize, m, mask);
            radius *= params.search_alpha;
        }
    }
    nnf.passes += 1;
}

/// Majority vote of all matched patches covering each hole pixel.
fn vote(nnf: &NnfField, m: &LabelMap, hole: &InpaintMask, tax: &ClassTaxonomy) -> LabelMap {
    let (w, h) = (nnf.width, nnf.height);
    let half = nnf.half as i64;
    let mut out = m.clone();
    let mut counts = vec![0u32; tax.num_classes()];
    for y in 0..h {
        for x in 0..w {
            if !hole.get(x, y) {
                continue;
            }
            counts.iter_mut().for_each(|c| *c = 0);
            for dy in -half..=half {
                for dx in -half..=half {
                    let (px, py) = (x as i64 + dx, y as i64 + dy);
                    if px < 0 || py < 0 || px >= w as i64 || py >= h as i64 {
                        continue;
                    }
                    let Some(slot) = nnf.source_slot[py as usize * w + px as usize] else {
                        continue;
                    };
                    let t = nnf.targets[slot];
                    let (qx, qy) = ((t % w) as i64 - dx, (t / w) as i64 - dy);
                    counts[usize::from(m.get(qx as usize, qy as usize))] += 1;
                }
            }
            let mut best = 0;
            for c in 1..counts.len() {
                if counts[c] > counts[best] {
                    best = c;
                }
            }
            if counts[best] > 0 {
                out.set(x, y, best as u8);
            }
        }
    }
    out
}

/// PatchMatch inpainting: nearest-neighbor initialization, then
/// `vote_iters` rounds of `nnf_iters` field passes followed by a vote.
pub fn inpaint_patchmatch(
    m: &LabelMap,
    mask: &InpaintMask,
    tax: &ClassTaxonomy,
    params: &PatchParams,
) -> Result<LabelMap> {
    params.validate()?;
    crate::check_inputs(m, mask)?;
    if mask.is_all_clear() {
        return Ok(m.clone());
    }
    let mut filled = inpaint_nn(m, mask, tax)?;
    let known = InpaintMask::empty(m.width(), m.height());
    let mut nnf = NnfField::random(&filled, mask, &known, tax, params)?;
    for round in 0..params.vote_iters {
        if round > 0 {
            nnf.refresh(&filled, &known);
        }
        for _ in 0..params.nnf_iters {
            nnf_iterate(&mut nnf, &filled, &known, params);
        }
        filled = vote(&nnf, &filled, mask, tax);
    }
    Ok(filled)
}
