use std::f64::consts::FRAC_1_SQRT_2;

use rayon::prelude::*;

use super::{epipolar_plane, pixel_distance, sample_epipolar, BitSet, SampleConfig, DEFAULT_BASELINE_EPS};
use crate::error::{Error, Result};
use crate::geometry::{relative_pose, CameraPose, ConventionMode, GridSpec, PixelCoord, RelativePose};

/// Mask construction parameters at feature (latent) resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskParams {
    pub grid: GridSpec,
    /// Samples per epipolar curve.
    pub k: usize,
    /// Distance threshold in feature pixels; half a cell diagonal by default.
    pub tau: f64,
    /// Baselines below this are handled as pure rotation.
    pub baseline_eps: f64,
    pub wrap_u: bool,
}

impl MaskParams {
    pub const DEFAULT_K: usize = 250;
    pub const DEFAULT_TAU: f64 = FRAC_1_SQRT_2;

    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            k: Self::DEFAULT_K,
            tau: Self::DEFAULT_TAU,
            baseline_eps: DEFAULT_BASELINE_EPS,
            wrap_u: true,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::OutOfRange("K must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::OutOfRange(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }

    pub fn sample_config(&self) -> SampleConfig {
        SampleConfig {
            k: self.k,
            grid: self.grid,
            baseline_eps: self.baseline_eps,
            mode: ConventionMode::DefaultLatitude,
        }
    }

    /// Packed size of one query frame's mask over `frames` key frames.
    pub fn bytes_per_query_frame(&self, frames: usize) -> u64 {
        let hw = self.grid.pixel_count() as u64;
        (hw * frames as u64 * hw).div_ceil(8)
    }
}

/// Binary attention mask of one query frame, shaped
/// `(query pixel, key frame, key pixel)` with both pixel axes row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EpipolarMaskTensor {
    query_frame: usize,
    frames: usize,
    params: MaskParams,
    bits: BitSet,
}

impl EpipolarMaskTensor {
    pub fn from_parts(query_frame: usize, frames: usize, params: MaskParams, bits: BitSet) -> Result<Self> {
        let hw = params.grid.pixel_count();
        if bits.len() != hw * frames * hw {
            return Err(Error::ShapeMismatch(format!(
                "expected {} bits, got {}",
                hw * frames * hw,
                bits.len()
            )));
        }
        Ok(Self {
            query_frame,
            frames,
            params,
            bits,
        })
    }

    pub fn query_frame(&self) -> usize {
        self.query_frame
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn params(&self) -> &MaskParams {
        &self.params
    }

    pub fn bits(&self) -> &BitSet {
        &self.bits
    }

    /// `h·w`
    pub fn pixels(&self) -> usize {
        self.params.grid.pixel_count()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.pixels(), self.frames, self.pixels())
    }

    pub fn bit_index(&self, query: usize, frame: usize, key: usize) -> usize {
        (query * self.frames + frame) * self.pixels() + key
    }

    pub fn get(&self, query: usize, frame: usize, key: usize) -> bool {
        self.bits.get(self.bit_index(query, frame, key))
    }

    /// Set bits in the `(query, frame)` slice.
    pub fn slice_count(&self, query: usize, frame: usize) -> usize {
        self.bits.count_range(self.bit_index(query, frame, 0), self.pixels())
    }

    pub fn slice(&self, query: usize, frame: usize) -> BitSet {
        let mut out = BitSet::new(self.pixels());
        let base = self.bit_index(query, frame, 0);
        for key in 0..self.pixels() {
            if self.bits.get(base + key) {
                out.set(key);
            }
        }
        out
    }

    /// `(query, frame)` slices without a single set bit.
    pub fn empty_slices(&self) -> Vec<(usize, usize)> {
        (0..self.pixels())
            .flat_map(|q| (0..self.frames).map(move |f| (q, f)))
            .filter(|&(q, f)| self.slice_count(q, f) == 0)
            .collect()
    }

    /// Fraction of set bits.
    pub fn density(&self) -> f64 {
        self.bits.count_ones() as f64 / self.bits.len() as f64
    }

    /// Row `query` flattened over `(frame, key)`, as used by attention.
    pub fn row(&self, query: usize) -> impl Iterator<Item = bool> + '_ {
        let base = self.bit_index(query, 0, 0);
        (0..self.frames * self.pixels()).map(move |c| self.bits.get(base + c))
    }
}

/// Sets every pixel center within `tau` of `c`. Equivalent to testing every
/// pixel of the grid, but only visits the bounding box of the disk.
pub fn rasterize_point(c: PixelCoord, grid: GridSpec, tau: f64, wrap_u: bool, out: &mut BitSet) {
    let w = grid.width() as i64;
    let h = grid.height() as i64;
    let row_lo = ((c.v - tau).ceil() as i64).max(0);
    let row_hi = ((c.v + tau).floor() as i64).min(h - 1);
    if row_lo > row_hi {
        return;
    }
    let mut col_lo = (c.u - tau).ceil() as i64;
    let mut col_hi = (c.u + tau).floor() as i64;
    if wrap_u {
        if col_hi - col_lo + 1 >= w {
            col_lo = 0;
            col_hi = w - 1;
        }
    } else {
        col_lo = col_lo.max(0);
        col_hi = col_hi.min(w - 1);
    }
    for row in row_lo..=row_hi {
        for col in col_lo..=col_hi {
            let col = col.rem_euclid(w);
            let center = PixelCoord {
                u: col as f64,
                v: row as f64,
            };
            if pixel_distance(center, c, grid, wrap_u) <= tau {
                out.set(grid.index(col as u32, row as u32));
            }
        }
    }
}

/// Key-pixel bits of one `(query pixel, key frame)` pair.
pub(crate) fn slice_bits(rel: &RelativePose, query: PixelCoord, params: &MaskParams) -> BitSet {
    let grid = params.grid;
    let samples = sample_epipolar(&epipolar_plane(rel, query, grid), rel, &params.sample_config());
    let mut bits = BitSet::new(grid.pixel_count());
    let mut last = None;
    for c in samples.points {
        if last == Some(c) {
            continue;
        }
        rasterize_point(c, grid, params.tau, params.wrap_u, &mut bits);
        last = Some(c);
    }
    bits
}

/// Relative poses from `query_frame` to every frame; the self pair is the
/// exact identity.
pub(crate) fn relative_poses_from(poses: &[CameraPose], query_frame: usize) -> Vec<RelativePose> {
    (0..poses.len())
        .map(|j| {
            if j == query_frame {
                RelativePose::identity()
            } else {
                relative_pose(&poses[query_frame], &poses[j])
            }
        })
        .collect()
}

/// Epipolar attention mask of frame `query_frame` against all `N` frames.
///
/// Bit `(p, j, q)` is set iff key pixel `q` of frame `j` lies within `tau`
/// of one of the `K` curve samples of query pixel `p`. Output does not
/// depend on the rayon thread count.
pub fn build_mask(poses: &[CameraPose], params: &MaskParams, query_frame: usize) -> Result<EpipolarMaskTensor> {
    params.validate()?;
    let n = poses.len();
    if n == 0 {
        return Err(Error::OutOfRange("at least one pose is required".into()));
    }
    if query_frame >= n {
        return Err(Error::OutOfRange(format!("query frame {query_frame} of {n}")));
    }
    let grid = params.grid;
    let hw = grid.pixel_count();
    let rels = relative_poses_from(poses, query_frame);

    let slices: Vec<BitSet> = (0..hw * n)
        .into_par_iter()
        .map(|item| slice_bits(&rels[item % n], grid.center(item / n), params))
        .collect();

    let mut bits = BitSet::new(hw * n * hw);
    for (item, slice) in slices.iter().enumerate() {
        let base = item * hw;
        for key in slice.iter_ones() {
            bits.set(base + key);
        }
    }
    EpipolarMaskTensor::from_parts(query_frame, n, *params, bits)
}

/// `|a ∧ b| / |a ∨ b|`, 1 when both are empty.
pub fn mask_jaccard(a: &EpipolarMaskTensor, b: &EpipolarMaskTensor) -> Result<f64> {
    if a.shape() != b.shape() || a.query_frame != b.query_frame || a.params.grid != b.params.grid {
        return Err(Error::ShapeMismatch(format!(
            "{:?} frame {} vs {:?} frame {}",
            a.shape(),
            a.query_frame,
            b.shape(),
            b.query_frame
        )));
    }
    let union = a.bits.or_count(&b.bits);
    if union == 0 {
        return Ok(1.0);
    }
    Ok(a.bits.and_count(&b.bits) as f64 / union as f64)
}
