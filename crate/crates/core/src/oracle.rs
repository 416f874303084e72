//! Brute-force checks of the analytic epipolar machinery.
//!
//! The ray oracle projects points along the query ray at many depths and
//! rasterizes them itself. It only touches pixel/direction transforms and
//! pose algebra, never the plane, sampling or closed-form curve code.

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::epipolar::{self, BitSet, MaskParams, DEFAULT_BASELINE_EPS};
use crate::error::{Error, Result};
use crate::geometry::{direction_pixel, pixel_direction, CameraPose, GridSpec, PixelCoord, RelativePose, UnitVec3};

/// Log-uniform depths along the query ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthSweep {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for DepthSweep {
    fn default() -> Self {
        Self {
            min: 1e-2,
            max: 1e3,
            count: 10_000,
        }
    }
}

impl DepthSweep {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.min < self.max && self.max.is_finite()) || self.count < 2 {
            return Err(Error::OutOfRange(format!("depth sweep {self:?}")));
        }
        Ok(())
    }

    pub fn depth(&self, k: usize) -> f64 {
        let t = k as f64 / (self.count - 1) as f64;
        self.min * (self.max / self.min).powf(t)
    }

    pub fn depths(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.depth(k))
    }
}

/// Frame-j pixels of `X_j = R (λ dir(query)) + t` over the sweep.
pub fn ray_projection_oracle(
    rel: &RelativePose,
    query: PixelCoord,
    grid: GridSpec,
    sweep: &DepthSweep,
) -> Result<Vec<PixelCoord>> {
    sweep.validate()?;
    if rel.baseline_norm() < DEFAULT_BASELINE_EPS {
        return Err(Error::ZeroBaseline(rel.baseline_norm()));
    }
    let dir = pixel_direction(query, grid);
    Ok(sweep
        .depths()
        .map(|depth| project_at_depth(rel, &dir, depth, grid))
        .collect())
}

fn project_at_depth(rel: &RelativePose, dir: &UnitVec3, depth: f64, grid: GridSpec) -> PixelCoord {
    let x = rel.rotation().apply(&(dir.as_vec() * depth)) + rel.translation();
    direction_pixel(&UnitVec3::normalize(x).expect("point off the camera center"), grid)
}

/// Agreement between the oracle locus and the analytic curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveResidual {
    /// `max |n̂ · dir|` over oracle pixels.
    pub plane: f64,
    /// Max feature-pixel distance from an oracle pixel to the sampled curve.
    pub distance: f64,
}

pub fn verify_curve(
    rel: &RelativePose,
    query: PixelCoord,
    params: &MaskParams,
    sweep: &DepthSweep,
) -> Result<CurveResidual> {
    let grid = params.grid;
    let locus = ray_projection_oracle(rel, query, grid, sweep)?;
    let plane = epipolar::epipolar_plane(rel, query, grid);
    if plane.degenerate {
        return Err(Error::DegeneratePlane(format!("query ({}, {})", query.u, query.v)));
    }
    let samples = epipolar::sample_epipolar(&plane, rel, &params.sample_config());
    let mut out = CurveResidual {
        plane: 0.0,
        distance: 0.0,
    };
    for p in locus {
        out.plane = out.plane.max(plane.residual(&pixel_direction(p, grid)));
        out.distance = out
            .distance
            .max(epipolar::min_distance(p, &samples, grid, params.wrap_u));
    }
    Ok(out)
}

fn wrapped_distance(a: PixelCoord, b: PixelCoord, width: f64, wrap_u: bool) -> f64 {
    let du = (a.u - b.u).abs();
    let du = if wrap_u { du.min(width - du) } else { du };
    (du * du + (a.v - b.v) * (a.v - b.v)).sqrt()
}

/// Marks pixel centers within `tau` of `c`, tagging first hits with `tag`.
fn mark_disk(c: PixelCoord, tag: f64, grid: GridSpec, tau: f64, wrap_u: bool, hits: &mut [Option<f64>]) {
    let w = grid.width() as i64;
    let h = grid.height() as i64;
    let r = tau.ceil() as i64 + 1;
    let (cu, cv) = (c.u.round() as i64, c.v.round() as i64);
    let cols: Vec<i64> = if wrap_u && 2 * r + 1 >= w {
        (0..w).collect()
    } else {
        (cu - r..=cu + r).collect()
    };
    for row in (cv - r).max(0)..=(cv + r).min(h - 1) {
        for &col in &cols {
            if !wrap_u && !(0..w).contains(&col) {
                continue;
            }
            let col = col.rem_euclid(w);
            let center = PixelCoord {
                u: col as f64,
                v: row as f64,
            };
            let idx = (row * w + col) as usize;
            if hits[idx].is_none() && wrapped_distance(center, c, w as f64, wrap_u) <= tau {
                hits[idx] = Some(tag);
            }
        }
    }
}

/// Oracle key-pixel set of one `(pose pair, query)` case; each hit carries
/// the depth that produced it (`0` for the pure-rotation disk).
pub fn oracle_slice(
    rel: &RelativePose,
    query: PixelCoord,
    params: &MaskParams,
    sweep: &DepthSweep,
) -> Result<Vec<Option<f64>>> {
    let grid = params.grid;
    let mut hits = vec![None; grid.pixel_count()];
    if rel.baseline_norm() < params.baseline_eps {
        let d = rel.rotation().apply(pixel_direction(query, grid).as_vec());
        let c = direction_pixel(&UnitVec3::normalize(d).expect("unit"), grid);
        mark_disk(c, 0.0, grid, params.tau, params.wrap_u, &mut hits);
        return Ok(hits);
    }
    let locus = ray_projection_oracle(rel, query, grid, sweep)?;
    for (k, p) in locus.into_iter().enumerate() {
        mark_disk(p, sweep.depth(k), grid, params.tau, params.wrap_u, &mut hits);
    }
    Ok(hits)
}

/// A key pixel the oracle reaches but the analytic mask does not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub frame_i: usize,
    pub frame_j: usize,
    pub query: PixelCoord,
    pub key: PixelCoord,
    pub depth: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "violation frames={}->{} query=({},{}) key=({},{}) depth={:.17e}",
            self.frame_i, self.frame_j, self.query.u, self.query.v, self.key.u, self.key.v, self.depth
        )
    }
}

/// Outcome of a subset check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleReport {
    pub cases: usize,
    pub max_curve_residual: f64,
    pub oracle_bits: usize,
    pub analytic_bits: usize,
    /// Analytic `(query, key frame)` slices without a single bit.
    pub empty_slices: usize,
    /// Sorted by `(frame_i, frame_j, query, key)`.
    pub violations: Vec<Violation>,
    pub runtime: Duration,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn sort(&mut self) {
        self.violations.sort_by(|a, b| {
            (a.frame_i, a.frame_j, a.query.v, a.query.u, a.key.v, a.key.u)
                .partial_cmp(&(b.frame_i, b.frame_j, b.query.v, b.query.u, b.key.v, b.key.u))
                .expect("finite")
        });
    }

    fn merge(mut self, other: Self) -> Self {
        self.cases += other.cases;
        self.max_curve_residual = self.max_curve_residual.max(other.max_curve_residual);
        self.oracle_bits += other.oracle_bits;
        self.analytic_bits += other.analytic_bits;
        self.empty_slices += other.empty_slices;
        self.violations.extend(other.violations);
        self
    }

    /// Line-delimited text form.
    pub fn to_lines(&self) -> Vec<String> {
        let mut lines = vec![format!(
            "cases={} max_curve_residual={:e} oracle_bits={} analytic_bits={} empty_slices={} violations={} runtime_s={:.3}",
            self.cases,
            self.max_curve_residual,
            self.oracle_bits,
            self.analytic_bits,
            self.empty_slices,
            self.violations.len(),
            self.runtime.as_secs_f64()
        )];
        lines.extend(self.violations.iter().map(|v| v.to_string()));
        lines
    }
}

/// Checks one `(pose pair, query pixel)` case: the oracle slice must be a
/// subset of the analytic slice.
pub fn check_case(
    rel: &RelativePose,
    frames: (usize, usize),
    query: PixelCoord,
    params: &MaskParams,
    sweep: &DepthSweep,
) -> Result<OracleReport> {
    let analytic = epipolar::mask::slice_bits(rel, query, params);
    compare(rel, frames, query, params, sweep, &analytic)
}

fn compare(
    rel: &RelativePose,
    (frame_i, frame_j): (usize, usize),
    query: PixelCoord,
    params: &MaskParams,
    sweep: &DepthSweep,
    analytic: &BitSet,
) -> Result<OracleReport> {
    let grid = params.grid;
    let hits = oracle_slice(rel, query, params, sweep)?;
    let mut report = OracleReport {
        cases: 1,
        analytic_bits: analytic.count_ones(),
        empty_slices: usize::from(analytic.count_ones() == 0),
        ..Default::default()
    };
    if rel.baseline_norm() >= params.baseline_eps {
        let plane = epipolar::epipolar_plane(rel, query, grid);
        if !plane.degenerate {
            let dir = pixel_direction(query, grid);
            let n = plane.normal / plane.normal.norm();
            // Residual of the oracle locus in direction space, no pixel
            // round trip involved.
            for depth in sweep.depths() {
                let x = rel.rotation().apply(&(dir.as_vec() * depth)) + rel.translation();
                report.max_curve_residual = report.max_curve_residual.max(n.dot(&x.normalize()).abs());
            }
        }
    }
    for (idx, hit) in hits.iter().enumerate() {
        if let Some(depth) = hit {
            report.oracle_bits += 1;
            if !analytic.get(idx) {
                report.violations.push(Violation {
                    frame_i,
                    frame_j,
                    query,
                    key: grid.center(idx),
                    depth: *depth,
                });
            }
        }
    }
    Ok(report)
}

/// Full-mask subset check of query frame `i` against every key frame.
pub fn verify_mask_subset(
    poses: &[CameraPose],
    params: &MaskParams,
    i: usize,
    sweep: &DepthSweep,
) -> Result<OracleReport> {
    let start = Instant::now();
    let mask = epipolar::build_mask(poses, params, i)?;
    let rels = epipolar::mask::relative_poses_from(poses, i);
    let grid = params.grid;
    let n = poses.len();
    let reports = (0..grid.pixel_count() * n)
        .into_par_iter()
        .map(|item| {
            let (p, j) = (item / n, item % n);
            compare(&rels[j], (i, j), grid.center(p), params, sweep, &mask.slice(p, j))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = reports.into_iter().fold(OracleReport::default(), OracleReport::merge);
    report.sort();
    report.runtime = start.elapsed();
    Ok(report)
}

/// Runs [`check_case`] over many independent cases and merges the reports.
pub fn check_cases(
    cases: &[(RelativePose, PixelCoord)],
    params: &MaskParams,
    sweep: &DepthSweep,
) -> Result<OracleReport> {
    let start = Instant::now();
    let reports = cases
        .par_iter()
        .enumerate()
        .map(|(k, (rel, q))| check_case(rel, (k, k), *q, params, sweep))
        .collect::<Result<Vec<_>>>()?;
    let mut report = reports.into_iter().fold(OracleReport::default(), OracleReport::merge);
    report.sort();
    report.runtime = start.elapsed();
    Ok(report)
}
