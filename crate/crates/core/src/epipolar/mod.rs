//! Spherical epipolar geometry between two panoramic views.
//!
//! The epipolar plane of a query pixel is kept in homogeneous form (its
//! normal in the target camera frame). Curves are sampled directly on the
//! great circle, so vertical circles and `n_z = 0` planes need no special
//! handling. The ratio form `(A', B')` and the `v(u)` curve are
//! available for cross-checking only.

mod bits;
pub(crate) mod mask;

pub use bits::BitSet;
pub use mask::{build_mask, mask_jaccard, rasterize_point, EpipolarMaskTensor, MaskParams};

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{
    direction_to_pixel, pixel_to_spherical, spherical_to_direction, wrap, ConventionMode, GridSpec, PixelCoord,
    RelativePose, UnitVec3, Vec3,
};

/// Planes with a normal shorter than this are degenerate.
pub const NORMAL_EPS: f64 = 1e-12;
/// Baselines shorter than this (scene units) are treated as pure rotation.
pub const DEFAULT_BASELINE_EPS: f64 = 1e-8;

/// Sample coordinates are snapped to multiples of 2^-32 px. Pose algebra on
/// rescaled or reordered inputs differs by a few ulps; snapping keeps those
/// differences from reaching threshold comparisons.
const SNAP: f64 = 4_294_967_296.0;

/// Maps a camera-i point into camera-j coordinates: `R p + t`.
pub fn project_point(rel: &RelativePose, p: &UnitVec3) -> Vec3 {
    rel.rotation().apply(p.as_vec()) + rel.translation()
}

/// Camera-i center seen from camera j.
pub fn epipole(rel: &RelativePose) -> Vec3 {
    *rel.translation()
}

/// Where a plane came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSource {
    pub frame: Option<usize>,
    pub query: PixelCoord,
}

/// Plane through the camera-j origin spanned by the epipole and the
/// projected query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpipolarPlane {
    pub normal: Vec3,
    pub degenerate: bool,
    /// `o_{i→j}`
    pub epipole: Vec3,
    /// `p_{i→j}`
    pub point: Vec3,
    pub source: Option<PlaneSource>,
}

impl EpipolarPlane {
    /// `n = o × p`.
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN counts as degenerate
    pub fn from_generators(epipole: Vec3, point: Vec3) -> Self {
        let normal = epipole.cross(&point);
        Self {
            normal,
            degenerate: !(normal.norm() >= NORMAL_EPS),
            epipole,
            point,
            source: None,
        }
    }

    pub fn with_frame(mut self, frame: usize) -> Self {
        if let Some(s) = self.source.as_mut() {
            s.frame = Some(frame);
        }
        self
    }

    /// Unit normal, `None` when degenerate.
    pub fn unit_normal(&self) -> Option<Vec3> {
        (!self.degenerate).then(|| self.normal / self.normal.norm())
    }

    /// `|n̂ · d|`, or `NaN` for a degenerate plane.
    pub fn residual(&self, d: &UnitVec3) -> f64 {
        self.unit_normal().map_or(f64::NAN, |n| n.dot(d.as_vec()).abs())
    }
}

pub fn epipolar_plane(rel: &RelativePose, query: PixelCoord, grid: GridSpec) -> EpipolarPlane {
    let dir = crate::geometry::pixel_direction(query, grid);
    let mut plane = EpipolarPlane::from_generators(epipole(rel), project_point(rel, &dir));
    plane.source = Some(PlaneSource { frame: None, query });
    plane
}

/// `(A', B') = (n_x / n_z, n_y / n_z)`: the literal plane coefficients with
/// `C` factored out.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn plane_coeffs_literal(plane: &EpipolarPlane) -> Result<(f64, f64)> {
    let n = &plane.normal;
    if !(n.z.abs() >= NORMAL_EPS) {
        return Err(Error::DegenerateDivision(n.z));
    }
    Ok((n.x / n.z, n.y / n.z))
}

/// Closed-form curve `v(u)` in the literal pixel convention, reduced into
/// `[0, H)`.
pub fn epipolar_v_of_u(a: f64, b: f64, u: f64, grid: GridSpec) -> Result<f64> {
    if b == 0.0 {
        return Err(Error::VerticalGreatCircle);
    }
    let h = grid.height() as f64;
    let phi = TAU * u / grid.width() as f64;
    let v = -(h / PI) * ((a * phi.sin() + phi.cos()) / b).atan();
    Ok(wrap(v, h))
}

/// K pixel positions on the epipolar curve of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct EpipolarSamples {
    pub points: Vec<PixelCoord>,
}

impl EpipolarSamples {
    pub fn k(&self) -> usize {
        self.points.len()
    }
}

/// Controls [`sample_epipolar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleConfig {
    pub k: usize,
    pub grid: GridSpec,
    pub baseline_eps: f64,
    pub mode: ConventionMode,
}

impl SampleConfig {
    pub fn new(k: usize, grid: GridSpec) -> Self {
        Self {
            k,
            grid,
            baseline_eps: DEFAULT_BASELINE_EPS,
            mode: ConventionMode::DefaultLatitude,
        }
    }
}

/// How a sample set was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    GreatCircle,
    /// Baseline below threshold: the exact rotated correspondence.
    PureRotation,
    /// Query lies on the baseline: the epipole.
    Epipole,
}

/// Arc-uniform samples `c_k = dir⁻¹(cos(2πk/K) e₁ + sin(2πk/K) e₂)` on the
/// great circle, with `e₁` the epipole direction projected into the plane.
pub fn sample_epipolar(plane: &EpipolarPlane, rel: &RelativePose, cfg: &SampleConfig) -> EpipolarSamples {
    sample_epipolar_kind(plane, rel, cfg).0
}

pub fn sample_epipolar_kind(
    plane: &EpipolarPlane,
    rel: &RelativePose,
    cfg: &SampleConfig,
) -> (EpipolarSamples, SampleKind) {
    assert!(cfg.k >= 1, "K must be at least 1");
    let to_pixel = |d: &UnitVec3| snap(direction_to_pixel(d, cfg.grid, cfg.mode), cfg.grid);

    if rel.baseline_norm() < cfg.baseline_eps {
        let rotated = match plane.source {
            Some(src) => {
                let d = spherical_to_direction(
                    pixel_to_spherical(src.query, cfg.grid, ConventionMode::DefaultLatitude),
                    cfg.mode,
                );
                rel.rotation().apply(d.as_vec())
            }
            None => plane.point - plane.epipole,
        };
        let c = to_pixel(&unit(rotated));
        return (EpipolarSamples { points: vec![c; cfg.k] }, SampleKind::PureRotation);
    }
    if plane.degenerate {
        let c = to_pixel(&unit(plane.epipole));
        return (EpipolarSamples { points: vec![c; cfg.k] }, SampleKind::Epipole);
    }

    let n = plane.normal / plane.normal.norm();
    let o = plane.epipole;
    let e1 = unit(o - n * n.dot(&o)).into_inner();
    let e2 = n.cross(&e1);
    let points = (0..cfg.k)
        .map(|k| {
            let (s, c) = (TAU * k as f64 / cfg.k as f64).sin_cos();
            to_pixel(&unit(e1 * c + e2 * s))
        })
        .collect();
    (EpipolarSamples { points }, SampleKind::GreatCircle)
}

fn unit(v: Vec3) -> UnitVec3 {
    UnitVec3::normalize(v).unwrap_or_else(|| UnitVec3::normalize(Vec3::z()).unwrap())
}

fn snap(p: PixelCoord, grid: GridSpec) -> PixelCoord {
    PixelCoord::new((p.u * SNAP).round() / SNAP, (p.v * SNAP).round() / SNAP, grid)
}

/// Euclidean pixel distance; with `wrap_u` the horizontal offset is taken
/// the short way around.
pub fn pixel_distance(a: PixelCoord, b: PixelCoord, grid: GridSpec, wrap_u: bool) -> f64 {
    let mut du = (a.u - b.u).abs();
    if wrap_u {
        du = du.min(grid.width() as f64 - du);
    }
    du.hypot(a.v - b.v)
}

/// `min_k ‖p - c_k‖`.
pub fn min_distance(p: PixelCoord, samples: &EpipolarSamples, grid: GridSpec, wrap_u: bool) -> f64 {
    samples
        .points
        .iter()
        .map(|c| pixel_distance(p, *c, grid, wrap_u))
        .fold(f64::INFINITY, f64::min)
}
