//! Equirectangular coordinate conventions and the pixel ↔ sphere ↔ direction
//! transforms everything else is built on.
//!
//! Default convention (`ConventionMode::DefaultLatitude`): integer pixel
//! `(u, v)` is the *center* of a cell, longitude grows with `u`, and
//! `v = -0.5` is the north pole (`+y`). The forward axis is `+z`, `+x` is at
//! longitude `π/2`.

mod plucker;
mod pose;

pub use plucker::{plucker_field, plucker_ray, PluckerField, PluckerRay};
pub use pose::{convert_convention, relative_pose, CameraPose, Convention, RelativePose, Rotation3};

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Pole rule threshold for [`direction_to_pixel`].
const POLE_EPS: f64 = 1e-12;

/// Panorama (or feature grid) resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    width: u32,
    height: u32,
}

impl GridSpec {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width < 2 || height < 1 {
            return Err(Error::InvalidGrid { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Row-major index of an integer pixel.
    pub fn index(&self, col: u32, row: u32) -> usize {
        row as usize * self.width as usize + col as usize
    }

    /// Pixel center of a row-major index.
    pub fn center(&self, index: usize) -> PixelCoord {
        let w = self.width as usize;
        PixelCoord {
            u: (index % w) as f64,
            v: (index / w) as f64,
        }
    }

    /// All pixel centers in row-major order.
    pub fn centers(&self) -> impl Iterator<Item = PixelCoord> + '_ {
        (0..self.pixel_count()).map(move |i| self.center(i))
    }
}

/// Continuous pixel position. `u` is periodic and kept in `[0, W)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

impl PixelCoord {
    /// Builds a coordinate, wrapping `u` into `[0, W)`.
    pub fn new(u: f64, v: f64, grid: GridSpec) -> Self {
        Self {
            u: wrap(u, grid.width as f64),
            v,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// `x mod period` in `[0, period)`; guards the `rem_euclid` rounding case
/// where a tiny negative input lands exactly on `period`.
pub(crate) fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Angles on the unit sphere.
///
/// In `DefaultLatitude` mode `lon ∈ [0, 2π)` and `lat ∈ [-π/2, π/2]`. In
/// `PaperLiteral` mode the same fields hold the azimuth `φ ∈ [0, 2π)` and the
/// literal elevation `θ ∈ [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoord {
    pub lon: f64,
    pub lat: f64,
}

/// Which pixel → angle mapping a pipeline uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ConventionMode {
    /// Half-pixel centered, full-sphere latitude.
    #[default]
    DefaultLatitude,
    /// `φ = 2πu/W`, `θ = πv/H` with no offset. Only covers `y ≥ 0`; kept for
    /// cross-checking the closed-form curve.
    PaperLiteral,
}

/// Unit-norm 3-vector (norm within 1e-9 of one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    pub const NORM_TOL: f64 = 1e-9;

    /// Normalizes `v`; `None` for zero or non-finite input.
    pub fn normalize(v: Vec3) -> Option<Self> {
        let n = v.norm();
        if n > 0.0 && n.is_finite() {
            Some(Self(v / n))
        } else {
            None
        }
    }

    /// Wraps `v` if it is already unit length within [`Self::NORM_TOL`].
    pub fn try_new(v: Vec3) -> Option<Self> {
        ((v.norm() - 1.0).abs() <= Self::NORM_TOL).then_some(Self(v))
    }

    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        Self(v)
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn into_inner(self) -> Vec3 {
        self.0
    }
}

pub fn pixel_to_spherical(p: PixelCoord, grid: GridSpec, mode: ConventionMode) -> SphericalCoord {
    let w = grid.width as f64;
    let h = grid.height as f64;
    match mode {
        ConventionMode::DefaultLatitude => SphericalCoord {
            lon: wrap(TAU * (p.u + 0.5) / w, TAU),
            lat: PI * (0.5 - (p.v + 0.5) / h),
        },
        ConventionMode::PaperLiteral => SphericalCoord {
            lon: p.u / w * TAU,
            lat: p.v / h * PI,
        },
    }
}

/// Same formula in both modes; only the meaning of `lat` differs.
pub fn spherical_to_direction(s: SphericalCoord, _mode: ConventionMode) -> UnitVec3 {
    let (sin_lon, cos_lon) = s.lon.sin_cos();
    let (sin_lat, cos_lat) = s.lat.sin_cos();
    UnitVec3::new_unchecked(Vec3::new(cos_lat * sin_lon, sin_lat, cos_lat * cos_lon))
}

/// Inverse of [`pixel_to_spherical`] followed by [`spherical_to_direction`].
///
/// Longitude is taken from `atan2(x, z)`, latitude from `asin(y)`. Within
/// `POLE_EPS` of a pole the longitude is fixed to 0. In `PaperLiteral` mode
/// directions with `y < 0` come back with `v < 0`, a region the literal
/// forward map never produces.
pub fn direction_to_pixel(d: &UnitVec3, grid: GridSpec, mode: ConventionMode) -> PixelCoord {
    let w = grid.width as f64;
    let h = grid.height as f64;
    let y = d.y().clamp(-1.0, 1.0);
    let lat = y.asin();
    let lon = if y.abs() >= 1.0 - POLE_EPS {
        0.0
    } else {
        wrap(d.x().atan2(d.z()), TAU)
    };
    match mode {
        ConventionMode::DefaultLatitude => {
            let v = (h * (0.5 - lat / PI) - 0.5).clamp(-0.5, h - 0.5);
            PixelCoord::new(w * lon / TAU - 0.5, v, grid)
        }
        ConventionMode::PaperLiteral => PixelCoord::new(w * lon / TAU, h * lat / PI, grid),
    }
}

/// Camera-frame viewing direction of a pixel under the default convention.
pub fn pixel_direction(p: PixelCoord, grid: GridSpec) -> UnitVec3 {
    let mode = ConventionMode::DefaultLatitude;
    spherical_to_direction(pixel_to_spherical(p, grid, mode), mode)
}

/// Default-convention pixel of a camera-frame direction.
pub fn direction_pixel(d: &UnitVec3, grid: GridSpec) -> PixelCoord {
    direction_to_pixel(d, grid, ConventionMode::DefaultLatitude)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(w: u32, h: u32) -> GridSpec {
        GridSpec::new(w, h).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1, 1).is_err());
        assert!(GridSpec::new(2, 0).is_err());
        assert!(GridSpec::new(2, 1).is_ok());
    }

    #[test]
    fn literal_pixel_to_spherical() {
        let g = grid(512, 256);
        let s = pixel_to_spherical(PixelCoord { u: 256.0, v: 128.0 }, g, ConventionMode::PaperLiteral);
        assert_abs_diff_eq!(s.lon, PI, epsilon = 1e-15);
        assert_abs_diff_eq!(s.lat, PI / 2.0, epsilon = 1e-15);
        let s = pixel_to_spherical(PixelCoord { u: 0.0, v: 0.0 }, g, ConventionMode::PaperLiteral);
        assert_eq!((s.lon, s.lat), (0.0, 0.0));
    }

    #[test]
    fn default_grid_midpoint_is_antimeridian_equator() {
        let g = grid(512, 256);
        let s = pixel_to_spherical(PixelCoord { u: 255.5, v: 127.5 }, g, ConventionMode::DefaultLatitude);
        assert_abs_diff_eq!(s.lon, PI, epsilon = 1e-15);
        assert_abs_diff_eq!(s.lat, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn canonical_directions() {
        let m = ConventionMode::DefaultLatitude;
        let d = spherical_to_direction(SphericalCoord { lon: 0.0, lat: 0.0 }, m);
        assert_abs_diff_eq!(*d.as_vec(), Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        let d = spherical_to_direction(
            SphericalCoord {
                lon: PI / 2.0,
                lat: 0.0,
            },
            m,
        );
        assert_abs_diff_eq!(*d.as_vec(), Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        for lon in [0.0, 1.0, 3.0, 6.0] {
            let d = spherical_to_direction(SphericalCoord { lon, lat: PI / 2.0 }, m);
            assert_abs_diff_eq!(*d.as_vec(), Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn forward_axis_wraps_to_last_half_pixel() {
        let g = grid(512, 256);
        let p = direction_pixel(&UnitVec3::new_unchecked(Vec3::z()), g);
        assert_abs_diff_eq!(p.u, 511.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v, 127.5, epsilon = 1e-12);
    }

    #[test]
    fn pole_rule() {
        let g = grid(512, 256);
        let p = direction_pixel(&UnitVec3::new_unchecked(Vec3::y()), g);
        // λ = 0 gives u = -0.5, wrapped into [0, W).
        assert_eq!(p.u, 511.5);
        assert_eq!(p.v, -0.5);
        let p = direction_pixel(&UnitVec3::new_unchecked(-Vec3::y()), g);
        assert_eq!(p.v, 255.5);
    }

    #[test]
    fn round_trip_every_center() {
        for g in [grid(128, 64), grid(512, 256), grid(7, 3)] {
            let mut worst: f64 = 0.0;
            for p in g.centers() {
                let q = direction_pixel(&pixel_direction(p, g), g);
                let du = (p.u - q.u).abs();
                let du = du.min(g.width() as f64 - du);
                worst = worst.max(du).max((p.v - q.v).abs());
            }
            assert!(worst <= 1e-9, "{g:?}: {worst}");
        }
    }

    #[test]
    fn literal_and_default_agree_on_canonical_pixels() {
        // Literal (u, v) and default (u - 0.5, v - 0.5) share a longitude;
        // literal θ re-indexes to default latitude as lat = π/2 - θ.
        let g = grid(512, 256);
        for (u, v) in [(0.0, 0.0), (128.0, 64.0), (256.0, 128.0), (384.0, 192.0)] {
            let lit = pixel_to_spherical(PixelCoord { u, v }, g, ConventionMode::PaperLiteral);
            let def = pixel_to_spherical(PixelCoord::new(u - 0.5, v - 0.5, g), g, ConventionMode::DefaultLatitude);
            assert_abs_diff_eq!(lit.lon.rem_euclid(TAU), def.lon, epsilon = 1e-12);
            assert_abs_diff_eq!(PI / 2.0 - lit.lat, def.lat, epsilon = 1e-12);
        }
    }

    #[test]
    fn literal_inverse_on_upper_hemisphere() {
        let g = grid(512, 256);
        let m = ConventionMode::PaperLiteral;
        let p = PixelCoord { u: 100.0, v: 40.0 };
        let d = spherical_to_direction(pixel_to_spherical(p, g, m), m);
        let q = direction_to_pixel(&d, g, m);
        assert_abs_diff_eq!(q.u, p.u, epsilon = 1e-9);
        assert_abs_diff_eq!(q.v, p.v, epsilon = 1e-9);
    }

    #[test]
    fn wrap_never_returns_period() {
        assert_eq!(wrap(-1e-300, 512.0), 0.0);
        assert_eq!(wrap(512.0, 512.0), 0.0);
        assert_eq!(wrap(-0.5, 512.0), 511.5);
    }
}
