use std::fmt;

use super::{Mat3, Vec3};
use crate::error::{Error, Result};

/// Proper rotation matrix (orthonormal and `det = +1`, both within 1e-8).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Mat3);

impl Rotation3 {
    pub const TOL: f64 = 1e-8;

    pub fn new(m: Mat3) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entry".into()));
        }
        let ortho = (m.transpose() * m - Mat3::identity()).abs().max();
        if ortho > Self::TOL {
            return Err(Error::InvalidRotation(format!(
                "not orthonormal (max |RᵀR - I| = {ortho:e})"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > Self::TOL {
            return Err(Error::InvalidRotation(format!("determinant {det}")));
        }
        Ok(Self(m))
    }

    /// Row-major 3×3.
    pub fn from_row_major(r: [f64; 9]) -> Result<Self> {
        Self::new(Mat3::from_row_slice(&r))
    }

    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Rotation by `angle` radians about the unit `axis` (Rodrigues).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let k = axis.normalize();
        let (s, c) = angle.sin_cos();
        let kx = Mat3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
        Self(Mat3::identity() + kx * s + kx * kx * (1.0 - c))
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::x(), angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::y(), angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::z(), angle)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self(self.0 * rhs.0)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }
}

/// Which way a pose maps points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Convention {
    /// `x_world = R x_cam + t`; `t` is the camera center.
    CamToWorld,
    /// `x_cam = R x_world + t`.
    WorldToCam,
}

impl Convention {
    pub fn tag(&self) -> &'static str {
        match self {
            Convention::CamToWorld => "c2w",
            Convention::WorldToCam => "w2c",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "c2w" => Some(Convention::CamToWorld),
            "w2c" => Some(Convention::WorldToCam),
            _ => None,
        }
    }

    pub fn flipped(&self) -> Self {
        match self {
            Convention::CamToWorld => Convention::WorldToCam,
            Convention::WorldToCam => Convention::CamToWorld,
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Rigid camera extrinsic with an explicit convention tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub rotation: Rotation3,
    pub translation: Vec3,
    pub convention: Convention,
}

impl CameraPose {
    pub fn new(rotation: Rotation3, translation: Vec3, convention: Convention) -> Self {
        Self {
            rotation,
            translation,
            convention,
        }
    }

    pub fn identity(convention: Convention) -> Self {
        Self::new(Rotation3::identity(), Vec3::zeros(), convention)
    }

    pub fn cam_to_world(&self) -> Self {
        match self.convention {
            Convention::CamToWorld => *self,
            Convention::WorldToCam => convert_convention(self),
        }
    }

    pub fn world_to_cam(&self) -> Self {
        match self.convention {
            Convention::WorldToCam => *self,
            Convention::CamToWorld => convert_convention(self),
        }
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        self.cam_to_world().translation
    }

    /// Same pose with the translation scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            translation: self.translation * s,
            ..*self
        }
    }
}

/// Inverts the rigid transform and flips the tag: `(R, t) ↦ (Rᵀ, -Rᵀt)`.
pub fn convert_convention(pose: &CameraPose) -> CameraPose {
    let rt = pose.rotation.transpose();
    CameraPose {
        rotation: rt,
        translation: -(rt.apply(&pose.translation)),
        convention: pose.convention.flipped(),
    }
}

/// Rigid map from camera-i coordinates to camera-j coordinates:
/// `x_j = R x_i + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePose {
    rotation: Rotation3,
    translation: Vec3,
    baseline_norm: f64,
}

impl RelativePose {
    pub fn new(rotation: Rotation3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
            baseline_norm: translation.norm(),
        }
    }

    pub fn identity() -> Self {
        Self::new(Rotation3::identity(), Vec3::zeros())
    }

    pub fn rotation(&self) -> &Rotation3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn baseline_norm(&self) -> f64 {
        self.baseline_norm
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &RelativePose) -> RelativePose {
        RelativePose::new(
            self.rotation.compose(&first.rotation),
            self.rotation.apply(&first.translation) + self.translation,
        )
    }

    pub fn inverse(&self) -> RelativePose {
        let rt = self.rotation.transpose();
        RelativePose::new(rt, -(rt.apply(&self.translation)))
    }
}

/// `R_{i→j} = R_j R_iᵀ`, `t_{i→j} = t_j - R_{i→j} t_i`, evaluated on the
/// world-to-camera form of both poses.
pub fn relative_pose(pose_i: &CameraPose, pose_j: &CameraPose) -> RelativePose {
    let pi = pose_i.world_to_cam();
    let pj = pose_j.world_to_cam();
    let rotation = pj.rotation.compose(&pi.rotation.transpose());
    let translation = pj.translation - rotation.apply(&pi.translation);
    RelativePose::new(rotation, translation)
}
