use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Scene, Trajectory};
use crate::geometry::{direction_pixel, CameraPose, GridSpec, PixelCoord, UnitVec3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Index into the trajectory's poses.
    pub frame: usize,
    /// Projection of the point, stored whether visible or not.
    pub pixel: PixelCoord,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub point: Vec3,
    pub observations: Vec<Observation>,
}

impl Correspondence {
    pub fn visible(&self) -> impl Iterator<Item = &Observation> {
        self.observations.iter().filter(|o| o.visible)
    }
}

// Keeps the point stream independent of the scene layout stream.
const STREAM: u64 = 0x636f_7272;

/// Continuous pixel of world point `x` seen from `pose`, or `None` at the
/// camera center.
pub fn project_point(pose: &CameraPose, x: &Vec3, grid: GridSpec) -> Option<PixelCoord> {
    let c2w = pose.cam_to_world();
    let local = c2w.rotation.transpose().apply(&(x - c2w.translation));
    UnitVec3::normalize(local).map(|d| direction_pixel(&d, grid))
}

/// Whether nothing lies strictly between the camera center and `x`.
pub fn is_visible(scene: &Scene, pose: &CameraPose, x: &Vec3) -> bool {
    let origin = pose.cam_to_world().translation;
    let to = x - origin;
    let dist = to.norm();
    if dist == 0.0 {
        return false;
    }
    scene
        .cast(&origin, &(to / dist))
        .is_some_and(|hit| hit.t >= dist - 1e-6 * dist.max(1.0))
}

/// Points on sphere surfaces and on interior checkerboard corners, observed
/// from every sampled frame of `traj`.
pub fn extract_correspondences(scene: &Scene, traj: &Trajectory, grid: GridSpec, count: usize) -> Vec<Correspondence> {
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed ^ STREAM);
    (0..count)
        .map(|_| {
            let point = if !scene.spheres.is_empty() && rng.gen_bool(0.5) {
                sphere_point(scene, &mut rng)
            } else {
                corner_point(scene, &mut rng)
            };
            let observations = traj
                .sampled_indices
                .iter()
                .map(|&frame| {
                    let pose = &traj.poses[frame];
                    Observation {
                        frame,
                        pixel: project_point(pose, &point, grid).expect("point off the camera path"),
                        visible: is_visible(scene, pose, &point),
                    }
                })
                .collect();
            Correspondence { point, observations }
        })
        .collect()
}

fn sphere_point(scene: &Scene, rng: &mut ChaCha8Rng) -> Vec3 {
    let s = &scene.spheres[rng.gen_range(0..scene.spheres.len())];
    // Uniform on the sphere: z uniform in [-1, 1], azimuth uniform.
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    s.center + Vec3::new(r * phi.cos(), r * phi.sin(), z) * s.radius
}

fn corner_point(scene: &Scene, rng: &mut ChaCha8Rng) -> Vec3 {
    let wall = rng.gen_range(0..6);
    let axis = wall / 2;
    let room = &scene.room;
    let cell = scene.walls[wall].cell;
    let mut p = Vec3::zeros();
    p[axis] = if wall % 2 == 0 { room.min[axis] } else { room.max[axis] };
    for a in [(axis + 1) % 3, (axis + 2) % 3] {
        let lo = (room.min[a] / cell).floor() as i64 + 1;
        let hi = (room.max[a] / cell).ceil() as i64 - 1;
        p[a] = if lo <= hi {
            rng.gen_range(lo..=hi) as f64 * cell
        } else {
            0.5 * (room.min[a] + room.max[a])
        };
    }
    p
}
