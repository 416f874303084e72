//! Seeded procedural rooms: a checkerboard box with a handful of spheres,
//! camera paths through it, and a flat-shaded ray caster.

mod correspond;
mod render;
mod trajectory;

pub use correspond::{extract_correspondences, is_visible, project_point, Correspondence, Observation};
pub use render::{cubemap_to_equirect, face_ray, render_cubemap, render_equirect, seam_mask, CubeFace, Image, FACES};
pub use trajectory::{generate_trajectory, Sampling, Trajectory, TrajectoryConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{CameraPose, GridSpec, Vec3};

pub type Rgb = [u8; 3];

/// Axis-aligned room, scene units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    pub min: Vec3,
    pub max: Vec3,
}

impl Room {
    pub fn contains(&self, p: &Vec3, margin: f64) -> bool {
        (0..3).all(|a| p[a] > self.min[a] + margin && p[a] < self.max[a] - margin)
    }
}

/// Checkerboard on one wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallTexture {
    pub cell: f64,
    pub colors: [Rgb; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
    pub color: Rgb,
}

impl Sphere {
    /// Nearest positive ray parameter.
    fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let oc = origin - self.center;
        let b = oc.dot(dir);
        let c = oc.norm_squared() - self.radius * self.radius;
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        [-b - s, -b + s].into_iter().find(|&t| t > 1e-9)
    }
}

/// Walls in order `-x, +x, -y (floor), +y (ceiling), -z, +z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub seed: u64,
    pub room: Room,
    pub walls: [WallTexture; 6],
    pub spheres: Vec<Sphere>,
}

/// Sizes used by [`generate_scene_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub size: Vec3,
    pub sphere_count: usize,
    pub cell: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            size: Vec3::new(8.0, 3.0, 10.0),
            sphere_count: 12,
            cell: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub color: Rgb,
}

impl Scene {
    /// Single-color room without spheres.
    pub fn uniform(room: Room, color: Rgb) -> Self {
        Self {
            seed: 0,
            room,
            walls: [WallTexture {
                cell: 1.0,
                colors: [color; 2],
            }; 6],
            spheres: Vec::new(),
        }
    }

    /// Nearest surface along a unit ray starting inside the room.
    pub fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
        let mut best = self.wall_hit(origin, dir);
        for s in &self.spheres {
            if let Some(t) = s.intersect(origin, dir) {
                if best.is_none_or(|b| t < b.t) {
                    best = Some(Hit { t, color: s.color });
                }
            }
        }
        best
    }

    fn wall_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
        let mut best: Option<(f64, usize)> = None;
        for axis in 0..3 {
            if dir[axis] == 0.0 {
                continue;
            }
            let (bound, wall) = if dir[axis] > 0.0 {
                (self.room.max[axis], 2 * axis + 1)
            } else {
                (self.room.min[axis], 2 * axis)
            };
            let t = (bound - origin[axis]) / dir[axis];
            if t > 0.0 && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, wall));
            }
        }
        let (t, wall) = best?;
        let p = origin + dir * t;
        Some(Hit {
            t,
            color: self.wall_color(wall, &p),
        })
    }

    fn wall_color(&self, wall: usize, p: &Vec3) -> Rgb {
        let tex = &self.walls[wall];
        let axis = wall / 2;
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        let parity = ((p[a] / tex.cell).floor() as i64 + (p[b] / tex.cell).floor() as i64).rem_euclid(2);
        tex.colors[parity as usize]
    }
}

pub fn generate_scene(seed: u64) -> Scene {
    generate_scene_with(seed, &SceneConfig::default())
}

/// Deterministic room of the configured size centered on the `y` axis with
/// the floor at `y = 0`.
pub fn generate_scene_with(seed: u64, cfg: &SceneConfig) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = cfg.size / 2.0;
    let room = Room {
        min: Vec3::new(-half.x, 0.0, -half.z),
        max: Vec3::new(half.x, cfg.size.y, half.z),
    };
    let color =
        |rng: &mut ChaCha8Rng| -> Rgb { [rng.gen_range(60..200), rng.gen_range(60..200), rng.gen_range(60..200)] };
    let walls = std::array::from_fn(|_| {
        let a = color(&mut rng);
        let b = a.map(|c| if c > 130 { c - 40 } else { c + 40 });
        WallTexture {
            cell: cfg.cell,
            colors: [a, b],
        }
    });
    let spheres = (0..cfg.sphere_count)
        .map(|_| {
            let radius = rng.gen_range(0.15..0.45);
            let m = radius + 0.05;
            let center = Vec3::new(
                rng.gen_range(room.min.x + m..room.max.x - m),
                rng.gen_range(room.min.y + m..room.max.y - m),
                rng.gen_range(room.min.z + m..room.max.z - m),
            );
            Sphere {
                center,
                radius,
                color: color(&mut rng),
            }
        })
        .collect();
    Scene {
        seed,
        room,
        walls,
        spheres,
    }
}

/// How panorama frames are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RenderMode {
    /// Ray cast per equirectangular pixel.
    #[default]
    Direct,
    /// Ray-cast cubemap of the given face size, then resampled.
    ViaCubemap { face: u32 },
}

/// One rendered clip: the sampled frames, the trajectory they came from, and
/// ground-truth correspondences.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFrameSet {
    pub grid: GridSpec,
    /// One image per `trajectory.sampled_indices` entry.
    pub frames: Vec<Image>,
    pub trajectory: Trajectory,
    pub correspondences: Vec<Correspondence>,
}

pub fn render_frame(scene: &Scene, pose: &CameraPose, grid: GridSpec, mode: RenderMode) -> Result<Image> {
    match mode {
        RenderMode::Direct => Ok(render_equirect(scene, pose, grid)),
        RenderMode::ViaCubemap { face } => cubemap_to_equirect(&render_cubemap(scene, pose, face)?, grid),
    }
}

pub fn render_clip(
    scene: &Scene,
    trajectory: Trajectory,
    grid: GridSpec,
    mode: RenderMode,
    correspondence_count: usize,
) -> Result<SceneFrameSet> {
    let frames = trajectory
        .sampled_indices
        .iter()
        .map(|&i| render_frame(scene, &trajectory.poses[i], grid, mode))
        .collect::<Result<Vec<_>>>()?;
    let correspondences = extract_correspondences(scene, &trajectory, grid, correspondence_count);
    Ok(SceneFrameSet {
        grid,
        frames,
        trajectory,
        correspondences,
    })
}
