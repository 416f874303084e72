use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Scene;
use crate::error::{Error, Result};
use crate::geometry::{CameraPose, Convention, Rotation3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// `floor(k (F - 1) / (S - 1))`
    UniformStride,
    /// Sorted draw without replacement.
    #[default]
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub frame_count: usize,
    pub sample: usize,
    pub sampling: Sampling,
    pub waypoints: usize,
    /// Minimum distance kept from walls and sphere surfaces.
    pub clearance: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            frame_count: 40,
            sample: 16,
            sampling: Sampling::SeededRandom,
            waypoints: 4,
            clearance: 0.3,
        }
    }
}

/// Camera path of `frame_count` camera-to-world poses plus the frames
/// picked for a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub poses: Vec<CameraPose>,
    pub sampled_indices: Vec<usize>,
    /// Position within `sampled_indices` of the conditioning frame.
    pub conditional_frame_index: usize,
}

impl Trajectory {
    pub fn frame_count(&self) -> usize {
        self.poses.len()
    }

    pub fn sampled_poses(&self) -> Vec<CameraPose> {
        self.sampled_indices.iter().map(|&i| self.poses[i]).collect()
    }
}

const MAX_ATTEMPTS: usize = 200;

/// Piecewise-linear path through random waypoints with cosine-eased yaw.
pub fn generate_trajectory(scene: &Scene, seed: u64, cfg: &TrajectoryConfig) -> Result<Trajectory> {
    if cfg.sample < 1 || cfg.frame_count < cfg.sample {
        return Err(Error::OutOfRange(format!(
            "need frame_count >= sample >= 1, got {} and {}",
            cfg.frame_count, cfg.sample
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_way = cfg.waypoints.max(2);
    let waypoints = (0..MAX_ATTEMPTS)
        .find_map(|_| {
            let pts: Vec<Vec3> = (0..n_way)
                .map(|_| random_free_point(scene, cfg.clearance, &mut rng))
                .collect::<Option<_>>()?;
            pts.windows(2)
                .all(|w| segment_is_free(scene, &w[0], &w[1], cfg.clearance))
                .then_some(pts)
        })
        .ok_or(Error::TrajectoryInfeasible(MAX_ATTEMPTS))?;
    let yaws: Vec<f64> = (0..n_way).map(|_| rng.gen_range(-PI..PI)).collect();

    let lengths: Vec<f64> = waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let total: f64 = lengths.iter().sum();
    let poses = (0..cfg.frame_count)
        .map(|f| {
            let s = if cfg.frame_count == 1 {
                0.0
            } else {
                total * f as f64 / (cfg.frame_count - 1) as f64
            };
            let (seg, frac) = locate(&lengths, s);
            let position = waypoints[seg] + (waypoints[seg + 1] - waypoints[seg]) * frac;
            let ease = 0.5 - 0.5 * (PI * frac).cos();
            let yaw = yaws[seg] + shortest_turn(yaws[seg], yaws[seg + 1]) * ease;
            CameraPose::new(Rotation3::rot_y(yaw), position, Convention::CamToWorld)
        })
        .collect();

    let sampled_indices = match cfg.sampling {
        Sampling::UniformStride => uniform_stride(cfg.frame_count, cfg.sample),
        Sampling::SeededRandom => {
            let mut idx = index::sample(&mut rng, cfg.frame_count, cfg.sample).into_vec();
            idx.sort_unstable();
            idx
        }
    };
    let conditional_frame_index = rng.gen_range(0..cfg.sample);
    Ok(Trajectory {
        poses,
        sampled_indices,
        conditional_frame_index,
    })
}

pub(crate) fn uniform_stride(frames: usize, sample: usize) -> Vec<usize> {
    if sample == 1 {
        return vec![0];
    }
    (0..sample).map(|k| k * (frames - 1) / (sample - 1)).collect()
}

fn locate(lengths: &[f64], mut s: f64) -> (usize, f64) {
    for (i, &l) in lengths.iter().enumerate() {
        if s <= l || i == lengths.len() - 1 {
            return (i, if l > 0.0 { (s / l).clamp(0.0, 1.0) } else { 0.0 });
        }
        s -= l;
    }
    unreachable!("at least one segment")
}

fn shortest_turn(from: f64, to: f64) -> f64 {
    (to - from + PI).rem_euclid(2.0 * PI) - PI
}

fn random_free_point(scene: &Scene, clearance: f64, rng: &mut ChaCha8Rng) -> Option<Vec3> {
    let r = &scene.room;
    let m = clearance.max(0.5);
    // Eye height band, falling back to the whole free height in low rooms.
    let (mut y_lo, mut y_hi) = ((r.min.y + 1.2).max(r.min.y + m), (r.min.y + 1.8).min(r.max.y - m));
    if y_lo >= y_hi {
        (y_lo, y_hi) = (r.min.y + m, r.max.y - m);
    }
    if y_lo >= y_hi || r.min.x + m >= r.max.x - m || r.min.z + m >= r.max.z - m {
        return None;
    }
    (0..1000).find_map(|_| {
        let p = Vec3::new(
            rng.gen_range(r.min.x + m..r.max.x - m),
            rng.gen_range(y_lo..y_hi),
            rng.gen_range(r.min.z + m..r.max.z - m),
        );
        scene
            .spheres
            .iter()
            .all(|s| (p - s.center).norm() > s.radius + clearance)
            .then_some(p)
    })
}

fn segment_is_free(scene: &Scene, a: &Vec3, b: &Vec3, clearance: f64) -> bool {
    let ab = b - a;
    let len2 = ab.norm_squared();
    scene.spheres.iter().all(|s| {
        let t = if len2 > 0.0 {
            ((s.center - a).dot(&ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (a + ab * t - s.center).norm() > s.radius + clearance
    })
}
