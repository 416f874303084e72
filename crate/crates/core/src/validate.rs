//! Self-check suites behind `panoepi validate`. Each returns report lines
//! and a verdict; failures are report content, not errors.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attention::{attend, attn_grad_check, mask_matrix, AttnTensors, MaskSemantics};
use crate::epipolar::{self, build_mask, mask_jaccard, min_distance, plane_coeffs_literal, MaskParams, SampleConfig};
use crate::error::Result;
use crate::geometry::{
    direction_pixel, pixel_direction, pixel_to_spherical, relative_pose, spherical_to_direction, CameraPose,
    Convention, ConventionMode, GridSpec, PixelCoord, RelativePose, Rotation3, Vec3,
};
use crate::oracle::{check_cases, DepthSweep, OracleReport};
use crate::scene::{generate_scene, generate_trajectory, Correspondence, TrajectoryConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub lines: Vec<String>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            lines: Vec::new(),
            passed: true,
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {line}", if ok { "PASS" } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(line);
    }
}

/// Uniform axis, uniform angle in `[0, π)`.
pub fn random_rotation(rng: &mut impl Rng) -> Rotation3 {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).sqrt();
    Rotation3::from_axis_angle(&Vec3::new(r * phi.cos(), r * phi.sin(), z), rng.gen_range(0.0..PI))
}

/// Camera-to-world pose with its center in `[-2, 2]³`.
pub fn random_pose(rng: &mut impl Rng) -> CameraPose {
    let t = Vec3::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
    );
    CameraPose::new(random_rotation(rng), t, Convention::CamToWorld)
}

/// Continuous pixel on `from` moved to the same direction on `to`.
pub fn rescale_pixel(p: PixelCoord, from: GridSpec, to: GridSpec) -> PixelCoord {
    PixelCoord {
        u: (p.u + 0.5) * to.width() as f64 / from.width() as f64 - 0.5,
        v: (p.v + 0.5) * to.height() as f64 / from.height() as f64 - 0.5,
    }
}

/// Worst pixel → direction → pixel error over every pixel center, `u`
/// compared modulo the width.
pub fn roundtrip_error(grid: GridSpec) -> f64 {
    let w = grid.width() as f64;
    (0..grid.pixel_count())
        .into_par_iter()
        .map(|i| {
            let p = grid.center(i);
            let q = direction_pixel(&pixel_direction(p, grid), grid);
            let du = (q.u - p.u).abs();
            du.min(w - du).max((q.v - p.v).abs())
        })
        .reduce(|| 0.0, f64::max)
}

pub fn roundtrip(grids: &[GridSpec]) -> SuiteReport {
    let mut r = SuiteReport::new("roundtrip");
    for &g in grids {
        let err = roundtrip_error(g);
        r.check(err <= 1e-9, format!("{}x{} max_err_px={err:e}", g.height(), g.width()));
    }
    r
}

/// Plane residuals of the closed-form `v(u)` curve and of arc-uniform samples,
/// both read back through the literal pixel convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concordance {
    pub pairs: usize,
    pub tried: usize,
    pub max_closed_form: f64,
    pub max_sampled: f64,
}

pub fn concordance(pairs: usize, grid: GridSpec, seed: u64) -> Concordance {
    let mode = ConventionMode::PaperLiteral;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Concordance {
        pairs: 0,
        tried: 0,
        max_closed_form: 0.0,
        max_sampled: 0.0,
    };
    let residual = |n: &Vec3, p: PixelCoord| {
        n.dot(spherical_to_direction(pixel_to_spherical(p, grid, mode), mode).as_vec())
            .abs()
    };
    while out.pairs < pairs && out.tried < 100 * pairs {
        out.tried += 1;
        let rel = relative_pose(&random_pose(&mut rng), &random_pose(&mut rng));
        let query = grid.center(rng.gen_range(0..grid.pixel_count()));
        let plane = epipolar::epipolar_plane(&rel, query, grid);
        let Some(n) = plane.unit_normal() else { continue };
        if n.z.abs() < 1e-3 {
            continue;
        }
        let Ok((a, b)) = plane_coeffs_literal(&plane) else {
            continue;
        };
        if b.abs() < 1e-3 {
            continue;
        }
        out.pairs += 1;
        for col in 0..grid.width() {
            let u = col as f64;
            let v = epipolar::epipolar_v_of_u(a, b, u, grid).expect("B' checked");
            out.max_closed_form = out.max_closed_form.max(residual(&n, PixelCoord { u, v }));
        }
        let cfg = SampleConfig {
            mode,
            ..SampleConfig::new(250, grid)
        };
        for p in epipolar::sample_epipolar(&plane, &rel, &cfg).points {
            out.max_sampled = out.max_sampled.max(residual(&n, p));
        }
    }
    out
}

pub fn concordance_suite(pairs: usize, grid: GridSpec, seed: u64) -> SuiteReport {
    let c = concordance(pairs, grid, seed);
    let mut r = SuiteReport::new("concordance");
    r.check(c.pairs >= pairs, format!("pose pairs {} of {} tried", c.pairs, c.tried));
    r.check(
        c.max_closed_form <= 1e-9,
        format!("closed-form curve max |n.dir|={:e}", c.max_closed_form),
    );
    r.check(
        c.max_sampled <= 1e-9,
        format!("arc samples max |n.dir|={:e}", c.max_sampled),
    );
    r
}

/// Random `(relative pose, query pixel)` cases from independent random
/// camera pairs.
pub fn oracle_cases(count: usize, grid: GridSpec, seed: u64) -> Vec<(RelativePose, PixelCoord)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let rel = relative_pose(&random_pose(&mut rng), &random_pose(&mut rng));
            (rel, grid.center(rng.gen_range(0..grid.pixel_count())))
        })
        .collect()
}

pub fn oracle_suite(
    count: usize,
    params: &MaskParams,
    sweep: &DepthSweep,
    seed: u64,
) -> Result<(SuiteReport, OracleReport)> {
    let report = check_cases(&oracle_cases(count, params.grid, seed), params, sweep)?;
    let mut r = SuiteReport::new("oracle");
    r.check(
        report.violations.is_empty(),
        format!(
            "subset violations={} in {} cases (oracle_bits={} analytic_bits={})",
            report.violations.len(),
            report.cases,
            report.oracle_bits,
            report.analytic_bits
        ),
    );
    r.check(
        report.max_curve_residual <= 1e-9,
        format!("oracle curve residual={:e}", report.max_curve_residual),
    );
    r.check(
        report.empty_slices == 0,
        format!("empty slices={}", report.empty_slices),
    );
    r.note(format!("runtime_s={:.3}", report.runtime.as_secs_f64()));
    Ok((r, report))
}

/// Feature-pixel distance from each visible frame-`j` observation to the
/// epipolar curve of the same point's frame-`i` observation, over all
/// ordered pairs `i != j`.
pub fn correspondence_distances(
    corr: &[Correspondence],
    poses: &[CameraPose],
    image: GridSpec,
    params: &MaskParams,
) -> Vec<f64> {
    let feat = params.grid;
    let cfg = params.sample_config();
    corr.par_iter()
        .flat_map_iter(|c| {
            let vis: Vec<_> = c.visible().copied().collect();
            let mut out = Vec::new();
            for a in &vis {
                for b in &vis {
                    if a.frame == b.frame {
                        continue;
                    }
                    let rel = relative_pose(&poses[a.frame], &poses[b.frame]);
                    let query = rescale_pixel(a.pixel, image, feat);
                    let plane = epipolar::epipolar_plane(&rel, query, feat);
                    let samples = epipolar::sample_epipolar(&plane, &rel, &cfg);
                    out.push(min_distance(
                        rescale_pixel(b.pixel, image, feat),
                        &samples,
                        feat,
                        params.wrap_u,
                    ));
                }
            }
            out
        })
        .collect()
}

pub fn correspondence_suite(
    corr: &[Correspondence],
    poses: &[CameraPose],
    image: GridSpec,
    params: &MaskParams,
) -> SuiteReport {
    let d = correspondence_distances(corr, poses, image, params);
    let within = d.iter().filter(|&&x| x <= 1.0).count();
    let frac = if d.is_empty() {
        0.0
    } else {
        within as f64 / d.len() as f64
    };
    let worst = d.iter().copied().fold(0.0, f64::max);
    let mut r = SuiteReport::new("correspondence");
    r.check(corr.len() >= 500, format!("points={}", corr.len()));
    r.check(
        frac >= 0.99,
        format!(
            "visible pairs={} within 1.0 feature px={within} ({:.4}%) max_px={worst:.4}",
            d.len(),
            100.0 * frac
        ),
    );
    r
}

/// Jaccard of masks at two sample counts for the listed query frames.
pub fn k_stability_jaccard(
    poses: &[CameraPose],
    params: &MaskParams,
    k_hi: usize,
    query_frames: &[usize],
) -> Result<Vec<f64>> {
    let hi = params.with_k(k_hi);
    query_frames
        .iter()
        .map(|&i| mask_jaccard(&build_mask(poses, params, i)?, &build_mask(poses, &hi, i)?))
        .collect()
}

/// Sampled poses of the trajectories used for the K-stability check, one
/// per scene seed.
pub fn stability_trajectories(scene_seeds: &[u64], trajectory_seed: u64) -> Result<Vec<Vec<CameraPose>>> {
    scene_seeds
        .iter()
        .map(|&s| {
            let scene = generate_scene(s);
            Ok(generate_trajectory(&scene, trajectory_seed ^ s, &TrajectoryConfig::default())?.sampled_poses())
        })
        .collect()
}

pub fn k_stability(
    trajectories: &[Vec<CameraPose>],
    params: &MaskParams,
    k_hi: usize,
    query_frames: &[usize],
) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("k-stability");
    let mut all = Vec::new();
    for (t, poses) in trajectories.iter().enumerate() {
        let jac = k_stability_jaccard(poses, params, k_hi, query_frames)?;
        for (&q, j) in query_frames.iter().zip(&jac) {
            r.note(format!(
                "trajectory {t} query frame {q} jaccard(K={}, K={k_hi})={j:.6}",
                params.k
            ));
        }
        all.extend(jac);
    }
    let mean = all.iter().sum::<f64>() / all.len().max(1) as f64;
    r.check(!all.is_empty() && mean >= 0.95, format!("mean jaccard={mean:.6}"));
    Ok(r)
}

/// Toy attention problem: `frames` poses of a random trajectory, masks at
/// `grid`, random `q/k/v` with `channels` columns.
pub fn attention_toy(
    frames: usize,
    grid: GridSpec,
    channels: usize,
    seed: u64,
) -> Result<(AttnTensors, nalgebra::DMatrix<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = generate_scene(seed);
    let cfg = TrajectoryConfig {
        frame_count: frames.max(2) * 4,
        sample: frames,
        ..Default::default()
    };
    let poses = generate_trajectory(&scene, seed, &cfg)?.sampled_poses();
    let mask = build_mask(&poses, &MaskParams::new(grid), 0)?;
    let hw = grid.pixel_count();
    let mut random = |rows: usize| nalgebra::DMatrix::from_fn(rows, channels, |_, _| rng.gen_range(-1.0..1.0));
    let t = AttnTensors {
        q: random(hw),
        k: random(frames * hw),
        v: random(frames * hw),
    };
    Ok((t, mask_matrix(&mask)))
}

pub fn grad_suite(seed: u64) -> Result<SuiteReport> {
    let grid = GridSpec::new(16, 8)?;
    let (t, m) = attention_toy(4, grid, 8, seed)?;
    let mut r = SuiteReport::new("grad");
    for mode in [MaskSemantics::MultiplicativeLiteral, MaskSemantics::AdditiveNegInf] {
        let out = attend(&t, &m, mode)?;
        let row_err = out
            .weights
            .row_iter()
            .map(|row| (row.sum() - 1.0).abs())
            .fold(0.0, f64::max);
        r.check(row_err <= 1e-6, format!("{mode:?} max |row sum - 1|={row_err:e}"));
        if mode == MaskSemantics::AdditiveNegInf {
            let leaked = out
                .weights
                .iter()
                .zip(m.iter())
                .filter(|(w, &mk)| mk == 0.0 && **w != 0.0)
                .count();
            r.check(leaked == 0, format!("{mode:?} nonzero weights on masked keys={leaked}"));
        }
        let g = attn_grad_check(&t, &m, mode, 1e-6)?;
        r.check(
            g.max() <= 1e-5,
            format!("{mode:?} gradcheck max rel err q={:e} k={:e} v={:e}", g.q, g.k, g.v),
        );
    }
    // Masked values reach the output only through the literal product.
    let mut poked = t.clone();
    let masked: Vec<usize> = (0..m.ncols()).filter(|&j| m[(0, j)] == 0.0).collect();
    for &j in &masked {
        for c in 0..poked.v.ncols() {
            poked.v[(j, c)] += 1.0;
        }
    }
    let shift = |mode| -> Result<f64> {
        let a = attend(&t, &m, mode)?.output;
        let b = attend(&poked, &m, mode)?.output;
        Ok((a.row(0) - b.row(0)).abs().max())
    };
    let lit = shift(MaskSemantics::MultiplicativeLiteral)?;
    let add = shift(MaskSemantics::AdditiveNegInf)?;
    r.check(
        !masked.is_empty() && lit > 1e-6 && add == 0.0,
        format!("masked-v sensitivity literal={lit:e} additive={add:e}"),
    );
    Ok(r)
}
