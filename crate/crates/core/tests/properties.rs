use panoepi::epipolar::{build_mask, epipolar_plane, min_distance, pixel_distance, sample_epipolar, MaskParams};
use panoepi::geometry::{
    convert_convention, relative_pose, CameraPose, Convention, GridSpec, PixelCoord, Rotation3, Vec3,
};
use panoepi::io::{parse_trajectory, write_trajectory};
use panoepi::validate::random_pose;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn feat() -> GridSpec {
    GridSpec::new(64, 32).unwrap()
}

// Any key pixel close to the forward curve i -> j must see the query near
// its own reverse curve j -> i.
#[test]
fn epipolar_curves_are_symmetric() {
    let g = feat();
    let params = MaskParams::new(g);
    let cfg = params.sample_config();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (mut tried, mut held) = (0, 0);
    while tried < 10_000 {
        let (pi, pj) = (random_pose(&mut rng), random_pose(&mut rng));
        let p = PixelCoord::new(rng.gen_range(0..64) as f64, rng.gen_range(0..32) as f64, g);
        let fwd = relative_pose(&pi, &pj);
        let samples = sample_epipolar(&epipolar_plane(&fwd, p, g), &fwd, &cfg);
        let close: Vec<_> = (0..g.pixel_count())
            .map(|i| PixelCoord::new((i % 64) as f64, (i / 64) as f64, g))
            .filter(|q| min_distance(*q, &samples, g, true) <= params.tau / 2.0)
            .collect();
        if close.is_empty() {
            continue;
        }
        let q = close[rng.gen_range(0..close.len())];
        tried += 1;
        let back = relative_pose(&pj, &pi);
        let reverse = sample_epipolar(&epipolar_plane(&back, q, g), &back, &cfg);
        if min_distance(p, &reverse, g, true) <= 2.0 * params.tau {
            held += 1;
        }
    }
    assert!(held as f64 >= 0.99 * tried as f64, "{held}/{tried}");
}

fn poses(seed: u64, n: usize) -> Vec<CameraPose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_pose(&mut rng)).collect()
}

fn small() -> MaskParams {
    MaskParams::new(GridSpec::new(16, 8).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mask_ignores_translation_scale(seed in any::<u64>(), s in 0.01f64..100.0) {
        let ps = poses(seed, 3);
        let scaled: Vec<_> = ps.iter().map(|p| p.scaled(s)).collect();
        let a = build_mask(&ps, &small(), 1).unwrap();
        let b = build_mask(&scaled, &small(), 1).unwrap();
        prop_assert_eq!(a.bits(), b.bits());
    }

    #[test]
    fn mask_ignores_pose_convention(seed in any::<u64>()) {
        let ps = poses(seed, 3);
        let flipped: Vec<_> = ps.iter().map(convert_convention).collect();
        prop_assert!(flipped.iter().all(|p| p.convention == Convention::WorldToCam));
        let a = build_mask(&ps, &small(), 0).unwrap();
        let b = build_mask(&flipped, &small(), 0).unwrap();
        prop_assert_eq!(a.bits(), b.bits());
    }

    #[test]
    fn query_frame_slice_is_the_identity(seed in any::<u64>(), q in 0usize..3) {
        let ps = poses(seed, 3);
        let m = build_mask(&ps, &small(), q).unwrap();
        for a in 0..128 {
            for b in 0..128 {
                prop_assert_eq!(m.get(a, q, b), a == b);
            }
        }
    }

    #[test]
    fn every_key_slice_is_nonempty(seed in any::<u64>()) {
        let m = build_mask(&poses(seed, 4), &small(), 2).unwrap();
        prop_assert!(m.empty_slices().is_empty());
    }

    #[test]
    fn trajectory_text_round_trips(seed in any::<u64>(), n in 1usize..6) {
        let ps = poses(seed, n);
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &ps).unwrap();
        let back = parse_trajectory(buf.as_slice()).unwrap();
        prop_assert_eq!(back, ps);
    }

    #[test]
    fn wrapped_distance_is_a_metric_on_the_cylinder(
        a in (0.0f64..64.0, 0.0f64..32.0),
        b in (0.0f64..64.0, 0.0f64..32.0),
        c in (0.0f64..64.0, 0.0f64..32.0),
    ) {
        let g = feat();
        let [a, b, c] = [a, b, c].map(|(u, v)| PixelCoord::new(u, v, g));
        let d = |x, y| pixel_distance(x, y, g, true);
        prop_assert!((d(a, b) - d(b, a)).abs() < 1e-12);
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
        prop_assert!(d(a, b) <= pixel_distance(a, b, g, false) + 1e-12);
    }
}

#[test]
fn yaw_only_motion_keeps_the_equator_row() {
    // Sideways motion at eye height: the horizon maps to itself.
    let g = GridSpec::new(64, 33).unwrap();
    let a = CameraPose::new(Rotation3::rot_y(0.3), Vec3::new(0.0, 1.5, 0.0), Convention::CamToWorld);
    let b = CameraPose::new(Rotation3::rot_y(-0.2), Vec3::new(0.7, 1.5, 0.4), Convention::CamToWorld);
    let rel = relative_pose(&a, &b);
    let s = sample_epipolar(
        &epipolar_plane(&rel, PixelCoord::new(10.0, 16.0, g), g),
        &rel,
        &MaskParams::new(g).sample_config(),
    );
    assert!(s.points.iter().all(|p| (p.v - 16.0).abs() < 1e-9));
}
