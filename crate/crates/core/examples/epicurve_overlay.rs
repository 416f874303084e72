//! Renders two frames and marks one pixel's epipolar curve on the second.
//!
//!     cargo run --release --example epicurve_overlay -- [out.ppm]

use std::io::BufWriter;

use panoepi::geometry::{relative_pose, ConventionMode, GridSpec, PixelCoord};
use panoepi::io::{draw_epicurve, write_ppm};
use panoepi::scene::{generate_scene, generate_trajectory, project_point, render_equirect, TrajectoryConfig};

fn main() -> panoepi::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "epicurve.ppm".into());
    let grid = GridSpec::new(512, 256)?;
    let scene = generate_scene(2);
    let traj = generate_trajectory(&scene, 3, &TrajectoryConfig::default())?;
    let (i, j) = (traj.sampled_indices[0], traj.sampled_indices[8]);

    // Query: where the first sphere's center appears in frame i.
    let target = scene.spheres[0].center;
    let query = project_point(&traj.poses[i], &target, grid).expect("not at the camera");
    let query = PixelCoord {
        u: query.u.round().rem_euclid(512.0),
        v: query.v.round().clamp(0.0, 255.0),
    };
    let seen = project_point(&traj.poses[j], &target, grid).expect("not at the camera");
    println!(
        "frame {i} query ({}, {}); the point sits at ({:.1}, {:.1}) in frame {j}",
        query.u, query.v, seen.u, seen.v
    );

    let img = render_equirect(&scene, &traj.poses[j], grid);
    let rel = relative_pose(&traj.poses[i], &traj.poses[j]);
    let drawn = draw_epicurve(&img, &rel, query, 250, ConventionMode::DefaultLatitude)?;
    write_ppm(BufWriter::new(std::fs::File::create(&out)?), &drawn)?;
    println!("wrote {out}");
    Ok(())
}
