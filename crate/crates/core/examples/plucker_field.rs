//! Plücker rays of a generated camera path, written as a PLKF file.
//!
//!     cargo run --example plucker_field -- [out.plkf]

use std::io::BufWriter;

use panoepi::geometry::{plucker_field, GridSpec};
use panoepi::io::{read_plucker, write_plucker};
use panoepi::scene::{generate_scene, generate_trajectory, TrajectoryConfig};

fn main() -> panoepi::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "plucker.plkf".into());
    let scene = generate_scene(7);
    let traj = generate_trajectory(&scene, 1, &TrajectoryConfig::default())?;
    let grid = GridSpec::new(512, 256)?;

    let fields: Vec<_> = traj
        .sampled_poses()
        .iter()
        .enumerate()
        .map(|(i, pose)| plucker_field(pose, grid, i))
        .collect();
    for f in &fields {
        let (md, dn) = f.invariant_residuals();
        let center = f.get(255, 127);
        println!(
            "frame {:2}: max|m.d| {md:.1e}  max|norm(d)-1| {dn:.1e}  center ray d={:?}",
            f.frame_index,
            center.direction.as_vec().as_slice()
        );
    }
    write_plucker(BufWriter::new(std::fs::File::create(&out)?), &fields)?;

    let back = read_plucker(std::io::BufReader::new(std::fs::File::open(&out)?))?;
    println!(
        "{out}: {} frames of {}x{}, first ray {:?}",
        back.frames,
        back.height,
        back.width,
        back.ray(0, 0, 0)
    );
    Ok(())
}
