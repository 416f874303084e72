//! Renders a procedural clip both directly and through a cubemap.
//!
//!     cargo run --release --example render_scene -- [out_dir]

use std::path::PathBuf;

use panoepi::geometry::GridSpec;
use panoepi::io::write_frame_set;
use panoepi::scene::{
    generate_scene, generate_trajectory, render_clip, render_frame, seam_mask, RenderMode, TrajectoryConfig,
};

fn main() -> panoepi::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "clip".into()));
    let grid = GridSpec::new(512, 256)?;
    let scene = generate_scene(4);
    println!(
        "room {:?} .. {:?}, {} spheres",
        scene.room.min.as_slice(),
        scene.room.max.as_slice(),
        scene.spheres.len()
    );

    let traj = generate_trajectory(&scene, 8, &TrajectoryConfig::default())?;
    println!(
        "sampled {:?}, conditional frame {}",
        traj.sampled_indices, traj.conditional_frame_index
    );

    let pose = traj.poses[traj.sampled_indices[0]];
    let direct = render_frame(&scene, &pose, grid, RenderMode::Direct)?;
    let cube = render_frame(&scene, &pose, grid, RenderMode::ViaCubemap { face: 512 })?;
    let seams = seam_mask(grid, 2);
    println!(
        "cubemap vs direct: mean |diff| {:.3}/255 off seams, {:.3}/255 overall",
        direct.mean_abs_diff(&cube, Some(&seams))?,
        direct.mean_abs_diff(&cube, None)?
    );

    let set = render_clip(&scene, traj, grid, RenderMode::Direct, 600)?;
    let visible: usize = set.correspondences.iter().map(|c| c.visible().count()).sum();
    let clip = write_frame_set(&out, &set, 4, 8)?;
    println!(
        "{} frames and {visible} visible observations in {}",
        clip.frames.len(),
        out.display()
    );
    Ok(())
}
