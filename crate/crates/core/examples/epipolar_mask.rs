//! Builds the epipolar attention mask of one query frame and inspects it.
//!
//!     cargo run --release --example epipolar_mask

use panoepi::epipolar::{build_mask, mask_jaccard, MaskParams};
use panoepi::geometry::GridSpec;
use panoepi::io::{read_sepm, write_sepm};
use panoepi::scene::{generate_scene, generate_trajectory, TrajectoryConfig};

fn main() -> panoepi::Result<()> {
    let scene = generate_scene(3);
    let poses = generate_trajectory(&scene, 9, &TrajectoryConfig::default())?.sampled_poses();
    let grid = GridSpec::new(64, 32)?;
    let params = MaskParams::new(grid);

    let mask = build_mask(&poses, &params, 0)?;
    let (hw, n, _) = mask.shape();
    println!("mask {hw} x {n} x {hw}, density {:.4}", mask.density());

    // One query pixel: how many keys it may attend to in each frame.
    let q = grid.index(10, 8);
    let per_frame: Vec<usize> = (0..n).map(|j| mask.slice_count(q, j)).collect();
    println!("query (10, 8) keys per frame: {per_frame:?}");
    assert!(mask.empty_slices().is_empty());

    // Same poses, translations scaled: bit-identical.
    let scaled: Vec<_> = poses.iter().map(|p| p.scaled(17.3)).collect();
    let again = build_mask(&scaled, &params, 0)?;
    println!("scale 17.3 identical: {}", again.bits() == mask.bits());

    let dense = build_mask(&poses, &params.with_k(2000), 0)?;
    println!("jaccard K=250 vs K=2000: {:.4}", mask_jaccard(&mask, &dense)?);

    let mut buf = Vec::new();
    write_sepm(&mut buf, std::slice::from_ref(&mask))?;
    let file = read_sepm(buf.as_slice())?;
    println!(
        "SEPM {} bytes, query frames {:?}, tau {}",
        buf.len(),
        file.query_frames(),
        file.tau
    );
    Ok(())
}
