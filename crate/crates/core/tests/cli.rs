use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use panoepi::io::{read_plucker, read_ppm, read_sepm};
use tempfile::TempDir;

const IDENTITY: &str = r#"{"frame": 0, "R": [1, 0, 0, 0, 1, 0, 0, 0, 1], "t": [0, 0, 0], "convention": "c2w"}"#;

fn panoepi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_panoepi")).args(args).output().unwrap()
}

fn reader(p: impl AsRef<Path>) -> BufReader<fs::File> {
    BufReader::new(fs::File::open(p).unwrap())
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn two_frames(dir: &Path) -> String {
    write(
        dir,
        "traj.jsonl",
        &format!(
            "{IDENTITY}\n{}\n",
            r#"{"frame": 1, "R": [0, 0, 1, 0, 1, 0, -1, 0, 0], "t": [0.5, 0, 0.2], "convention": "c2w"}"#
        ),
    )
}

fn render(dir: &Path) -> Output {
    let out = dir.to_str().unwrap();
    #[rustfmt::skip]
    let args = [
        "render", "--seed-scene", "3", "--seed-traj", "4", "--frames", "4", "--frame-count", "8",
        "--width", "64", "--height", "32", "--correspondences", "20", "--out", out,
    ];
    panoepi(&args)
}

#[test]
fn plucker_file_has_header_plus_six_floats_per_ray() {
    let tmp = TempDir::new().unwrap();
    let traj = two_frames(tmp.path());
    let out = tmp.path().join("rays.plkf");
    let o = panoepi(&[
        "plucker",
        "--traj",
        &traj,
        "--width",
        "32",
        "--height",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::metadata(&out).unwrap().len(), 20 + 2 * 16 * 32 * 24);
    let file = read_plucker(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!((file.frames, file.height, file.width), (2, 16, 32));
}

#[test]
fn single_frame_mask_is_the_identity() {
    let tmp = TempDir::new().unwrap();
    let traj = write(tmp.path(), "one.jsonl", IDENTITY);
    let out = tmp.path().join("m.sepm");
    #[rustfmt::skip]
    let o = panoepi(&["mask", "--traj", &traj, "--feat-h", "8", "--feat-w", "16", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let file = read_sepm(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(file.query_frames(), vec![0]);
    assert_eq!(file.masks[0].density(), 1.0 / 128.0);
}

#[test]
fn mask_respects_query_frames_and_budget() {
    let tmp = TempDir::new().unwrap();
    let traj = two_frames(tmp.path());
    let out = tmp.path().join("m.sepm");
    let o = panoepi(&[
        "mask",
        "--traj",
        &traj,
        "--query-frames",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        read_sepm(fs::File::open(&out).unwrap()).unwrap().query_frames(),
        vec![1]
    );

    let o = panoepi(&[
        "mask",
        "--traj",
        &traj,
        "--mem-budget",
        "1000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    let o = panoepi(&[
        "mask",
        "--traj",
        &traj,
        "--query-frames",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_trajectories_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x").to_str().unwrap().to_owned();
    let no_tag = write(
        tmp.path(),
        "a.jsonl",
        r#"{"frame": 0, "R": [1, 0, 0, 0, 1, 0, 0, 0, 1], "t": [0, 0, 0]}"#,
    );
    let skewed = write(
        tmp.path(),
        "b.jsonl",
        r#"{"frame": 0, "R": [2, 0, 0, 0, 1, 0, 0, 0, 1], "t": [0, 0, 0], "convention": "w2c"}"#,
    );
    for traj in [no_tag, skewed] {
        let o = panoepi(&["plucker", "--traj", &traj, "--out", &out]);
        assert_eq!(code(&o), 2);
        assert!(!o.stderr.is_empty());
    }
    let o = panoepi(&["plucker", "--traj", "/nonexistent/traj.jsonl", "--out", &out]);
    assert_eq!(code(&o), 4);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&panoepi(&["mask"])), 2);
    assert_eq!(code(&panoepi(&["validate", "nonsense"])), 2);
}

#[test]
fn validate_exit_status_follows_the_suite() {
    let o = panoepi(&["validate", "roundtrip", "--width", "64", "--height", "32"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));

    // Three samples per curve leave the mask full of holes.
    #[rustfmt::skip]
    let o = panoepi(&["validate", "oracle", "--cases", "20", "--k", "3", "--feat-h", "8", "--feat-w", "16"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn render_is_deterministic_and_complete() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(code(&render(a.path())), 0);
    assert_eq!(code(&render(b.path())), 0);
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.iter().filter(|n| n.ends_with(".ppm")).count(), 4);
    for n in [
        "manifest.jsonl",
        "trajectory.jsonl",
        "clip_trajectory.jsonl",
        "correspondences.jsonl",
    ] {
        assert!(names.iter().any(|x| x == n), "{n} missing");
    }
    for n in &names {
        assert_eq!(
            fs::read(a.path().join(n)).unwrap(),
            fs::read(b.path().join(n)).unwrap(),
            "{n} differs"
        );
    }
    let img = read_ppm(reader(
        a.path().join(names.iter().find(|n| n.ends_with(".ppm")).unwrap()),
    ))
    .unwrap();
    assert_eq!((img.width, img.height), (64, 32));
}

#[test]
fn epicurve_draws_on_a_rendered_frame() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&render(tmp.path())), 0);
    let dir = tmp.path();
    let frame = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "ppm"))
        .min()
        .unwrap();
    let traj = dir.join("clip_trajectory.jsonl");
    let out = dir.join("curve.ppm");
    #[rustfmt::skip]
    let o = panoepi(&[
        "epicurve", "--traj", traj.to_str().unwrap(), "--frame-i", "0", "--frame-j", "1",
        "--u", "10", "--v", "16", "--image", frame.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let before = read_ppm(reader(&frame)).unwrap();
    let after = read_ppm(reader(&out)).unwrap();
    assert_ne!(before.pixels, after.pixels);

    #[rustfmt::skip]
    let o = panoepi(&[
        "epicurve", "--traj", traj.to_str().unwrap(), "--frame-i", "0", "--frame-j", "1",
        "--u", "10", "--v", "99", "--image", frame.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}
