use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use panoepi::epipolar::{build_mask, MaskParams};
use panoepi::geometry::{plucker_field, relative_pose, ConventionMode, GridSpec, PixelCoord};
use panoepi::io;
use panoepi::oracle::DepthSweep;
use panoepi::scene::{generate_scene, generate_trajectory, render_clip, RenderMode, Sampling, TrajectoryConfig};
use panoepi::validate::{self, SuiteReport};
use panoepi::Error;

#[derive(Parser)]
#[command(
    name = "panoepi",
    version,
    about = "Panoramic Plücker fields, spherical epipolar masks and synthetic clips"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct FeatureGrid {
    #[arg(long, default_value_t = 32)]
    feat_h: u32,
    #[arg(long, default_value_t = 64)]
    feat_w: u32,
    /// Samples per epipolar curve.
    #[arg(long, default_value_t = 250)]
    k: usize,
    /// Mask distance threshold in feature pixels.
    #[arg(long, default_value_t = MaskParams::DEFAULT_TAU)]
    tau: f64,
    /// Measure u distances around the 360° seam.
    #[arg(long, overrides_with = "no_wrap_u")]
    wrap_u: bool,
    #[arg(long)]
    no_wrap_u: bool,
}

impl FeatureGrid {
    fn params(&self) -> Result<MaskParams, Error> {
        let mut p = MaskParams::new(GridSpec::new(self.feat_w, self.feat_h)?)
            .with_k(self.k)
            .with_tau(self.tau);
        p.wrap_u = !self.no_wrap_u;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Default,
    Literal,
}

impl From<Mode> for ConventionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Default => ConventionMode::DefaultLatitude,
            Mode::Literal => ConventionMode::PaperLiteral,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Roundtrip,
    Concordance,
    Oracle,
    Correspondence,
    KStability,
    Grad,
}

#[derive(Subcommand)]
enum Command {
    /// Per-pixel Plücker rays of every trajectory frame → PLKF.
    Plucker {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, default_value_t = 512)]
        width: u32,
        #[arg(long, default_value_t = 256)]
        height: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Epipolar attention masks → SEPM.
    Mask {
        #[arg(long)]
        traj: PathBuf,
        #[command(flatten)]
        feat: FeatureGrid,
        /// Comma-separated query frames; all frames when omitted.
        #[arg(long, value_delimiter = ',')]
        query_frames: Vec<usize>,
        /// Bytes allowed for mask storage, checked before allocating.
        #[arg(long, default_value_t = 2_000_000_000)]
        mem_budget: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draws one query pixel's epipolar samples onto a panorama (PPM).
    Epicurve {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        frame_i: usize,
        #[arg(long)]
        frame_j: usize,
        #[arg(long)]
        u: f64,
        #[arg(long)]
        v: f64,
        /// Frame-j panorama.
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 250)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Mode::Default)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Renders a procedural clip: frames, trajectory, correspondences, manifest.
    Render {
        #[arg(long, default_value_t = 0)]
        seed_scene: u64,
        #[arg(long, default_value_t = 0)]
        seed_traj: u64,
        /// Frames kept from the trajectory.
        #[arg(long, default_value_t = 16)]
        frames: usize,
        #[arg(long, default_value_t = 40)]
        frame_count: usize,
        /// Keep evenly spaced frames instead of a seeded random subset.
        #[arg(long)]
        stride: bool,
        #[arg(long, default_value_t = 512)]
        width: u32,
        #[arg(long, default_value_t = 256)]
        height: u32,
        #[arg(long, conflicts_with = "via_cubemap")]
        direct: bool,
        #[arg(long)]
        via_cubemap: bool,
        #[arg(long, default_value_t = 512)]
        face: u32,
        #[arg(long, default_value_t = 600)]
        correspondences: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs a self-check suite; exit status 3 on any failed check.
    Validate {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        feat: FeatureGrid,
        #[arg(long, default_value_t = 512)]
        width: u32,
        #[arg(long, default_value_t = 256)]
        height: u32,
        /// Random cases (oracle) or pose pairs (concordance).
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        seed_scene: u64,
        #[arg(long, default_value_t = 2)]
        seed_traj: u64,
        /// Trajectory files for k-stability; five generated ones when omitted.
        #[arg(long)]
        traj: Vec<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        k_hi: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0, 8])]
        query_frames: Vec<usize>,
        /// Rendered clip directory for the correspondence suite.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cmd: Command) -> Result<bool, Error> {
    match cmd {
        Command::Plucker {
            traj,
            width,
            height,
            out,
        } => {
            let poses = io::read_trajectory(&traj)?;
            let grid = GridSpec::new(width, height)?;
            let mut w = create(&out)?;
            let fields: Vec<_> = poses
                .iter()
                .enumerate()
                .map(|(i, p)| plucker_field(p, grid, i))
                .collect();
            for f in &fields {
                let (md, dn) = f.invariant_residuals();
                println!("frame {} max|m.d|={md:e} max|norm(d)-1|={dn:e}", f.frame_index);
            }
            io::write_plucker(&mut w, &fields)?;
            w.flush()?;
        }
        Command::Mask {
            traj,
            feat,
            query_frames,
            mem_budget,
            out,
        } => {
            let poses = io::read_trajectory(&traj)?;
            let params = feat.params()?;
            let queries = if query_frames.is_empty() {
                (0..poses.len()).collect()
            } else {
                query_frames
            };
            if let Some(&q) = queries.iter().find(|&&q| q >= poses.len()) {
                return Err(Error::OutOfRange(format!("query frame {q} of {} frames", poses.len())));
            }
            let required = params.bytes_per_query_frame(poses.len()) * queries.len() as u64;
            if required > mem_budget {
                return Err(Error::MemoryBudget {
                    required,
                    budget: mem_budget,
                });
            }
            let mut queries = queries;
            queries.sort_unstable();
            queries.dedup();
            let masks = queries
                .iter()
                .map(|&i| build_mask(&poses, &params, i))
                .collect::<Result<Vec<_>, _>>()?;
            let hw = params.grid.pixel_count();
            for m in &masks {
                let per_frame: Vec<String> = (0..m.frames())
                    .map(|j| {
                        let bits: usize = (0..hw).map(|q| m.slice_count(q, j)).sum();
                        format!("{:.6}", bits as f64 / (hw * hw) as f64)
                    })
                    .collect();
                println!(
                    "query frame {} density={:.6} per-key-frame=[{}]",
                    m.query_frame(),
                    m.density(),
                    per_frame.join(",")
                );
            }
            let mut w = create(&out)?;
            io::write_sepm(&mut w, &masks)?;
            w.flush()?;
        }
        Command::Epicurve {
            traj,
            frame_i,
            frame_j,
            u,
            v,
            image,
            k,
            mode,
            out,
        } => {
            let poses = io::read_trajectory(&traj)?;
            for f in [frame_i, frame_j] {
                if f >= poses.len() {
                    return Err(Error::OutOfRange(format!("frame {f} of {} frames", poses.len())));
                }
            }
            let img = io::read_ppm(BufReader::new(File::open(&image)?))?;
            let rel = relative_pose(&poses[frame_i], &poses[frame_j]);
            let drawn = io::draw_epicurve(&img, &rel, PixelCoord { u, v }, k, mode.into())?;
            let mut w = create(&out)?;
            io::write_ppm(&mut w, &drawn)?;
            w.flush()?;
        }
        Command::Render {
            seed_scene,
            seed_traj,
            frames,
            frame_count,
            stride,
            width,
            height,
            direct: _,
            via_cubemap,
            face,
            correspondences,
            out,
        } => {
            let grid = GridSpec::new(width, height)?;
            let scene = generate_scene(seed_scene);
            let cfg = TrajectoryConfig {
                frame_count,
                sample: frames,
                sampling: if stride {
                    Sampling::UniformStride
                } else {
                    Sampling::SeededRandom
                },
                ..Default::default()
            };
            let traj = generate_trajectory(&scene, seed_traj, &cfg)?;
            let mode = if via_cubemap {
                RenderMode::ViaCubemap { face }
            } else {
                RenderMode::Direct
            };
            let set = render_clip(&scene, traj, grid, mode, correspondences)?;
            let clip = io::write_frame_set(&out, &set, seed_scene, seed_traj)?;
            println!(
                "wrote {} frames at {}x{} and {} correspondences to {}",
                clip.frames.len(),
                height,
                width,
                set.correspondences.len(),
                out.display()
            );
        }
        Command::Validate {
            suite,
            feat,
            width,
            height,
            cases,
            seed,
            seed_scene,
            seed_traj,
            traj,
            k_hi,
            query_frames,
            dataset,
            out,
        } => {
            let report = run_suite(
                suite,
                feat,
                width,
                height,
                cases,
                seed,
                seed_scene,
                seed_traj,
                &traj,
                k_hi,
                &query_frames,
                dataset,
            )?;
            let mut text = format!(
                "suite {} {}\n",
                report.name,
                if report.passed { "PASS" } else { "FAIL" }
            );
            for line in &report.lines {
                text.push_str(line);
                text.push('\n');
            }
            print!("{text}");
            if let Some(path) = out {
                std::fs::write(path, text)?;
            }
            return Ok(report.passed);
        }
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn run_suite(
    suite: Suite,
    feat: FeatureGrid,
    width: u32,
    height: u32,
    cases: usize,
    seed: u64,
    seed_scene: u64,
    seed_traj: u64,
    traj: &[PathBuf],
    k_hi: usize,
    query_frames: &[usize],
    dataset: Option<PathBuf>,
) -> Result<SuiteReport, Error> {
    let params = feat.params()?;
    Ok(match suite {
        Suite::Roundtrip => validate::roundtrip(&[GridSpec::new(width, height)?]),
        Suite::Concordance => validate::concordance_suite(cases, GridSpec::new(width, height)?, seed),
        Suite::Oracle => {
            let (mut r, report) = validate::oracle_suite(cases, &params, &DepthSweep::default(), seed)?;
            r.lines.extend(report.violations.iter().map(|v| v.to_string()));
            r
        }
        Suite::Correspondence => {
            let (corr, poses, grid) = match dataset {
                Some(dir) => {
                    let clip = io::read_manifest(BufReader::new(File::open(dir.join("manifest.jsonl"))?))?
                        .into_iter()
                        .next()
                        .ok_or_else(|| Error::Format("empty manifest".into()))?;
                    let poses = io::read_trajectory(dir.join(&clip.trajectory))?;
                    let corr = io::read_correspondences(BufReader::new(File::open(dir.join(&clip.correspondences))?))?;
                    (corr, poses, GridSpec::new(clip.width, clip.height)?)
                }
                None => {
                    let grid = GridSpec::new(width, height)?;
                    let scene = generate_scene(seed_scene);
                    let t = generate_trajectory(&scene, seed_traj, &TrajectoryConfig::default())?;
                    let corr = panoepi::scene::extract_correspondences(&scene, &t, grid, 600);
                    (corr, t.poses, grid)
                }
            };
            if let Some(o) = corr
                .iter()
                .flat_map(|c| &c.observations)
                .find(|o| o.frame >= poses.len())
            {
                return Err(Error::OutOfRange(format!("observation of frame {}", o.frame)));
            }
            validate::correspondence_suite(&corr, &poses, grid, &params)
        }
        Suite::KStability => {
            let trajectories = if traj.is_empty() {
                validate::stability_trajectories(&[0, 1, 2, 3, 4], seed)?
            } else {
                traj.iter().map(io::read_trajectory).collect::<Result<Vec<_>, _>>()?
            };
            if let Some(&q) = query_frames
                .iter()
                .find(|&&q| trajectories.iter().any(|t| q >= t.len()))
            {
                return Err(Error::OutOfRange(format!("query frame {q}")));
            }
            validate::k_stability(&trajectories, &params, k_hi, query_frames)?
        }
        Suite::Grad => validate::grad_suite(seed)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io(_) => 4,
                _ => 2,
            })
        }
    }
}
