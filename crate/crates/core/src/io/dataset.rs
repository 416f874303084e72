use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_err, write_ppm, write_trajectory};
use crate::error::{Error, Result};
use crate::geometry::{PixelCoord, Vec3};
use crate::scene::{Correspondence, Observation, SceneFrameSet};

/// One clip record of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipManifest {
    pub scene_seed: u64,
    pub trajectory_seed: u64,
    pub width: u32,
    pub height: u32,
    pub sampled_indices: Vec<usize>,
    pub conditional_frame_index: usize,
    pub frames: Vec<String>,
    /// Full trajectory; observation frame numbers index into it.
    pub trajectory: String,
    /// Only the sampled poses, renumbered from 0 in `frames` order.
    pub clip_trajectory: String,
    pub correspondences: String,
}

fn json_line<T: Serialize>(w: &mut impl Write, value: &T) -> Result<()> {
    let s = serde_json::to_string(value).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(w, "{s}")?;
    Ok(())
}

fn json_lines<T: for<'de> Deserialize<'de>>(r: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_manifest(mut w: impl Write, clips: &[ClipManifest]) -> Result<()> {
    clips.iter().try_for_each(|c| json_line(&mut w, c))
}

pub fn read_manifest(r: impl BufRead) -> Result<Vec<ClipManifest>> {
    json_lines(r)
}

#[derive(Serialize, Deserialize)]
struct ObsRecord(usize, f64, f64, bool);

#[derive(Serialize, Deserialize)]
struct CorrRecord {
    point: [f64; 3],
    frames: Vec<ObsRecord>,
}

/// One line per point: `{"point": [x, y, z], "frames": [[frame, u, v, visible], ...]}`.
pub fn write_correspondences(mut w: impl Write, corr: &[Correspondence]) -> Result<()> {
    corr.iter().try_for_each(|c| {
        let rec = CorrRecord {
            point: c.point.into(),
            frames: c
                .observations
                .iter()
                .map(|o| ObsRecord(o.frame, o.pixel.u, o.pixel.v, o.visible))
                .collect(),
        };
        json_line(&mut w, &rec)
    })
}

pub fn read_correspondences(r: impl BufRead) -> Result<Vec<Correspondence>> {
    Ok(json_lines::<CorrRecord>(r)?
        .into_iter()
        .map(|rec| Correspondence {
            point: Vec3::from(rec.point),
            observations: rec
                .frames
                .into_iter()
                .map(|ObsRecord(frame, u, v, visible)| Observation {
                    frame,
                    pixel: PixelCoord { u, v },
                    visible,
                })
                .collect(),
        })
        .collect())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes frames, trajectory, correspondences and a one-clip manifest into
/// `dir`, returning the manifest record.
pub fn write_frame_set(dir: &Path, set: &SceneFrameSet, scene_seed: u64, trajectory_seed: u64) -> Result<ClipManifest> {
    std::fs::create_dir_all(dir)?;
    let frames: Vec<String> = set
        .trajectory
        .sampled_indices
        .iter()
        .map(|i| format!("frame_{i:03}.ppm"))
        .collect();
    for (name, img) in frames.iter().zip(&set.frames) {
        let mut w = create(&dir.join(name))?;
        write_ppm(&mut w, img)?;
        w.flush()?;
    }
    let trajectory = "trajectory.jsonl".to_owned();
    let mut w = create(&dir.join(&trajectory))?;
    write_trajectory(&mut w, &set.trajectory.poses)?;
    w.flush()?;
    let clip_trajectory = "clip_trajectory.jsonl".to_owned();
    let mut w = create(&dir.join(&clip_trajectory))?;
    write_trajectory(&mut w, &set.trajectory.sampled_poses())?;
    w.flush()?;
    let correspondences = "correspondences.jsonl".to_owned();
    let mut w = create(&dir.join(&correspondences))?;
    write_correspondences(&mut w, &set.correspondences)?;
    w.flush()?;
    let clip = ClipManifest {
        scene_seed,
        trajectory_seed,
        width: set.grid.width(),
        height: set.grid.height(),
        sampled_indices: set.trajectory.sampled_indices.clone(),
        conditional_frame_index: set.trajectory.conditional_frame_index,
        frames,
        trajectory,
        clip_trajectory,
        correspondences,
    };
    let mut w = create(&dir.join("manifest.jsonl"))?;
    write_manifest(&mut w, std::slice::from_ref(&clip))?;
    w.flush()?;
    Ok(clip)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correspondence_round_trip() {
        let corr = vec![Correspondence {
            point: Vec3::new(0.1, -2.0, 1.0 / 3.0),
            observations: vec![
                Observation {
                    frame: 0,
                    pixel: PixelCoord { u: 12.25, v: 3.0 / 7.0 },
                    visible: true,
                },
                Observation {
                    frame: 7,
                    pixel: PixelCoord { u: 511.5, v: -0.5 },
                    visible: false,
                },
            ],
        }];
        let mut buf = Vec::new();
        write_correspondences(&mut buf, &corr).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1);
        assert_eq!(read_correspondences(buf.as_slice()).unwrap(), corr);
    }

    #[test]
    fn manifest_round_trip() {
        let clip = ClipManifest {
            scene_seed: 3,
            trajectory_seed: u64::MAX,
            width: 512,
            height: 256,
            sampled_indices: vec![0, 4, 9],
            conditional_frame_index: 1,
            frames: vec!["a.ppm".into(), "b.ppm".into(), "c.ppm".into()],
            trajectory: "trajectory.jsonl".into(),
            clip_trajectory: "clip_trajectory.jsonl".into(),
            correspondences: "correspondences.jsonl".into(),
        };
        let mut buf = Vec::new();
        write_manifest(&mut buf, &[clip.clone(), clip.clone()]).unwrap();
        assert_eq!(read_manifest(buf.as_slice()).unwrap(), vec![clip.clone(), clip]);
        assert!(matches!(read_manifest(&b"{}\n"[..]), Err(Error::Parse { line: 1, .. })));
    }
}
