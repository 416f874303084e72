use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::parse_err;
use crate::error::{Error, Result};
use crate::geometry::{CameraPose, Convention, Rotation3, Vec3};

/// One line of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub frame: usize,
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
}

impl TrajectoryRecord {
    pub fn from_pose(frame: usize, pose: &CameraPose) -> Self {
        Self {
            frame,
            r: pose.rotation.to_row_major(),
            t: pose.translation.into(),
            convention: Some(pose.convention.tag().to_owned()),
        }
    }
}

/// Parses JSON-lines trajectory text. Blank lines and `#` comments are
/// skipped; frames must appear in order starting at 0.
pub fn parse_trajectory(reader: impl BufRead) -> Result<Vec<CameraPose>> {
    let mut poses = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let rec: TrajectoryRecord = serde_json::from_str(text).map_err(|e| parse_err(line_no, e.to_string()))?;
        let tag = rec.convention.ok_or(Error::ConventionMissing { line: line_no })?;
        let convention =
            Convention::from_tag(&tag).ok_or_else(|| parse_err(line_no, format!("unknown convention {tag:?}")))?;
        if rec.frame != poses.len() {
            return Err(Error::InvalidFrame {
                frame: rec.frame,
                message: format!("expected frame {} on line {line_no}", poses.len()),
            });
        }
        if rec.r.iter().chain(&rec.t).any(|x| !x.is_finite()) {
            return Err(Error::InvalidFrame {
                frame: rec.frame,
                message: "non-finite value".into(),
            });
        }
        let rotation = Rotation3::from_row_major(rec.r).map_err(|e| Error::InvalidFrame {
            frame: rec.frame,
            message: e.to_string(),
        })?;
        poses.push(CameraPose::new(rotation, Vec3::from(rec.t), convention));
    }
    Ok(poses)
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<CameraPose>> {
    parse_trajectory(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Shortest round-trip float formatting, so re-reading is lossless.
pub fn write_trajectory(mut w: impl Write, poses: &[CameraPose]) -> Result<()> {
    for (i, pose) in poses.iter().enumerate() {
        let line =
            serde_json::to_string(&TrajectoryRecord::from_pose(i, pose)).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<CameraPose>> {
        parse_trajectory(text.as_bytes())
    }

    #[test]
    fn round_trip_is_lossless() {
        let poses = vec![
            CameraPose::identity(Convention::CamToWorld),
            CameraPose::new(
                Rotation3::from_axis_angle(&Vec3::new(0.3, -1.0, 0.2), 0.7),
                Vec3::new(0.1, 1.0 / 3.0, -2.5e-7),
                Convention::WorldToCam,
            ),
        ];
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &poses).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), poses);
    }

    #[test]
    fn reports_line_numbers() {
        let ok = r#"{"frame":0,"R":[1,0,0,0,1,0,0,0,1],"t":[0,0,0],"convention":"c2w"}"#;
        let err = parse(&format!("{ok}\n\n{{\"frame\":1,\"R\":[1,0]}}\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn missing_convention() {
        let text = r#"{"frame":0,"R":[1,0,0,0,1,0,0,0,1],"t":[0,0,0]}"#;
        assert!(matches!(parse(text).unwrap_err(), Error::ConventionMissing { line: 1 }));
        let text = r#"{"frame":0,"R":[1,0,0,0,1,0,0,0,1],"t":[0,0,0],"convention":"cam"}"#;
        assert!(matches!(parse(text).unwrap_err(), Error::Parse { line: 1, .. }));
    }

    #[test]
    fn rejects_bad_rotation_with_frame() {
        let text = concat!(
            r#"{"frame":0,"R":[1,0,0,0,1,0,0,0,1],"t":[0,0,0],"convention":"c2w"}"#,
            "\n",
            r#"{"frame":1,"R":[1,0,0,0,1,0,0,0,1.0001],"t":[0,0,0],"convention":"c2w"}"#
        );
        assert!(matches!(parse(text).unwrap_err(), Error::InvalidFrame { frame: 1, .. }));
        // Within tolerance is accepted.
        let text = r#"{"frame":0,"R":[1,0,0,0,1,0,0,0,1.000000001],"t":[0,0,0],"convention":"w2c"}"#;
        assert_eq!(parse(text).unwrap().len(), 1);
    }

    #[test]
    fn frames_must_be_sequential() {
        let text = r#"{"frame":2,"R":[1,0,0,0,1,0,0,0,1],"t":[0,0,0],"convention":"c2w"}"#;
        assert!(matches!(parse(text).unwrap_err(), Error::InvalidFrame { frame: 2, .. }));
    }
}
