//! Timestamped pose sequences and their text formats.
//!
//! * native: `timestamp x y theta` per line.
//! * kitti: the top 3×4 of the SE(3) embedding, row-major, 12 numbers per line. The format
//!   has no timestamps; reading one assigns the frame index as timestamp.
//!
//! Blank lines and lines starting with `#` are skipped on read. Floats are written in
//! shortest round-trip form.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{write_atomic, IoError};
use crate::geometry::Pose2;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryEstimate {
    entries: Vec<(f64, Pose2)>,
}

impl TrajectoryEstimate {
    pub fn new(entries: Vec<(f64, Pose2)>) -> Result<Self, String> {
        let mut out = Self::default();
        for (t, p) in entries {
            out.push(t, p)?;
        }
        Ok(out)
    }

    /// Appends a pose; its timestamp must exceed the last one.
    pub fn push(&mut self, timestamp: f64, pose: Pose2) -> Result<(), String> {
        if !timestamp.is_finite() || !pose.is_finite() {
            return Err("timestamp and pose must be finite".into());
        }
        if let Some((last, _)) = self.entries.last() {
            if !(timestamp > *last) {
                return Err(format!("timestamp {timestamp} does not follow {last}"));
            }
        }
        self.entries.push((timestamp, pose));
        Ok(())
    }

    pub fn entries(&self) -> &[(f64, Pose2)] {
        &self.entries
    }

    pub fn poses(&self) -> impl Iterator<Item = Pose2> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Left-composes every pose with `t`.
    pub fn transformed(&self, t: &Pose2) -> TrajectoryEstimate {
        TrajectoryEstimate {
            entries: self.entries.iter().map(|(s, p)| (*s, t.compose(p))).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrajectoryFormat {
    #[default]
    Native,
    Kitti,
}

impl fmt::Display for TrajectoryFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrajectoryFormat::Native => "native",
            TrajectoryFormat::Kitti => "kitti",
        })
    }
}

impl FromStr for TrajectoryFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "native" => Ok(TrajectoryFormat::Native),
            "kitti" => Ok(TrajectoryFormat::Kitti),
            other => Err(format!("unknown trajectory format `{other}` (expected native or kitti)")),
        }
    }
}

pub fn trajectory_to_string(traj: &TrajectoryEstimate, format: TrajectoryFormat) -> String {
    let mut out = String::new();
    for (t, p) in traj.entries() {
        match format {
            TrajectoryFormat::Native => {
                let _ = writeln!(out, "{} {} {} {}", t, p.x, p.y, p.theta);
            }
            TrajectoryFormat::Kitti => {
                let (s, c) = p.theta.sin_cos();
                // `+ 0.0` turns -0 into 0.
                let _ = writeln!(
                    out,
                    "{} {} 0 {} {} {} 0 {} 0 0 1 0",
                    c + 0.0,
                    -s + 0.0,
                    p.x + 0.0,
                    s + 0.0,
                    c + 0.0,
                    p.y + 0.0
                );
            }
        }
    }
    out
}

pub fn write_trajectory(
    traj: &TrajectoryEstimate,
    path: &Path,
    format: TrajectoryFormat,
) -> Result<(), IoError> {
    write_atomic(path, trajectory_to_string(traj, format).as_bytes())
}

/// Reads a trajectory file. With `format = None` the format is inferred from the field
/// count of the first data line.
pub fn read_trajectory(
    path: &Path,
    format: Option<TrajectoryFormat>,
) -> Result<TrajectoryEstimate, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| IoError::MalformedFile {
        offset: e.valid_up_to() as u64,
        reason: "not valid UTF-8".into(),
    })?;
    parse_trajectory(text, format)
}

pub fn parse_trajectory(
    text: &str,
    format: Option<TrajectoryFormat>,
) -> Result<TrajectoryEstimate, IoError> {
    let mut traj = TrajectoryEstimate::default();
    let mut format = format;
    let mut frame = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let bad = |reason: String| IoError::MalformedLine { line, reason };
        let values = content
            .split_whitespace()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("`{f}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>, IoError>>()?;
        let fmt = *format.get_or_insert(match values.len() {
            12 => TrajectoryFormat::Kitti,
            _ => TrajectoryFormat::Native,
        });
        let (t, pose) = match fmt {
            TrajectoryFormat::Native => {
                if values.len() != 4 {
                    return Err(bad(format!("expected 4 fields, found {}", values.len())));
                }
                (values[0], Pose2::new(values[1], values[2], values[3]))
            }
            TrajectoryFormat::Kitti => {
                if values.len() != 12 {
                    return Err(bad(format!("expected 12 fields, found {}", values.len())));
                }
                let theta = values[4].atan2(values[0]);
                (frame as f64, Pose2::new(values[3], values[7], theta))
            }
        };
        traj.push(t, pose).map_err(bad)?;
        frame += 1;
    }
    Ok(traj)
}
