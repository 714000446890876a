//! Trajectory files: one `t x y theta` line per pose.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::formats::{floats, read_text, write_bytes};
use crate::geometry::Pose2D;

pub fn format_trajectory(poses: &[(f64, Pose2D)]) -> String {
    let mut s = String::from("# t x y theta\n");
    for (t, p) in poses {
        let _ = writeln!(s, "{t} {} {} {}", p.x, p.y, p.theta);
    }
    s
}

pub fn parse_trajectory(text: &str, path: &Path) -> Result<Vec<(f64, Pose2D)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = floats(line, 4, path, n + 1)?;
        if out.last().is_some_and(|&(t, _)| v[0] < t) {
            return Err(Error::parse(path, n + 1, "time goes backwards"));
        }
        out.push((
            v[0],
            Pose2D {
                x: v[1],
                y: v[2],
                theta: v[3],
            },
        ));
    }
    Ok(out)
}

pub fn save_trajectory(path: &Path, poses: &[(f64, Pose2D)]) -> Result<()> {
    write_bytes(path, format_trajectory(poses).as_bytes())
}

pub fn load_trajectory(path: &Path) -> Result<Vec<(f64, Pose2D)>> {
    parse_trajectory(&read_text(path)?, path)
}
