//! Command scripts for open-loop and goal-directed simulation runs.
//!
//! ```text
//! drive 0.2 0 0 5     # body twist vx vy omega for 5 s
//! wait 1.5
//! goal 3.0 2.0 1.57   # full stack until reached or timeout
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::formats::{floats, read_text};
use crate::geometry::{Pose2D, Twist2D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Drive { twist: Twist2D, seconds: f64 },
    Goal(Pose2D),
}

pub fn parse_script(text: &str, path: &Path) -> Result<Vec<Step>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(h, _)| h).trim();
        if line.is_empty() {
            continue;
        }
        let (cmd, args) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let nonneg = |s: f64| {
            if s >= 0.0 {
                Ok(s)
            } else {
                Err(Error::parse(path, n + 1, "duration must be >= 0"))
            }
        };
        out.push(match cmd {
            "drive" => {
                let v = floats(args, 4, path, n + 1)?;
                Step::Drive {
                    twist: Twist2D::new(v[0], v[1], v[2]),
                    seconds: nonneg(v[3])?,
                }
            }
            "wait" => Step::Drive {
                twist: Twist2D::ZERO,
                seconds: nonneg(floats(args, 1, path, n + 1)?[0])?,
            },
            "goal" => {
                let v = floats(args, 3, path, n + 1)?;
                Step::Goal(Pose2D::new(v[0], v[1], v[2]))
            }
            other => {
                return Err(Error::parse(
                    path,
                    n + 1,
                    format!("unknown command {other:?}"),
                ))
            }
        });
    }
    Ok(out)
}

pub fn load_script(path: &Path) -> Result<Vec<Step>> {
    parse_script(&read_text(path)?, path)
}
