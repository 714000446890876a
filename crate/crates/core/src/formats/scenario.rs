//! Benchmark scenario files.
//!
//! ```text
//! benchmark = fbm2          # or tbm4
//! world = apartment.world   # path relative to this file, or
//! builtin = apartment       # apartment | two_door | two_door_blocked
//! start = 1.2 1.2 0
//! goal = 5.0 1.05 0         # repeatable; fbm2 may use random_goals instead
//! random_goals = 5
//! goal_clearance = 0.45
//! rounds = 3
//! top_k = 3
//! checkpoint = door_b rect 2.8 2.5 3.2 3.4
//! ```

use std::path::Path;

use crate::bench::{fixtures, Checkpoint, Fbm2Scenario, GoalSpec, Tbm4Scenario};
use crate::error::{Error, Result};
use crate::formats::world::{load_world, parse_shape};
use crate::formats::{float, floats, key_values, read_text};
use crate::geometry::Pose2D;
use crate::pipeline::StackConfig;
use crate::sim::World;

#[derive(Debug, Clone)]
pub enum Scenario {
    Fbm2(Fbm2Scenario),
    Tbm4(Tbm4Scenario),
}

pub fn builtin_world(name: &str) -> Option<World> {
    match name {
        "apartment" => Some(fixtures::apartment()),
        "two_door" => Some(fixtures::two_door()),
        "two_door_blocked" => Some(fixtures::tbm4(StackConfig::default(), 1).world),
        _ => None,
    }
}

/// Default start pose for a builtin world.
pub fn builtin_start(name: &str) -> Option<Pose2D> {
    match name {
        "apartment" => Some(fixtures::apartment_start()),
        "two_door" | "two_door_blocked" => Some(fixtures::tbm4(StackConfig::default(), 1).start),
        _ => None,
    }
}

fn pose(value: &str, path: &Path, line: usize) -> Result<Pose2D> {
    let v = floats(value, 3, path, line)?;
    Ok(Pose2D::new(v[0], v[1], v[2]))
}

fn count(value: &str, path: &Path, line: usize) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::parse(path, line, format!("expected a count, got {value:?}")))
}

pub fn parse_scenario(text: &str, path: &Path, config: StackConfig) -> Result<Scenario> {
    let mut benchmark = None;
    let mut world = None;
    let mut start = None;
    let mut goals = Vec::new();
    let mut random = None;
    let mut clearance = 0.45;
    let mut rounds = 1;
    let mut top_k = 3;
    let mut checkpoints = Vec::new();
    for e in key_values(text, path)? {
        let (v, line) = (e.value.as_str(), e.line);
        match e.key.as_str() {
            "benchmark" => match v {
                "fbm2" | "tbm4" => benchmark = Some(v.to_string()),
                _ => return Err(Error::parse(path, line, format!("unknown benchmark {v:?}"))),
            },
            "world" => {
                let p = path.parent().unwrap_or(Path::new("")).join(v);
                world = Some(load_world(&p)?);
            }
            "builtin" => {
                world = Some(builtin_world(v).ok_or_else(|| {
                    Error::parse(path, line, format!("unknown builtin world {v:?}"))
                })?)
            }
            "start" => start = Some(pose(v, path, line)?),
            "goal" => goals.push(pose(v, path, line)?),
            "random_goals" => random = Some(count(v, path, line)?),
            "goal_clearance" => clearance = float(v, path, line)?,
            "rounds" => rounds = count(v, path, line)?,
            "top_k" => top_k = count(v, path, line)?,
            "checkpoint" => {
                let (name, shape) = v.split_once(char::is_whitespace).ok_or_else(|| {
                    Error::parse(path, line, "checkpoint needs a name and a shape")
                })?;
                let (region, rest) = parse_shape(shape, path, line)?;
                if !rest.is_empty() {
                    return Err(Error::parse(
                        path,
                        line,
                        "unexpected tokens after checkpoint shape",
                    ));
                }
                checkpoints.push(Checkpoint {
                    name: name.to_string(),
                    region,
                });
            }
            other => return Err(Error::parse(path, line, format!("unknown key {other:?}"))),
        }
    }
    let missing = |k: &str| Error::parse(path, 0, format!("missing key: {k}"));
    let benchmark = benchmark.ok_or_else(|| missing("benchmark"))?;
    let world = world.ok_or_else(|| missing("world or builtin"))?;
    let start = start.ok_or_else(|| missing("start"))?;
    if rounds == 0 {
        return Err(Error::parse(path, 0, "rounds must be >= 1"));
    }
    if benchmark == "fbm2" {
        let goals = match (random, goals.is_empty()) {
            (Some(n), true) => GoalSpec::Random {
                count: n,
                clearance,
            },
            (None, false) => GoalSpec::Fixed(goals),
            (Some(_), false) => {
                return Err(Error::parse(
                    path,
                    0,
                    "use either goal or random_goals, not both",
                ))
            }
            (None, true) => return Err(missing("goal or random_goals")),
        };
        Ok(Scenario::Fbm2(Fbm2Scenario {
            world,
            start,
            goals,
            rounds,
            top_k,
            config,
        }))
    } else {
        if goals.is_empty() {
            return Err(missing("goal"));
        }
        Ok(Scenario::Tbm4(Tbm4Scenario {
            world,
            start,
            goals,
            checkpoints,
            rounds,
            config,
        }))
    }
}

pub fn load_scenario(path: &Path, config: StackConfig) -> Result<Scenario> {
    parse_scenario(&read_text(path)?, path, config)
}
