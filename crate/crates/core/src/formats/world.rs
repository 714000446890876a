//! World files: a map sidecar whose image has no unknown pixels, plus
//! optional scheduled obstacles.
//!
//! ```text
//! obstacle = rect 2.8 0.55 3.2 1.55 appear=10 disappear=20
//! obstacle = disc 1.5 2.0 0.3
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::formats::map::{load_map_with_rest, save_map_with};
use crate::formats::{floats, Entry};
use crate::grid::OccupancyThresholds;
use crate::sim::{Shape, World};

/// Parses `rect x0 y0 x1 y1` or `disc x y r`, returning the shape and the
/// remaining tokens.
pub fn parse_shape<'a>(value: &'a str, path: &Path, line: usize) -> Result<(Shape, Vec<&'a str>)> {
    let mut tokens = value.split_ascii_whitespace();
    let kind = tokens
        .next()
        .ok_or_else(|| Error::parse(path, line, "missing shape"))?;
    let n = match kind {
        "rect" => 4,
        "disc" => 3,
        other => return Err(Error::parse(path, line, format!("unknown shape {other:?}"))),
    };
    let rest: Vec<&str> = tokens.collect();
    if rest.len() < n {
        return Err(Error::parse(
            path,
            line,
            format!("{kind} needs {n} numbers"),
        ));
    }
    let v = floats(&rest[..n].join(" "), n, path, line)?;
    let shape = match kind {
        "rect" => Shape::rect(v[0], v[1], v[2], v[3]),
        _ => {
            if v[2] <= 0.0 {
                return Err(Error::parse(path, line, "disc radius must be > 0"));
            }
            Shape::disc(v[0], v[1], v[2])
        }
    };
    Ok((shape, rest[n..].to_vec()))
}

pub fn format_shape(shape: &Shape) -> String {
    match *shape {
        Shape::Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        } => format!("rect {min_x} {min_y} {max_x} {max_y}"),
        Shape::Disc { x, y, radius } => format!("disc {x} {y} {radius}"),
    }
}

fn apply_obstacle(world: &mut World, e: &Entry, path: &Path) -> Result<()> {
    let (shape, rest) = parse_shape(&e.value, path, e.line)?;
    let (mut appear, mut disappear) = (None, None);
    for opt in rest {
        let (k, v) = opt.split_once('=').ok_or_else(|| {
            Error::parse(path, e.line, format!("expected key=value, got {opt:?}"))
        })?;
        let t = floats(v, 1, path, e.line)?[0];
        match k {
            "appear" => appear = Some(t),
            "disappear" => disappear = Some(t),
            _ => {
                return Err(Error::parse(
                    path,
                    e.line,
                    format!("unknown obstacle option {k:?}"),
                ))
            }
        }
    }
    world
        .spawn_obstacle(shape, appear, disappear)
        .map_err(|err| Error::parse(path, e.line, err.to_string()))?;
    Ok(())
}

pub fn load_world(path: &Path) -> Result<World> {
    let (grid, _, rest) = load_map_with_rest(path)?;
    let mut world = World::new(grid).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    for e in rest {
        match e.key.as_str() {
            "obstacle" => apply_obstacle(&mut world, &e, path)?,
            other => return Err(Error::parse(path, e.line, format!("unknown key {other:?}"))),
        }
    }
    Ok(world)
}

pub fn save_world(path: &Path, world: &World) -> Result<()> {
    let mut extra = String::new();
    for o in world.obstacles() {
        let _ = write!(extra, "obstacle = {}", format_shape(&o.shape));
        if let Some(t) = o.appear {
            let _ = write!(extra, " appear={t}");
        }
        if let Some(t) = o.disappear {
            let _ = write!(extra, " disappear={t}");
        }
        extra.push('\n');
    }
    save_map_with(
        path,
        world.static_grid(),
        &OccupancyThresholds::default(),
        &extra,
    )
}
