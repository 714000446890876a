//! Occupancy maps on disk: a binary PGM image (P5, maxval 255) plus a
//! key=value sidecar.
//!
//! ```text
//! image = lab.pgm
//! resolution = 0.05
//! origin_x = 0
//! origin_y = 0
//! origin_theta = 0
//! occupied_thresh = 0.65
//! free_thresh = 0.196
//! ```
//!
//! Pixels: occupied 0, free 255, unknown 128. On load, values below 100
//! are occupied, above 155 free, and the band 100..=155 unknown. The first
//! image row is the top of the map (largest y).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::formats::{float, key_values, read_text, write_bytes, Entry};
use crate::geometry::Pose2D;
use crate::grid::{CellState, GridFrame, OccupancyGrid, OccupancyThresholds};

pub const OCCUPIED_PIXEL: u8 = 0;
pub const FREE_PIXEL: u8 = 255;
pub const UNKNOWN_PIXEL: u8 = 128;

pub fn pixel_state(v: u8) -> CellState {
    match v {
        0..=99 => CellState::Occupied,
        100..=155 => CellState::Unknown,
        _ => CellState::Free,
    }
}

fn state_pixel(s: CellState) -> u8 {
    match s {
        CellState::Occupied => OCCUPIED_PIXEL,
        CellState::Free => FREE_PIXEL,
        CellState::Unknown => UNKNOWN_PIXEL,
    }
}

/// Row-major pixels, top row first.
pub fn grid_pixels(grid: &OccupancyGrid, thresholds: &OccupancyThresholds) -> Vec<u8> {
    let f = grid.frame();
    let states = grid.states(thresholds);
    let mut px = Vec::with_capacity(f.len());
    for row in (0..f.height).rev() {
        px.extend(
            states[row * f.width..(row + 1) * f.width]
                .iter()
                .map(|&s| state_pixel(s)),
        );
    }
    px
}

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Decodes a binary PGM with maxval up to 255, rescaling to 0..=255.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let mut pos = 0;
    let mut line = 1;
    let mut token = |pos: &mut usize| -> Result<String> {
        loop {
            match bytes.get(*pos) {
                Some(b'#') => {
                    while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                        *pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => {
                    if *b == b'\n' {
                        line += 1;
                    }
                    *pos += 1;
                }
                Some(_) => break,
                None => return Err(Error::parse(path, line, "truncated PGM header")),
            }
        }
        let start = *pos;
        while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            *pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = token(&mut pos)?;
    if magic != "P5" {
        return Err(Error::parse(
            path,
            1,
            format!("expected P5 magic, got {magic:?}"),
        ));
    }
    let mut number = |pos: &mut usize, what: &str| -> Result<usize> {
        let t = token(pos)?;
        t.parse()
            .map_err(|_| Error::parse(path, 1, format!("invalid {what} {t:?}")))
    };
    let width = number(&mut pos, "width")?;
    let height = number(&mut pos, "height")?;
    let maxval = number(&mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::parse(path, 1, "image has no pixels"));
    }
    if !(1..=255).contains(&maxval) {
        return Err(Error::parse(
            path,
            1,
            format!("unsupported maxval {maxval}"),
        ));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::parse(path, 1, "image too large"))?;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| Error::parse(path, 1, format!("expected {n} pixel bytes")))?;
    let pixels = raster
        .iter()
        .map(|&v| ((v as usize * 255 + maxval / 2) / maxval).min(255) as u8)
        .collect();
    Ok((width, height, pixels))
}

/// Grid with one count of evidence per classified pixel.
pub fn pixels_to_grid(frame: GridFrame, pixels: &[u8]) -> Result<OccupancyGrid> {
    if pixels.len() != frame.len() {
        return Err(Error::Parameter(
            "pixel count does not match grid size".into(),
        ));
    }
    let mut hits = vec![0; frame.len()];
    let mut misses = vec![0; frame.len()];
    for (k, &v) in pixels.iter().enumerate() {
        let row = frame.height - 1 - k / frame.width;
        let i = row * frame.width + k % frame.width;
        match pixel_state(v) {
            CellState::Occupied => hits[i] = 1,
            CellState::Free => misses[i] = 1,
            CellState::Unknown => {}
        }
    }
    OccupancyGrid::from_counts(frame, hits, misses)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapHeader {
    /// Image path as written in the sidecar, relative to the sidecar's directory.
    pub image: PathBuf,
    pub resolution: f64,
    pub origin: Pose2D,
    pub thresholds: OccupancyThresholds,
}

impl MapHeader {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "image = {}", self.image.display());
        let _ = writeln!(s, "resolution = {}", self.resolution);
        let _ = writeln!(s, "origin_x = {}", self.origin.x);
        let _ = writeln!(s, "origin_y = {}", self.origin.y);
        let _ = writeln!(s, "origin_theta = {}", self.origin.theta);
        let _ = writeln!(s, "occupied_thresh = {}", self.thresholds.occupied);
        let _ = writeln!(s, "free_thresh = {}", self.thresholds.free);
        s
    }

    /// Reads the map keys from sidecar entries. Keys it does not know are
    /// returned for the caller (world files add obstacles).
    pub fn from_entries(entries: Vec<Entry>, path: &Path) -> Result<(Self, Vec<Entry>)> {
        let mut image = None;
        let mut resolution = None;
        let mut origin = Pose2D::default();
        let mut thresholds = OccupancyThresholds::default();
        let mut rest = Vec::new();
        for e in entries {
            let v = &e.value;
            match e.key.as_str() {
                "image" => image = Some(PathBuf::from(v)),
                "resolution" => resolution = Some(float(v, path, e.line)?),
                "origin_x" => origin.x = float(v, path, e.line)?,
                "origin_y" => origin.y = float(v, path, e.line)?,
                "origin_theta" => origin.theta = float(v, path, e.line)?,
                "occupied_thresh" => thresholds.occupied = float(v, path, e.line)?,
                "free_thresh" => thresholds.free = float(v, path, e.line)?,
                _ => rest.push(e),
            }
        }
        let image = image.ok_or_else(|| Error::parse(path, 0, "missing key: image"))?;
        let resolution =
            resolution.ok_or_else(|| Error::parse(path, 0, "missing key: resolution"))?;
        let thresholds = OccupancyThresholds::new(thresholds.free, thresholds.occupied)
            .map_err(|e| Error::parse(path, 0, e.to_string()))?;
        Ok((
            MapHeader {
                image,
                resolution,
                origin,
                thresholds,
            },
            rest,
        ))
    }
}

fn image_path_for(sidecar: &Path) -> PathBuf {
    sidecar.with_extension("pgm")
}

fn resolve(sidecar: &Path, image: &Path) -> PathBuf {
    if image.is_absolute() {
        image.to_path_buf()
    } else {
        sidecar.parent().unwrap_or(Path::new("")).join(image)
    }
}

/// Writes `<sidecar>` and the image next to it (same stem, `.pgm`).
pub fn save_map(
    sidecar: &Path,
    grid: &OccupancyGrid,
    thresholds: &OccupancyThresholds,
) -> Result<()> {
    save_map_with(sidecar, grid, thresholds, "")
}

pub(crate) fn save_map_with(
    sidecar: &Path,
    grid: &OccupancyGrid,
    thresholds: &OccupancyThresholds,
    extra: &str,
) -> Result<()> {
    let image = image_path_for(sidecar);
    let f = grid.frame();
    write_bytes(
        &image,
        &encode_pgm(f.width, f.height, &grid_pixels(grid, thresholds)),
    )?;
    let header = MapHeader {
        image: PathBuf::from(image.file_name().expect("image has a file name")),
        resolution: f.resolution,
        origin: f.origin,
        thresholds: *thresholds,
    };
    write_bytes(sidecar, format!("{}{extra}", header.to_text()).as_bytes())
}

/// Loads a map; also returns the sidecar entries the map reader did not use.
pub(crate) fn load_map_with_rest(sidecar: &Path) -> Result<(OccupancyGrid, MapHeader, Vec<Entry>)> {
    let entries = key_values(&read_text(sidecar)?, sidecar)?;
    let (header, rest) = MapHeader::from_entries(entries, sidecar)?;
    let image = resolve(sidecar, &header.image);
    let bytes = std::fs::read(&image).map_err(|e| Error::io(&image, e))?;
    let (w, h, pixels) = decode_pgm(&bytes, &image)?;
    let frame = GridFrame::new(header.resolution, w, h, header.origin)
        .map_err(|e| Error::parse(sidecar, 0, e.to_string()))?;
    Ok((pixels_to_grid(frame, &pixels)?, header, rest))
}

pub fn load_map(sidecar: &Path) -> Result<(OccupancyGrid, OccupancyThresholds)> {
    let (grid, header, rest) = load_map_with_rest(sidecar)?;
    if let Some(e) = rest.first() {
        return Err(Error::parse(
            sidecar,
            e.line,
            format!("unknown key {:?}", e.key),
        ));
    }
    Ok((grid, header.thresholds))
}
