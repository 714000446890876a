//! Map rendering to binary PPM (P6): unknown gray, free white, occupied
//! black, with polylines drawn over it.

use crate::formats::map::{FREE_PIXEL, OCCUPIED_PIXEL, UNKNOWN_PIXEL};
use crate::grid::{CellState, OccupancyGrid, OccupancyThresholds};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// RGB triples, top row first.
    pub rgb: Vec<u8>,
}

impl Image {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            let i = 3 * (y as usize * self.width + x as usize);
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }
}

pub struct Overlay<'a> {
    pub points: &'a [(f64, f64)],
    pub color: [u8; 3],
}

pub const TRAJECTORY_COLOR: [u8; 3] = [220, 30, 30];
pub const PATH_COLOR: [u8; 3] = [30, 90, 220];

/// One pixel per cell.
pub fn render_map(
    grid: &OccupancyGrid,
    thresholds: &OccupancyThresholds,
    overlays: &[Overlay<'_>],
) -> Image {
    let f = *grid.frame();
    let states = grid.states(thresholds);
    let mut img = Image {
        width: f.width,
        height: f.height,
        rgb: Vec::with_capacity(3 * f.len()),
    };
    for row in (0..f.height).rev() {
        for s in &states[row * f.width..(row + 1) * f.width] {
            let v = match s {
                CellState::Occupied => OCCUPIED_PIXEL,
                CellState::Free => FREE_PIXEL,
                CellState::Unknown => UNKNOWN_PIXEL,
            };
            img.rgb.extend_from_slice(&[v, v, v]);
        }
    }
    let to_px = |(x, y): (f64, f64)| {
        let (c, r) = f.cell_coords(x, y);
        (c, f.height as i64 - 1 - r)
    };
    for o in overlays {
        let mut prev = None;
        for &p in o.points {
            let cur = to_px(p);
            match prev {
                Some(a) => line(&mut img, a, cur, o.color),
                None => img.put(cur.0, cur.1, o.color),
            }
            prev = Some(cur);
        }
    }
    img
}

/// Bresenham segment, endpoints included.
fn line(img: &mut Image, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), c: [u8; 3]) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        img.put(x0, y0, c);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}
