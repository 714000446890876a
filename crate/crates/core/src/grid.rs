//! Fixed-resolution grids: frame geometry, counting occupancy map and exact
//! cell traversal along rays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridIndex {
    pub col: usize,
    pub row: usize,
}

impl GridIndex {
    pub fn new(col: usize, row: usize) -> Self {
        GridIndex { col, row }
    }
}

/// Placement and extent of a grid in the world frame. `origin` is the pose
/// of the outer corner of cell (0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridFrame {
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub origin: Pose2D,
}

impl GridFrame {
    pub fn new(resolution: f64, width: usize, height: usize, origin: Pose2D) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::Parameter(format!(
                "resolution must be > 0, got {resolution}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Parameter("grid must have at least one cell".into()));
        }
        if !origin.is_finite() {
            return Err(Error::Domain("grid origin"));
        }
        Ok(GridFrame {
            resolution,
            width,
            height,
            origin,
        })
    }

    /// Frame covering `width_m` x `height_m` meters, rounded up to whole cells.
    pub fn with_extent(
        resolution: f64,
        width_m: f64,
        height_m: f64,
        origin: Pose2D,
    ) -> Result<Self> {
        let w = (width_m / resolution - 1e-9).ceil().max(1.0) as usize;
        let h = (height_m / resolution - 1e-9).ceil().max(1.0) as usize;
        GridFrame::new(resolution, w, h, origin)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width_m(&self) -> f64 {
        self.width as f64 * self.resolution
    }

    pub fn height_m(&self) -> f64 {
        self.height as f64 * self.resolution
    }

    #[inline]
    pub fn linear(&self, idx: GridIndex) -> usize {
        idx.row * self.width + idx.col
    }

    #[inline]
    pub fn from_linear(&self, i: usize) -> GridIndex {
        GridIndex::new(i % self.width, i / self.width)
    }

    #[inline]
    pub fn contains(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height
    }

    /// World point to grid-local meters (origin corner at 0, axes along the grid).
    #[inline]
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.origin.x;
        let dy = y - self.origin.y;
        if self.origin.theta == 0.0 {
            return (dx, dy);
        }
        let (s, c) = self.origin.theta.sin_cos();
        (c * dx + s * dy, -s * dx + c * dy)
    }

    #[inline]
    pub fn to_world(&self, lx: f64, ly: f64) -> (f64, f64) {
        if self.origin.theta == 0.0 {
            return (self.origin.x + lx, self.origin.y + ly);
        }
        let (s, c) = self.origin.theta.sin_cos();
        (
            self.origin.x + c * lx - s * ly,
            self.origin.y + s * lx + c * ly,
        )
    }

    /// Unbounded cell coordinates of a world point.
    #[inline]
    pub fn cell_coords(&self, x: f64, y: f64) -> (i64, i64) {
        let (lx, ly) = self.to_local(x, y);
        (
            (lx / self.resolution).floor() as i64,
            (ly / self.resolution).floor() as i64,
        )
    }

    #[inline]
    pub fn cell_of(&self, x: f64, y: f64) -> Option<GridIndex> {
        let (c, r) = self.cell_coords(x, y);
        self.contains(c, r)
            .then(|| GridIndex::new(c as usize, r as usize))
    }

    /// `floor((p - origin) / resolution)` per axis; outside the grid is an error.
    pub fn world_to_grid(&self, x: f64, y: f64) -> Result<GridIndex> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain("position"));
        }
        self.cell_of(x, y).ok_or(Error::OutOfBounds { x, y })
    }

    pub fn cell_center(&self, idx: GridIndex) -> (f64, f64) {
        self.to_world(
            (idx.col as f64 + 0.5) * self.resolution,
            (idx.row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        self.cell_of(x, y).is_some()
    }

    /// In-bounds 8-neighbors with their step length in cells (1 or sqrt 2).
    pub fn neighbors8(&self, idx: GridIndex) -> impl Iterator<Item = (GridIndex, bool)> + '_ {
        const OFFSETS: [(i64, i64); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        OFFSETS.iter().filter_map(move |&(dc, dr)| {
            let c = idx.col as i64 + dc;
            let r = idx.row as i64 + dr;
            self.contains(c, r)
                .then(|| (GridIndex::new(c as usize, r as usize), dc != 0 && dr != 0))
        })
    }

    /// Cells crossed by the segment from `(x, y)` along `angle` (world frame)
    /// up to `max_len` meters, in traversal order.
    pub fn ray(&self, x: f64, y: f64, angle: f64, max_len: f64) -> CellRay {
        let (lx, ly) = self.to_local(x, y);
        CellRay::new(
            lx / self.resolution,
            ly / self.resolution,
            angle - self.origin.theta,
            max_len / self.resolution,
            self.resolution,
        )
    }
}

/// Exact grid traversal (Amanatides & Woo). Yields every cell the ray
/// enters, with the distance in meters at which it is entered; the start
/// cell is entered at 0.
#[derive(Debug, Clone)]
pub struct CellRay {
    col: i64,
    row: i64,
    step_col: i64,
    step_row: i64,
    t_max_col: f64,
    t_max_row: f64,
    t_delta_col: f64,
    t_delta_row: f64,
    t: f64,
    max_t: f64,
    resolution: f64,
    started: bool,
}

impl CellRay {
    fn new(px: f64, py: f64, angle: f64, max_t: f64, resolution: f64) -> Self {
        let (dy, dx) = angle.sin_cos();
        let col = px.floor() as i64;
        let row = py.floor() as i64;
        let (step_col, t_max_col, t_delta_col) = axis_setup(px, col, dx);
        let (step_row, t_max_row, t_delta_row) = axis_setup(py, row, dy);
        CellRay {
            col,
            row,
            step_col,
            step_row,
            t_max_col,
            t_max_row,
            t_delta_col,
            t_delta_row,
            t: 0.0,
            max_t,
            resolution,
            started: false,
        }
    }
}

fn axis_setup(p: f64, cell: i64, d: f64) -> (i64, f64, f64) {
    if d > 0.0 {
        (1, (cell as f64 + 1.0 - p) / d, 1.0 / d)
    } else if d < 0.0 {
        (-1, (p - cell as f64) / -d, -1.0 / d)
    } else {
        (0, f64::INFINITY, f64::INFINITY)
    }
}

impl Iterator for CellRay {
    /// `(col, row, entry distance in meters)`; coordinates may be out of bounds.
    type Item = (i64, i64, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
            return Some((self.col, self.row, 0.0));
        }
        if self.t_max_col < self.t_max_row {
            self.col += self.step_col;
            self.t = self.t_max_col;
            self.t_max_col += self.t_delta_col;
        } else {
            self.row += self.step_row;
            self.t = self.t_max_row;
            self.t_max_row += self.t_delta_row;
        }
        if !(self.t <= self.max_t) {
            return None;
        }
        Some((self.col, self.row, self.t * self.resolution))
    }
}

/// Tri-state classification of an evidence cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

/// Probability thresholds used to classify evidence counters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupancyThresholds {
    pub occupied: f64,
    pub free: f64,
}

impl Default for OccupancyThresholds {
    fn default() -> Self {
        OccupancyThresholds {
            occupied: 0.65,
            free: 0.196,
        }
    }
}

impl OccupancyThresholds {
    pub fn new(free: f64, occupied: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&free) || !(0.0..=1.0).contains(&occupied) || free >= occupied {
            return Err(Error::Parameter(format!(
                "thresholds must satisfy 0 <= free < occupied <= 1, got free={free} occupied={occupied}"
            )));
        }
        Ok(OccupancyThresholds { occupied, free })
    }

    pub fn classify(&self, p: Option<f64>) -> CellState {
        match p {
            None => CellState::Unknown,
            Some(p) if p >= self.occupied => CellState::Occupied,
            Some(p) if p <= self.free => CellState::Free,
            Some(_) => CellState::Unknown,
        }
    }
}

/// Counting occupancy grid: every cell keeps how often it was seen occupied
/// (hit) and seen through (miss).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    frame: GridFrame,
    hits: Vec<u32>,
    misses: Vec<u32>,
}

impl OccupancyGrid {
    /// All cells unknown.
    pub fn new(frame: GridFrame) -> Self {
        OccupancyGrid {
            frame,
            hits: vec![0; frame.len()],
            misses: vec![0; frame.len()],
        }
    }

    pub fn from_counts(frame: GridFrame, hits: Vec<u32>, misses: Vec<u32>) -> Result<Self> {
        if hits.len() != frame.len() || misses.len() != frame.len() {
            return Err(Error::Parameter(
                "counter arrays do not match grid size".into(),
            ));
        }
        Ok(OccupancyGrid {
            frame,
            hits,
            misses,
        })
    }

    /// Grid with definite evidence for every cell: one hit for `true`, one
    /// miss for `false`.
    pub fn from_occupancy(frame: GridFrame, occupied: &[bool]) -> Result<Self> {
        if occupied.len() != frame.len() {
            return Err(Error::Parameter(
                "occupancy mask does not match grid size".into(),
            ));
        }
        let hits = occupied.iter().map(|&o| o as u32).collect();
        let misses = occupied.iter().map(|&o| (!o) as u32).collect();
        Ok(OccupancyGrid {
            frame,
            hits,
            misses,
        })
    }

    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    pub fn resolution(&self) -> f64 {
        self.frame.resolution
    }

    pub fn width(&self) -> usize {
        self.frame.width
    }

    pub fn height(&self) -> usize {
        self.frame.height
    }

    pub fn world_to_grid(&self, x: f64, y: f64) -> Result<GridIndex> {
        self.frame.world_to_grid(x, y)
    }

    pub fn hits(&self) -> &[u32] {
        &self.hits
    }

    pub fn misses(&self) -> &[u32] {
        &self.misses
    }

    pub fn hit_count(&self, idx: GridIndex) -> u32 {
        self.hits[self.frame.linear(idx)]
    }

    pub fn miss_count(&self, idx: GridIndex) -> u32 {
        self.misses[self.frame.linear(idx)]
    }

    #[inline]
    pub fn add_hit(&mut self, i: usize) {
        self.hits[i] = self.hits[i].saturating_add(1);
    }

    #[inline]
    pub fn add_miss(&mut self, i: usize) {
        self.misses[i] = self.misses[i].saturating_add(1);
    }

    /// `hit / (hit + miss)`, or `None` when the cell was never observed.
    #[inline]
    pub fn probability_at(&self, i: usize) -> Option<f64> {
        let h = self.hits[i];
        let total = h as u64 + self.misses[i] as u64;
        (total > 0).then(|| h as f64 / total as f64)
    }

    pub fn probability(&self, idx: GridIndex) -> Option<f64> {
        self.probability_at(self.frame.linear(idx))
    }

    pub fn state(&self, idx: GridIndex, thresholds: &OccupancyThresholds) -> CellState {
        thresholds.classify(self.probability(idx))
    }

    pub fn states(&self, thresholds: &OccupancyThresholds) -> Vec<CellState> {
        (0..self.frame.len())
            .map(|i| thresholds.classify(self.probability_at(i)))
            .collect()
    }

    pub fn is_observed(&self, i: usize) -> bool {
        self.hits[i] > 0 || self.misses[i] > 0
    }

    pub fn observed_count(&self) -> usize {
        (0..self.frame.len())
            .filter(|&i| self.is_observed(i))
            .count()
    }

    /// No cell has any evidence yet.
    pub fn is_blank(&self) -> bool {
        self.hits.iter().all(|&h| h == 0) && self.misses.iter().all(|&m| m == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame(res: f64, w: usize, h: usize) -> GridFrame {
        GridFrame::new(res, w, h, Pose2D::default()).unwrap()
    }

    #[test]
    fn world_to_grid_examples() {
        let f = frame(0.05, 100, 100);
        assert_eq!(f.world_to_grid(0.0, 0.0).unwrap(), GridIndex::new(0, 0));
        assert_eq!(f.world_to_grid(0.26, 0.05).unwrap(), GridIndex::new(5, 1));
        assert!(matches!(
            f.world_to_grid(-0.01, 0.0),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(f.world_to_grid(5.0, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(GridFrame::new(0.0, 10, 10, Pose2D::default()).is_err());
        assert!(GridFrame::new(-0.1, 10, 10, Pose2D::default()).is_err());
    }

    #[test]
    fn extent_rounds_to_cells() {
        let f = GridFrame::with_extent(0.05, 7.0, 5.0, Pose2D::default()).unwrap();
        assert_eq!((f.width, f.height), (140, 100));
    }

    #[test]
    fn ray_along_x_visits_consecutive_cells() {
        let f = frame(0.05, 100, 10);
        let cells: Vec<_> = f.ray(0.0, 0.0, 0.0, 1.0).collect();
        assert_eq!(cells.len(), 21);
        for (i, &(c, r, t)) in cells.iter().enumerate() {
            assert_eq!((c, r), (i as i64, 0));
            assert!((t - i as f64 * 0.05).abs() < 1e-9);
        }
    }

    #[test]
    fn ray_visits_connected_cells() {
        let f = frame(0.1, 50, 50);
        let cells: Vec<_> = f.ray(2.53, 2.47, 0.77, 2.0).collect();
        for w in cells.windows(2) {
            let d = (w[1].0 - w[0].0).abs() + (w[1].1 - w[0].1).abs();
            assert_eq!(d, 1, "4-connected steps");
            assert!(w[1].2 >= w[0].2);
        }
    }

    #[test]
    fn rotated_frame_round_trip() {
        let f = GridFrame::new(0.1, 20, 20, Pose2D::new(1.0, -1.0, 0.5)).unwrap();
        let idx = GridIndex::new(7, 3);
        let (x, y) = f.cell_center(idx);
        assert_eq!(f.world_to_grid(x, y).unwrap(), idx);
    }

    #[test]
    fn thresholds_classify() {
        let t = OccupancyThresholds::default();
        assert_eq!(t.classify(None), CellState::Unknown);
        assert_eq!(t.classify(Some(1.0)), CellState::Occupied);
        assert_eq!(t.classify(Some(0.0)), CellState::Free);
        assert_eq!(t.classify(Some(0.5)), CellState::Unknown);
        assert!(OccupancyThresholds::new(0.7, 0.6).is_err());
    }

    #[test]
    fn counters_and_probability() {
        let mut g = OccupancyGrid::new(frame(0.05, 4, 4));
        assert!(g.is_blank());
        g.add_hit(5);
        g.add_miss(5);
        g.add_miss(5);
        assert_eq!(g.probability_at(5), Some(1.0 / 3.0));
        assert_eq!(g.probability_at(0), None);
        assert_eq!(g.observed_count(), 1);
    }

    proptest! {
        #[test]
        fn cell_center_round_trip(col in 0usize..140, row in 0usize..100, ox in -5.0f64..5.0, oy in -5.0f64..5.0) {
            let f = GridFrame::new(0.05, 140, 100, Pose2D::new(ox, oy, 0.0)).unwrap();
            let idx = GridIndex::new(col, row);
            let (x, y) = f.cell_center(idx);
            prop_assert_eq!(f.world_to_grid(x, y).unwrap(), idx);
        }
    }
}
