//! Path-transform navigation: scan overlay onto the map, exact Euclidean
//! obstacle distances, Dijkstra propagation of distance-plus-danger cost from
//! the goal, steepest-descent path extraction and an omnidirectional carrot
//! follower, tied together by a replanning [`Navigator`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, pose_error, Pose2D, Twist2D};
use crate::grid::{CellState, GridFrame, GridIndex, OccupancyGrid, OccupancyThresholds};
use crate::scan::LaserScan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavConfig {
    pub robot_radius: f64,
    /// Weight of the danger term relative to path length.
    pub clearance_weight: f64,
    /// Obstacle distance below which cells carry danger cost.
    pub danger_horizon: f64,
    /// Seconds a path must stay blocked before replanning.
    pub blocked_interval: f64,
    pub goal_tolerance_trans: f64,
    pub goal_tolerance_rot: f64,
    pub max_speed: f64,
    pub max_omega: f64,
    pub lookahead: f64,
    /// Speed per meter of remaining distance (1/s).
    pub linear_gain: f64,
    /// Turn rate per radian of heading error (1/s).
    pub angular_gain: f64,
    pub thresholds: OccupancyThresholds,
}

impl Default for NavConfig {
    fn default() -> Self {
        NavConfig {
            robot_radius: 0.28,
            clearance_weight: 2.0,
            danger_horizon: 0.5,
            blocked_interval: 2.0,
            goal_tolerance_trans: 0.05,
            goal_tolerance_rot: 0.05,
            max_speed: 0.3,
            max_omega: 1.0,
            lookahead: 0.3,
            linear_gain: 1.0,
            angular_gain: 1.5,
            thresholds: OccupancyThresholds::default(),
        }
    }
}

impl NavConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("robot_radius", self.robot_radius),
            ("danger_horizon", self.danger_horizon),
            ("blocked_interval", self.blocked_interval),
            ("goal_tolerance_trans", self.goal_tolerance_trans),
            ("goal_tolerance_rot", self.goal_tolerance_rot),
            ("max_speed", self.max_speed),
            ("max_omega", self.max_omega),
            ("lookahead", self.lookahead),
            ("linear_gain", self.linear_gain),
            ("angular_gain", self.angular_gain),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.clearance_weight.is_finite() && self.clearance_weight >= 0.0) {
            return Err(Error::Config("clearance_weight must be >= 0".into()));
        }
        OccupancyThresholds::new(self.thresholds.free, self.thresholds.occupied)?;
        Ok(())
    }
}

/// Tri-state grid the planner works on.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningGrid {
    frame: GridFrame,
    cells: Vec<CellState>,
}

impl PlanningGrid {
    pub fn new(frame: GridFrame, cells: Vec<CellState>) -> Result<Self> {
        if cells.len() != frame.len() {
            return Err(Error::Parameter(
                "cell array does not match grid size".into(),
            ));
        }
        Ok(PlanningGrid { frame, cells })
    }

    pub fn from_map(map: &OccupancyGrid, thresholds: &OccupancyThresholds) -> Self {
        PlanningGrid {
            frame: *map.frame(),
            cells: map.states(thresholds),
        }
    }

    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn state(&self, idx: GridIndex) -> CellState {
        self.cells[self.frame.linear(idx)]
    }

    pub fn set(&mut self, idx: GridIndex, state: CellState) {
        let i = self.frame.linear(idx);
        self.cells[i] = state;
    }

    /// Copy with the scan laid over it: cells a valid beam crosses become
    /// free, then every endpoint cell becomes occupied.
    pub fn with_scan(&self, scan: &LaserScan, pose: &Pose2D) -> PlanningGrid {
        let mut out = self.clone();
        let frame = self.frame;
        let half_cell = frame.resolution / 2.0;
        let mut endpoints = Vec::new();
        for (i, reading) in scan.ranges.iter().enumerate() {
            let Some(r) = reading else { continue };
            let angle = pose.theta + scan.angle(i);
            let mut last = None;
            for (col, row, _) in frame.ray(pose.x, pose.y, angle, r + half_cell) {
                if let Some((c, r)) = last {
                    if frame.contains(c, r) {
                        out.cells[r as usize * frame.width + c as usize] = CellState::Free;
                    }
                }
                last = Some((col, row));
            }
            if let Some((c, r)) = last {
                if frame.contains(c, r) {
                    endpoints.push(r as usize * frame.width + c as usize);
                }
            }
        }
        for i in endpoints {
            out.cells[i] = CellState::Occupied;
        }
        out
    }
}

/// Planning grid for one cycle: the map with the current scan merged in.
/// The map itself is not modified.
pub fn merge_scan(
    static_map: &OccupancyGrid,
    scan: &LaserScan,
    pose: &Pose2D,
    thresholds: &OccupancyThresholds,
) -> PlanningGrid {
    PlanningGrid::from_map(static_map, thresholds).with_scan(scan, pose)
}

/// Per-cell Euclidean distance (meters, center to center) to the nearest
/// non-free cell; `f64::INFINITY` when the grid has none.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    frame: GridFrame,
    meters: Vec<f64>,
}

impl DistanceField {
    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    pub fn values(&self) -> &[f64] {
        &self.meters
    }

    pub fn at(&self, idx: GridIndex) -> f64 {
        self.meters[self.frame.linear(idx)]
    }
}

const FAR: f64 = 1e20;

/// Squared 1-D distance transform of a sampled function (Felzenszwalb &
/// Huttenlocher lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s =
                ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and the new parabola dominates everywhere
                v[0] = q;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance transform. Occupied and unknown cells are 0.
pub fn obstacle_transform(grid: &PlanningGrid) -> DistanceField {
    let frame = grid.frame;
    let (w, h) = (frame.width, frame.height);
    let mut d2: Vec<f64> = grid
        .cells
        .iter()
        .map(|&c| if c == CellState::Free { FAR } else { 0.0 })
        .collect();
    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for row in 0..h {
        f[..w].copy_from_slice(&d2[row * w..(row + 1) * w]);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        d2[row * w..(row + 1) * w].copy_from_slice(&out[..w]);
    }
    for col in 0..w {
        for row in 0..h {
            f[row] = d2[row * w + col];
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for row in 0..h {
            d2[row * w + col] = out[row];
        }
    }
    let meters = d2
        .into_iter()
        .map(|d| {
            if d >= FAR / 2.0 {
                f64::INFINITY
            } else {
                d.sqrt() * frame.resolution
            }
        })
        .collect();
    DistanceField { frame, meters }
}

/// Path-transform cost to the goal for every cell; `f64::INFINITY` marks
/// unreachable cells.
#[derive(Debug, Clone)]
pub struct CostField {
    frame: GridFrame,
    cost: Vec<f64>,
    clearance: DistanceField,
    goal_cell: GridIndex,
    goal: Pose2D,
}

impl CostField {
    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    pub fn cost(&self, idx: GridIndex) -> f64 {
        self.cost[self.frame.linear(idx)]
    }

    pub fn clearance(&self) -> &DistanceField {
        &self.clearance
    }

    pub fn goal_cell(&self) -> GridIndex {
        self.goal_cell
    }

    pub fn goal(&self) -> Pose2D {
        self.goal
    }

    pub fn is_reachable(&self, idx: GridIndex) -> bool {
        self.cost(idx).is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    cell: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from the goal over free cells at least `robot_radius` from any
/// obstacle. Entering cell `c` costs the step length plus
/// `clearance_weight * max(0, danger_horizon - clearance(c))`.
pub fn path_transform(grid: &PlanningGrid, goal: &Pose2D, cfg: &NavConfig) -> Result<CostField> {
    let frame = grid.frame;
    let invalid = || Error::GoalInvalid {
        x: goal.x,
        y: goal.y,
    };
    let goal_cell = frame.world_to_grid(goal.x, goal.y).map_err(|_| invalid())?;
    let clearance = obstacle_transform(grid);
    let passable: Vec<bool> = grid
        .cells
        .iter()
        .zip(&clearance.meters)
        .map(|(&c, &d)| c == CellState::Free && d >= cfg.robot_radius)
        .collect();
    let g = frame.linear(goal_cell);
    if !passable[g] {
        return Err(invalid());
    }
    let danger: Vec<f64> = clearance
        .meters
        .iter()
        .map(|&d| cfg.clearance_weight * (cfg.danger_horizon - d).max(0.0))
        .collect();
    let straight = frame.resolution;
    let diagonal = frame.resolution * std::f64::consts::SQRT_2;

    let mut cost = vec![f64::INFINITY; frame.len()];
    let mut heap = BinaryHeap::new();
    cost[g] = 0.0;
    heap.push(Frontier { cost: 0.0, cell: g });
    while let Some(Frontier { cost: c, cell }) = heap.pop() {
        if c > cost[cell] {
            continue;
        }
        for (next, diag) in frame.neighbors8(frame.from_linear(cell)) {
            let j = frame.linear(next);
            if !passable[j] {
                continue;
            }
            let step = if diag { diagonal } else { straight };
            let candidate = c + (step + danger[j]);
            if candidate < cost[j] {
                cost[j] = candidate;
                heap.push(Frontier {
                    cost: candidate,
                    cell: j,
                });
            }
        }
    }
    Ok(CostField {
        frame,
        cost,
        clearance,
        goal_cell,
        goal: *goal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub cells: Vec<GridIndex>,
    /// Cell centers in the world frame, start first.
    pub waypoints: Vec<(f64, f64)>,
    /// Exact requested goal; the last waypoint is its cell center.
    pub goal: Pose2D,
}

impl Path {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn goal_heading(&self) -> f64 {
        self.goal.theta
    }

    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
            .sum()
    }

    /// Index of the waypoint nearest to `(x, y)`.
    pub fn closest(&self, x: f64, y: f64) -> usize {
        self.waypoints
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1 .0 - x).hypot(a.1 .1 - y);
                let db = (b.1 .0 - x).hypot(b.1 .1 - y);
                da.total_cmp(&db)
            })
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

fn descend_from(field: &CostField, start: GridIndex, goal: Pose2D) -> Path {
    let frame = field.frame;
    let mut cells = vec![start];
    let mut cur = start;
    // strictly decreasing cost guarantees termination within len() steps
    for _ in 0..frame.len() {
        if cur == field.goal_cell {
            break;
        }
        let here = field.cost(cur);
        let mut best: Option<(GridIndex, f64)> = None;
        for (n, _) in frame.neighbors8(cur) {
            let c = field.cost(n);
            if c < here && best.is_none_or(|(_, b)| c < b) {
                best = Some((n, c));
            }
        }
        match best {
            Some((n, _)) => {
                cur = n;
                cells.push(n);
            }
            None => break,
        }
    }
    let waypoints = cells.iter().map(|&c| frame.cell_center(c)).collect();
    Path {
        cells,
        waypoints,
        goal,
    }
}

/// Steepest descent over 8-neighbors from the start cell to the goal cell.
pub fn extract_path(field: &CostField, start: &Pose2D) -> Result<Path> {
    let no_path = || Error::NoPath {
        x: start.x,
        y: start.y,
    };
    let cell = field
        .frame
        .world_to_grid(start.x, start.y)
        .map_err(|_| no_path())?;
    if !field.is_reachable(cell) {
        return Err(no_path());
    }
    Ok(descend_from(field, cell, field.goal))
}

/// Like [`extract_path`], but a start cell that is not reachable (robot
/// grazing the inflation boundary) falls back to the nearest reachable cell
/// within `search_radius` meters.
pub fn extract_path_near(field: &CostField, start: &Pose2D, search_radius: f64) -> Result<Path> {
    match extract_path(field, start) {
        Err(Error::NoPath { .. }) => {}
        other => return other,
    }
    let frame = field.frame;
    let (c0, r0) = frame.cell_coords(start.x, start.y);
    let n = (search_radius / frame.resolution).ceil() as i64;
    let mut best: Option<(GridIndex, f64)> = None;
    for r in r0 - n..=r0 + n {
        for c in c0 - n..=c0 + n {
            if !frame.contains(c, r) {
                continue;
            }
            let idx = GridIndex::new(c as usize, r as usize);
            if !field.is_reachable(idx) {
                continue;
            }
            let (x, y) = frame.cell_center(idx);
            let d = (x - start.x).hypot(y - start.y);
            if d <= search_radius && best.is_none_or(|(_, b)| d < b) {
                best = Some((idx, d));
            }
        }
    }
    let (cell, _) = best.ok_or(Error::NoPath {
        x: start.x,
        y: start.y,
    })?;
    Ok(descend_from(field, cell, field.goal))
}

/// Carrot-point pursuit for an omnidirectional base. Translates toward the
/// farthest waypoint within `lookahead`; rotates toward the goal heading
/// only once inside the translation tolerance.
pub fn follow_path(path: &Path, current: &Pose2D, cfg: &NavConfig) -> Twist2D {
    let goal = path.goal;
    let (dist, rot) = pose_error(&goal, current);
    if dist <= cfg.goal_tolerance_trans && rot <= cfg.goal_tolerance_rot {
        return Twist2D::ZERO;
    }
    if path.is_empty() {
        return Twist2D::ZERO;
    }
    let last = path.len() - 1;
    let near = path.closest(current.x, current.y);
    let within = |i: usize| {
        let (x, y) = path.waypoints[i];
        (x - current.x).hypot(y - current.y) <= cfg.lookahead
    };
    let target = (near..=last).rev().find(|&i| within(i)).unwrap_or(near);
    let (tx, ty) = if target == last || dist <= cfg.lookahead {
        (goal.x, goal.y)
    } else {
        path.waypoints[target]
    };

    let (s, c) = current.theta.sin_cos();
    let (dx, dy) = (tx - current.x, ty - current.y);
    let (bx, by) = (c * dx + s * dy, -s * dx + c * dy);
    let norm = bx.hypot(by);
    let speed = (cfg.linear_gain * dist).min(cfg.max_speed);
    let (vx, vy) = if norm > 1e-9 {
        (bx / norm * speed, by / norm * speed)
    } else {
        (0.0, 0.0)
    };
    let omega = if dist <= cfg.goal_tolerance_trans {
        (cfg.angular_gain * normalize_angle(goal.theta - current.theta))
            .clamp(-cfg.max_omega, cfg.max_omega)
    } else {
        0.0
    };
    Twist2D::new(vx, vy, omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NavStatus {
    Active,
    Reached,
    Replanned,
    Blocked,
}

/// Goal session: holds the map snapshot, the current path and the blocked
/// timer.
#[derive(Debug, Clone)]
pub struct Navigator {
    config: NavConfig,
    base: PlanningGrid,
    goal: Option<Pose2D>,
    path: Option<Path>,
    blocked_for: f64,
    replans: u32,
}

impl Navigator {
    pub fn new(static_map: &OccupancyGrid, config: NavConfig) -> Result<Self> {
        config.validate()?;
        Ok(Navigator {
            base: PlanningGrid::from_map(static_map, &config.thresholds),
            config,
            goal: None,
            path: None,
            blocked_for: 0.0,
            replans: 0,
        })
    }

    pub fn config(&self) -> &NavConfig {
        &self.config
    }

    pub fn goal(&self) -> Option<Pose2D> {
        self.goal
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_ref()
    }

    /// Replans performed for the current goal.
    pub fn replans(&self) -> u32 {
        self.replans
    }

    fn plan(&self, grid: &PlanningGrid, goal: &Pose2D, pose: &Pose2D) -> Result<Path> {
        let field = path_transform(grid, goal, &self.config)?;
        extract_path_near(&field, pose, self.config.robot_radius)
    }

    /// Starts a goal session with a path planned on the map alone.
    pub fn set_goal(&mut self, goal: Pose2D, pose: &Pose2D) -> Result<&Path> {
        let path = self.plan(&self.base, &goal, pose)?;
        self.goal = Some(goal);
        self.blocked_for = 0.0;
        self.replans = 0;
        Ok(self.path.insert(path))
    }

    pub fn clear_goal(&mut self) {
        self.goal = None;
        self.path = None;
        self.blocked_for = 0.0;
    }

    /// Whether any remaining path cell has a non-free cell closer than the
    /// robot radius.
    pub fn path_blocked(&self, grid: &PlanningGrid, path: &Path, pose: &Pose2D) -> bool {
        let frame = grid.frame;
        let radius_cells = self.config.robot_radius / frame.resolution;
        let n = radius_cells.ceil() as i64;
        let r2 = radius_cells * radius_cells;
        let from = path.closest(pose.x, pose.y);
        path.cells[from..].iter().any(|cell| {
            let (c0, r0) = (cell.col as i64, cell.row as i64);
            (-n..=n).any(|dr| {
                (-n..=n).any(|dc| {
                    ((dc * dc + dr * dr) as f64) < r2 && {
                        let (c, r) = (c0 + dc, r0 + dr);
                        !frame.contains(c, r)
                            || grid.cells[r as usize * frame.width + c as usize] != CellState::Free
                    }
                })
            })
        })
    }

    /// One control cycle. `dt` is the time since the previous call.
    pub fn navigate_tick(
        &mut self,
        pose: &Pose2D,
        scan: Option<&LaserScan>,
        dt: f64,
    ) -> (Twist2D, NavStatus) {
        let Some(goal) = self.goal else {
            return (Twist2D::ZERO, NavStatus::Blocked);
        };
        let (dist, rot) = pose_error(&goal, pose);
        if dist <= self.config.goal_tolerance_trans && rot <= self.config.goal_tolerance_rot {
            self.blocked_for = 0.0;
            return (Twist2D::ZERO, NavStatus::Reached);
        }
        let grid = match scan {
            Some(s) => self.base.with_scan(s, pose),
            None => self.base.clone(),
        };
        let blocked = match &self.path {
            Some(path) => self.path_blocked(&grid, path, pose),
            None => true,
        };
        if blocked {
            self.blocked_for += dt;
            if self.blocked_for + 1e-9 < self.config.blocked_interval {
                return (Twist2D::ZERO, NavStatus::Active);
            }
            self.blocked_for = 0.0;
            return match self.plan(&grid, &goal, pose) {
                Ok(path) => {
                    self.replans += 1;
                    let cmd = follow_path(&path, pose, &self.config);
                    self.path = Some(path);
                    (cmd, NavStatus::Replanned)
                }
                Err(_) => {
                    self.path = None;
                    (Twist2D::ZERO, NavStatus::Blocked)
                }
            };
        }
        self.blocked_for = 0.0;
        let path = self.path.as_ref().expect("unblocked implies a path");
        (follow_path(path, pose, &self.config), NavStatus::Active)
    }
}
