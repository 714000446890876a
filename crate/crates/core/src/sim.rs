//! Deterministic 2D world for exercising the stack: mecanum motion from wheel
//! commands, quantized noisy encoder ticks, and ray-cast laser scans.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose2D, Twist2D, WheelSpeeds, WheelTicks};
use crate::grid::{CellState, GridFrame, OccupancyGrid, OccupancyThresholds};
use crate::kinematics::{body_delta, integrate_pose, KinematicParams};
use crate::scan::LaserScan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// Axis-aligned rectangle in world coordinates.
    Rect {
        min_x: f64,
        min_y: f64,
        max_x: f64,
        max_y: f64,
    },
    Disc {
        x: f64,
        y: f64,
        radius: f64,
    },
}

impl Shape {
    pub fn rect(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Shape::Rect {
            min_x: min_x.min(max_x),
            min_y: min_y.min(max_y),
            max_x: min_x.max(max_x),
            max_y: min_y.max(max_y),
        }
    }

    pub fn disc(x: f64, y: f64, radius: f64) -> Self {
        Shape::Disc { x, y, radius }
    }

    /// Distance from a point to the shape (0 inside).
    pub fn distance(&self, px: f64, py: f64) -> f64 {
        match *self {
            Shape::Rect {
                min_x,
                min_y,
                max_x,
                max_y,
            } => {
                let dx = (min_x - px).max(0.0).max(px - max_x);
                let dy = (min_y - py).max(0.0).max(py - max_y);
                dx.hypot(dy)
            }
            Shape::Disc { x, y, radius } => ((px - x).hypot(py - y) - radius).max(0.0),
        }
    }

    fn corners(&self) -> [(f64, f64); 4] {
        let (x0, y0, x1, y1) = match *self {
            Shape::Rect {
                min_x,
                min_y,
                max_x,
                max_y,
            } => (min_x, min_y, max_x, max_y),
            Shape::Disc { x, y, radius } => (x - radius, y - radius, x + radius, y + radius),
        };
        [(x0, y0), (x1, y0), (x0, y1), (x1, y1)]
    }

    fn is_valid(&self) -> bool {
        match *self {
            Shape::Rect {
                min_x,
                min_y,
                max_x,
                max_y,
            } => [min_x, min_y, max_x, max_y].iter().all(|v| v.is_finite()),
            Shape::Disc { x, y, radius } => {
                x.is_finite() && y.is_finite() && radius.is_finite() && radius > 0.0
            }
        }
    }
}

/// A shape that occupies the world during `[appear, disappear)`; `None`
/// bounds are open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledObstacle {
    pub shape: Shape,
    pub appear: Option<f64>,
    pub disappear: Option<f64>,
}

impl ScheduledObstacle {
    pub fn is_active(&self, t: f64) -> bool {
        self.appear.is_none_or(|a| t >= a) && self.disappear.is_none_or(|d| t < d)
    }
}

#[derive(Debug, Clone, Copy)]
struct CellBox {
    c0: i64,
    r0: i64,
    c1: i64,
    r1: i64,
}

/// Ground-truth environment: a fully known static grid plus time-gated
/// obstacles. Obstacles occupy every cell whose center lies strictly within
/// half a cell of the shape.
#[derive(Debug, Clone)]
pub struct World {
    static_grid: OccupancyGrid,
    occupied: Vec<bool>,
    obstacles: Vec<ScheduledObstacle>,
    boxes: Vec<CellBox>,
}

impl World {
    /// Fails if any cell of `grid` is unknown under the default thresholds.
    pub fn new(grid: OccupancyGrid) -> Result<Self> {
        let thresholds = OccupancyThresholds::default();
        let states = grid.states(&thresholds);
        if states.contains(&CellState::Unknown) {
            return Err(Error::Parameter("world grid contains unknown cells".into()));
        }
        let occupied = states.iter().map(|&s| s == CellState::Occupied).collect();
        Ok(World {
            static_grid: grid,
            occupied,
            obstacles: Vec::new(),
            boxes: Vec::new(),
        })
    }

    pub fn from_occupancy(frame: GridFrame, occupied: Vec<bool>) -> Result<Self> {
        let grid = OccupancyGrid::from_occupancy(frame, &occupied)?;
        Ok(World {
            static_grid: grid,
            occupied,
            obstacles: Vec::new(),
            boxes: Vec::new(),
        })
    }

    /// Static world where a cell is occupied when its center lies inside
    /// one of `shapes`.
    pub fn from_shapes(frame: GridFrame, shapes: &[Shape]) -> Result<Self> {
        let occupied = (0..frame.len())
            .map(|i| {
                let (x, y) = frame.cell_center(frame.from_linear(i));
                shapes.iter().any(|s| s.distance(x, y) <= 0.0)
            })
            .collect();
        World::from_occupancy(frame, occupied)
    }

    pub fn frame(&self) -> &GridFrame {
        self.static_grid.frame()
    }

    pub fn static_grid(&self) -> &OccupancyGrid {
        &self.static_grid
    }

    pub fn static_occupancy(&self) -> &[bool] {
        &self.occupied
    }

    pub fn obstacles(&self) -> &[ScheduledObstacle] {
        &self.obstacles
    }

    /// Adds an obstacle active from `appear` until `disappear`. Returns its id.
    pub fn spawn_obstacle(
        &mut self,
        shape: Shape,
        appear: Option<f64>,
        disappear: Option<f64>,
    ) -> Result<usize> {
        if !shape.is_valid() {
            return Err(Error::Parameter("degenerate obstacle shape".into()));
        }
        let frame = *self.frame();
        let (mut c0, mut r0, mut c1, mut r1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for (x, y) in shape.corners() {
            let (lx, ly) = frame.to_local(x, y);
            if lx < 0.0 || ly < 0.0 || lx > frame.width_m() || ly > frame.height_m() {
                return Err(Error::Parameter(format!(
                    "obstacle corner ({x:.3}, {y:.3}) outside the world"
                )));
            }
            let (c, r) = frame.cell_coords(x, y);
            c0 = c0.min(c);
            r0 = r0.min(r);
            c1 = c1.max(c);
            r1 = r1.max(r);
        }
        let clamp_c = |c: i64| c.clamp(0, frame.width as i64 - 1);
        let clamp_r = |r: i64| r.clamp(0, frame.height as i64 - 1);
        self.boxes.push(CellBox {
            c0: clamp_c(c0 - 1),
            r0: clamp_r(r0 - 1),
            c1: clamp_c(c1 + 1),
            r1: clamp_r(r1 + 1),
        });
        self.obstacles.push(ScheduledObstacle {
            shape,
            appear,
            disappear,
        });
        Ok(self.obstacles.len() - 1)
    }

    /// Schedules obstacle `id` to disappear at `time`.
    pub fn despawn_obstacle(&mut self, id: usize, time: f64) -> Result<()> {
        let obstacle = self
            .obstacles
            .get_mut(id)
            .ok_or_else(|| Error::Parameter(format!("no obstacle with id {id}")))?;
        obstacle.disappear = Some(time);
        Ok(())
    }

    fn obstacle_covers(&self, k: usize, col: i64, row: i64) -> bool {
        let b = self.boxes[k];
        if col < b.c0 || col > b.c1 || row < b.r0 || row > b.r1 {
            return false;
        }
        let frame = self.frame();
        let (x, y) = frame.cell_center(crate::grid::GridIndex::new(col as usize, row as usize));
        self.obstacles[k].shape.distance(x, y) < frame.resolution / 2.0
    }

    /// Occupancy of an in-bounds cell at time `t`; cells outside the grid
    /// count as occupied.
    pub fn is_occupied(&self, col: i64, row: i64, t: f64) -> bool {
        let frame = self.frame();
        if !frame.contains(col, row) {
            return true;
        }
        if self.occupied[row as usize * frame.width + col as usize] {
            return true;
        }
        (0..self.obstacles.len())
            .any(|k| self.obstacles[k].is_active(t) && self.obstacle_covers(k, col, row))
    }

    /// Full occupancy mask at time `t`.
    pub fn occupancy_at(&self, t: f64) -> Vec<bool> {
        let mut mask = self.occupied.clone();
        let width = self.frame().width;
        for (k, o) in self.obstacles.iter().enumerate() {
            if !o.is_active(t) {
                continue;
            }
            let b = self.boxes[k];
            for row in b.r0..=b.r1 {
                for col in b.c0..=b.c1 {
                    if self.obstacle_covers(k, col, row) {
                        mask[row as usize * width + col as usize] = true;
                    }
                }
            }
        }
        mask
    }

    /// Distance from `(x, y)` to the nearest occupied cell square at time
    /// `t`, searched out to `horizon` meters (returns `horizon` if none).
    pub fn clearance(&self, x: f64, y: f64, horizon: f64, t: f64) -> f64 {
        let frame = self.frame();
        let res = frame.resolution;
        let (lx, ly) = frame.to_local(x, y);
        let (cc, cr) = ((lx / res).floor() as i64, (ly / res).floor() as i64);
        let n = (horizon / res).ceil() as i64 + 1;
        let mut best = horizon;
        for row in cr - n..=cr + n {
            let y0 = row as f64 * res;
            let dy = (y0 - ly).max(0.0).max(ly - (y0 + res));
            if dy >= best {
                continue;
            }
            for col in cc - n..=cc + n {
                let x0 = col as f64 * res;
                let dx = (x0 - lx).max(0.0).max(lx - (x0 + res));
                let d = dx.hypot(dy);
                if d < best && self.is_occupied(col, row, t) {
                    best = d;
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2D,
    pub body_twist: Twist2D,
    pub footprint_radius: f64,
}

impl RobotState {
    /// Footprint radius 0.28 m circumscribes the 0.45 m x 0.35 m base.
    pub fn new(pose: Pose2D) -> Self {
        RobotState {
            pose,
            body_twist: Twist2D::ZERO,
            footprint_radius: 0.28,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorNoise {
    /// Standard deviation in ticks per interval.
    pub encoder_tick_noise: f64,
    /// Standard deviation in meters.
    pub lidar_range_noise: f64,
    pub seed: u64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        SensorNoise {
            encoder_tick_noise: 0.5,
            lidar_range_noise: 0.01,
            seed: 0,
        }
    }
}

impl SensorNoise {
    pub fn noiseless(seed: u64) -> Self {
        SensorNoise {
            encoder_tick_noise: 0.0,
            lidar_range_noise: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.encoder_tick_noise >= 0.0) || !(self.lidar_range_noise >= 0.0) {
            return Err(Error::Parameter(
                "noise standard deviations must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarModel {
    pub angle_min: f64,
    pub angle_max: f64,
    pub beam_count: usize,
    pub range_min: f64,
    pub range_max: f64,
}

impl Default for LidarModel {
    /// 240 degree field, 683 beams, 0.02 to 5.6 m.
    fn default() -> Self {
        LidarModel {
            angle_min: -2.094,
            angle_max: 2.094,
            beam_count: 683,
            range_min: 0.02,
            range_max: 5.6,
        }
    }
}

impl LidarModel {
    pub fn angle_increment(&self) -> f64 {
        if self.beam_count > 1 {
            (self.angle_max - self.angle_min) / (self.beam_count - 1) as f64
        } else {
            1.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_count == 0
            || !(self.angle_max >= self.angle_min)
            || !(self.range_min >= 0.0 && self.range_min < self.range_max)
            || (self.beam_count > 1 && self.angle_max == self.angle_min)
        {
            return Err(Error::Parameter("invalid lidar model".into()));
        }
        Ok(())
    }
}

/// Distance along a beam to the first occupied cell, if within `max_range`.
pub fn cast_ray(world: &World, x: f64, y: f64, angle: f64, max_range: f64, t: f64) -> Option<f64> {
    for (col, row, entry) in world.frame().ray(x, y, angle, max_range) {
        if !world.frame().contains(col, row) {
            return None;
        }
        if world.is_occupied(col, row, t) {
            return Some(entry);
        }
    }
    None
}

/// Ray-casts every beam of `model` from `pose` at time `t`.
pub fn simulate_scan(
    world: &World,
    pose: &Pose2D,
    model: &LidarModel,
    range_noise: f64,
    t: f64,
    rng: &mut ChaCha8Rng,
) -> Result<LaserScan> {
    model.validate()?;
    if !world.frame().contains_point(pose.x, pose.y) {
        return Err(Error::OutOfBounds {
            x: pose.x,
            y: pose.y,
        });
    }
    let normal = (range_noise > 0.0)
        .then(|| Normal::new(0.0, range_noise).map_err(|e| Error::Parameter(e.to_string())))
        .transpose()?;
    let inc = model.angle_increment();
    let ranges = (0..model.beam_count)
        .map(|i| {
            let angle = pose.theta + model.angle_min + i as f64 * inc;
            let r = cast_ray(world, pose.x, pose.y, angle, model.range_max, t)?;
            if r < model.range_min {
                return None;
            }
            let noisy = match &normal {
                Some(n) => r + n.sample(rng),
                None => r,
            };
            Some(noisy.clamp(model.range_min, model.range_max))
        })
        .collect();
    LaserScan::new(
        model.angle_min,
        inc,
        model.range_min,
        model.range_max,
        ranges,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub ticks: WheelTicks,
    pub collision: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub kinematics: KinematicParams,
    pub lidar: LidarModel,
    pub noise: SensorNoise,
    pub footprint_radius: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            kinematics: KinematicParams::default(),
            lidar: LidarModel::default(),
            noise: SensorNoise::default(),
            footprint_radius: 0.28,
        }
    }
}

/// Single-owner simulation: world, ground-truth robot, encoder state and RNG.
#[derive(Debug, Clone)]
pub struct Simulator {
    world: World,
    state: RobotState,
    config: SimConfig,
    rng: ChaCha8Rng,
    time: f64,
    tick_residual: [f64; 4],
    collisions: u64,
    in_contact: bool,
}

impl Simulator {
    pub fn new(world: World, start: Pose2D, config: SimConfig) -> Result<Self> {
        config.noise.validate()?;
        config.lidar.validate()?;
        if !(config.footprint_radius > 0.0) {
            return Err(Error::Parameter("footprint radius must be > 0".into()));
        }
        if !world.frame().contains_point(start.x, start.y) {
            return Err(Error::OutOfBounds {
                x: start.x,
                y: start.y,
            });
        }
        let mut state = RobotState::new(start);
        state.footprint_radius = config.footprint_radius;
        let sim = Simulator {
            world,
            state,
            rng: ChaCha8Rng::seed_from_u64(config.noise.seed),
            config,
            time: 0.0,
            tick_residual: [0.0; 4],
            collisions: 0,
            in_contact: false,
        };
        if sim.gap(&start) <= 0.0 {
            return Err(Error::Parameter("start pose overlaps an obstacle".into()));
        }
        Ok(sim)
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    pub fn pose(&self) -> Pose2D {
        self.state.pose
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Number of distinct contact events so far.
    pub fn collisions(&self) -> u64 {
        self.collisions
    }

    /// Signed gap between the footprint disc and the nearest occupied cell.
    pub fn gap(&self, pose: &Pose2D) -> f64 {
        let r = self.state.footprint_radius;
        let horizon = r + 2.0 * self.world.frame().resolution;
        self.world.clearance(pose.x, pose.y, horizon, self.time) - r
    }

    /// Adds an obstacle. Refused if it would be active now and overlap the
    /// robot footprint.
    pub fn spawn_obstacle(
        &mut self,
        shape: Shape,
        appear: Option<f64>,
        disappear: Option<f64>,
    ) -> Result<usize> {
        let active_now = ScheduledObstacle {
            shape,
            appear,
            disappear,
        }
        .is_active(self.time);
        if active_now
            && shape.distance(self.state.pose.x, self.state.pose.y) <= self.state.footprint_radius
        {
            return Err(Error::Parameter("obstacle overlaps the robot".into()));
        }
        let id = self.world.spawn_obstacle(shape, appear, disappear)?;
        if active_now && self.gap(&self.state.pose) <= 0.0 {
            self.world.obstacles.pop();
            self.world.boxes.pop();
            return Err(Error::Parameter("obstacle overlaps the robot".into()));
        }
        Ok(id)
    }

    pub fn despawn_obstacle(&mut self, id: usize, time: f64) -> Result<()> {
        self.world.despawn_obstacle(id, time)
    }

    /// Advances by `dt` seconds with the given wheel rim speeds. Motion stops
    /// at the first footprint contact.
    pub fn step(&mut self, speeds: &WheelSpeeds, dt: f64) -> Result<StepOutput> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be > 0, got {dt}")));
        }
        let kin = self.config.kinematics;
        let distances = speeds.over(dt);
        let full = body_delta(&distances, &kin);
        let start = self.state.pose;
        let at = |f: f64| integrate_pose(&start, &full.scaled(f));

        let res = self.world.frame().resolution;
        let samples = ((full.translation() / (res / 4.0)).ceil() as usize).max(1);
        let mut frac = 1.0;
        let mut collision = false;
        if full.translation() > 0.0 {
            let mut prev_f = 0.0;
            let mut prev_gap = self.gap(&start);
            for i in 1..=samples {
                let f = i as f64 / samples as f64;
                let g = self.gap(&at(f));
                if g <= 0.0 && g < prev_gap - 1e-12 {
                    collision = true;
                    frac = if prev_gap <= 0.0 {
                        prev_f
                    } else {
                        let (mut lo, mut hi) = (prev_f, f);
                        for _ in 0..60 {
                            let mid = 0.5 * (lo + hi);
                            if self.gap(&at(mid)) <= 0.0 {
                                hi = mid;
                            } else {
                                lo = mid;
                            }
                        }
                        hi
                    };
                    break;
                }
                prev_f = f;
                prev_gap = g;
            }
        }

        let realised = full.scaled(frac);
        self.state.pose = integrate_pose(&start, &realised);
        self.state.body_twist =
            Twist2D::new(realised.ds_x / dt, realised.ds_y / dt, realised.dtheta / dt);

        let sigma = self.config.noise.encoder_tick_noise;
        let normal = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("validated sigma"));
        let mut ticks = [0i64; 4];
        for (w, d) in distances.to_array().into_iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            // quantization error is carried to the next interval, like a
            // free-running hardware counter
            let mut exact = self.tick_residual[w] + d * frac / kin.distance_per_tick();
            if let Some(n) = &normal {
                exact += n.sample(&mut self.rng);
            }
            let emitted = exact.round();
            self.tick_residual[w] = exact - emitted;
            ticks[w] = emitted as i64;
        }

        if collision && !self.in_contact {
            self.collisions += 1;
        }
        self.in_contact = collision;
        self.time += dt;
        Ok(StepOutput {
            ticks: WheelTicks::from_array(ticks),
            collision,
        })
    }

    /// Scan from the current ground-truth pose at the current time.
    pub fn scan(&mut self) -> Result<LaserScan> {
        simulate_scan(
            &self.world,
            &self.state.pose,
            &self.config.lidar,
            self.config.noise.lidar_range_noise,
            self.time,
            &mut self.rng,
        )
    }
}
