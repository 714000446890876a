//! C ABI over the mecanav core.
//!
//! Every function returns an [`MnStatus`] and writes results through out
//! pointers. Handles are opaque; each `*_new` has a matching `*_free`.
//! Panics never cross the boundary: they surface as `MN_STATUS_INTERNAL`.

#![allow(clippy::missing_safety_doc)]

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use mecanav::kinematics::{inverse_kinematics, KinematicParams, Odometry};
use mecanav::nav::{extract_path, path_transform, NavConfig, PlanningGrid};
use mecanav::slam::{SlamConfig, SlamState};
use mecanav::{CellState, Error, GridFrame, LaserScan, OdometryDelta, Pose2D, Twist2D, WheelTicks};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfBounds = 3,
    GoalInvalid = 4,
    NoPath = 5,
    BufferTooSmall = 6,
    Internal = 99,
}

impl From<&Error> for MnStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::OutOfBounds { .. } => MnStatus::OutOfBounds,
            Error::GoalInvalid { .. } => MnStatus::GoalInvalid,
            Error::NoPath { .. } => MnStatus::NoPath,
            _ => MnStatus::InvalidArgument,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MnPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl From<MnPose> for Pose2D {
    fn from(p: MnPose) -> Self {
        Pose2D::new(p.x, p.y, p.theta)
    }
}

impl From<Pose2D> for MnPose {
    fn from(p: Pose2D) -> Self {
        MnPose {
            x: p.x,
            y: p.y,
            theta: p.theta,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MnTwist {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MnTicks {
    pub fl: i64,
    pub fr: i64,
    pub rl: i64,
    pub rr: i64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MnWheelSpeeds {
    pub fl: f64,
    pub fr: f64,
    pub rl: f64,
    pub rr: f64,
}

/// Body-frame motion since the previous SLAM step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MnDelta {
    pub ds_x: f64,
    pub ds_y: f64,
    pub dtheta: f64,
}

/// Grid cell codes used by map buffers.
pub const MN_CELL_UNKNOWN: u8 = 0;
pub const MN_CELL_FREE: u8 = 1;
pub const MN_CELL_OCCUPIED: u8 = 2;

pub struct MnOdometry(Odometry);

pub struct MnSlam {
    state: SlamState,
    rng: ChaCha8Rng,
    thresholds: mecanav::OccupancyThresholds,
}

pub struct MnPlanner {
    grid: PlanningGrid,
    config: NavConfig,
}

fn guard(f: impl FnOnce() -> MnStatus) -> MnStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(MnStatus::Internal)
}

fn params(distance_per_tick: f64, wheel_separation: f64) -> Result<KinematicParams, MnStatus> {
    KinematicParams::new(distance_per_tick, wheel_separation).map_err(|e| MnStatus::from(&e))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Static, NUL-terminated description of a status code.
#[no_mangle]
pub extern "C" fn mn_status_message(status: MnStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        MnStatus::Ok => b"ok\0",
        MnStatus::NullPointer => b"null pointer argument\0",
        MnStatus::InvalidArgument => b"invalid argument\0",
        MnStatus::OutOfBounds => b"position outside the grid\0",
        MnStatus::GoalInvalid => b"goal is occupied or inside the inflation radius\0",
        MnStatus::NoPath => b"no path to the goal\0",
        MnStatus::BufferTooSmall => b"output buffer too small\0",
        MnStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// Library version, NUL-terminated.
#[no_mangle]
pub extern "C" fn mn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Wheel surface speeds (m/s) for a body twist.
#[no_mangle]
pub unsafe extern "C" fn mn_inverse_kinematics(
    distance_per_tick: f64,
    wheel_separation: f64,
    twist: *const MnTwist,
    out: *mut MnWheelSpeeds,
) -> MnStatus {
    guard(|| {
        if twist.is_null() || out.is_null() {
            return MnStatus::NullPointer;
        }
        let k = try_status!(params(distance_per_tick, wheel_separation));
        let t = &*twist;
        if !(t.vx.is_finite() && t.vy.is_finite() && t.omega.is_finite()) {
            return MnStatus::InvalidArgument;
        }
        let w = inverse_kinematics(&Twist2D::new(t.vx, t.vy, t.omega), &k);
        *out = MnWheelSpeeds {
            fl: w.fl,
            fr: w.fr,
            rl: w.rl,
            rr: w.rr,
        };
        MnStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn mn_odometry_new(
    distance_per_tick: f64,
    wheel_separation: f64,
    start: MnPose,
    out: *mut *mut MnOdometry,
) -> MnStatus {
    guard(|| {
        if out.is_null() {
            return MnStatus::NullPointer;
        }
        let k = try_status!(params(distance_per_tick, wheel_separation));
        let start = try_status!(
            Pose2D::try_new(start.x, start.y, start.theta).map_err(|e| MnStatus::from(&e))
        );
        *out = Box::into_raw(Box::new(MnOdometry(Odometry::new(k, start))));
        MnStatus::Ok
    })
}

/// Integrates one interval of encoder ticks; writes the new pose and, if
/// `delta` is non-null, the body-frame motion.
#[no_mangle]
pub unsafe extern "C" fn mn_odometry_update(
    odometry: *mut MnOdometry,
    ticks: *const MnTicks,
    pose: *mut MnPose,
    delta: *mut MnDelta,
) -> MnStatus {
    guard(|| {
        if odometry.is_null() || ticks.is_null() || pose.is_null() {
            return MnStatus::NullPointer;
        }
        let t = &*ticks;
        let d = (*odometry)
            .0
            .update(&WheelTicks::new(t.fl, t.fr, t.rl, t.rr));
        *pose = (*odometry).0.pose().into();
        if !delta.is_null() {
            *delta = MnDelta {
                ds_x: d.ds_x,
                ds_y: d.ds_y,
                dtheta: d.dtheta,
            };
        }
        MnStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn mn_odometry_free(odometry: *mut MnOdometry) {
    if !odometry.is_null() {
        drop(Box::from_raw(odometry));
    }
}

/// Particle-filter SLAM over a fixed `width_m` x `height_m` grid whose
/// lower-left corner is `origin`. Other settings use library defaults.
#[no_mangle]
pub unsafe extern "C" fn mn_slam_new(
    particle_count: usize,
    resolution: f64,
    width_m: f64,
    height_m: f64,
    origin: MnPose,
    start: MnPose,
    seed: u64,
    out: *mut *mut MnSlam,
) -> MnStatus {
    guard(|| {
        if out.is_null() {
            return MnStatus::NullPointer;
        }
        let cfg = SlamConfig {
            particle_count,
            cell_resolution: resolution,
            map_width: width_m,
            map_height: height_m,
            map_origin: origin.into(),
            ..SlamConfig::default()
        };
        let start = try_status!(
            Pose2D::try_new(start.x, start.y, start.theta).map_err(|e| MnStatus::from(&e))
        );
        let state = try_status!(SlamState::init(cfg, start).map_err(|e| MnStatus::from(&e)));
        *out = Box::into_raw(Box::new(MnSlam {
            state,
            rng: ChaCha8Rng::seed_from_u64(seed),
            thresholds: Default::default(),
        }));
        MnStatus::Ok
    })
}

/// One filter step with the motion since the last call and a scan of `n`
/// ranges. Negative or non-finite ranges mean "no return". Writes the
/// current pose estimate.
#[no_mangle]
pub unsafe extern "C" fn mn_slam_step(
    slam: *mut MnSlam,
    delta: *const MnDelta,
    angle_min: f64,
    angle_increment: f64,
    range_min: f64,
    range_max: f64,
    ranges: *const f64,
    n: usize,
    pose: *mut MnPose,
) -> MnStatus {
    guard(|| {
        if slam.is_null() || delta.is_null() || pose.is_null() || (ranges.is_null() && n > 0) {
            return MnStatus::NullPointer;
        }
        let raw = if n == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(ranges, n)
        };
        let readings = raw
            .iter()
            .map(|&r| (r.is_finite() && r >= range_min && r <= range_max).then_some(r))
            .collect();
        let scan =
            try_status!(
                LaserScan::new(angle_min, angle_increment, range_min, range_max, readings)
                    .map_err(|e| MnStatus::from(&e))
            );
        let d = &*delta;
        if !(d.ds_x.is_finite() && d.ds_y.is_finite() && d.dtheta.is_finite()) {
            return MnStatus::InvalidArgument;
        }
        let s = &mut *slam;
        let est = s.state.step(
            &OdometryDelta::new(d.ds_x, d.ds_y, d.dtheta),
            &scan,
            &mut s.rng,
        );
        *pose = est.into();
        MnStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn mn_slam_map_size(
    slam: *const MnSlam,
    width: *mut usize,
    height: *mut usize,
) -> MnStatus {
    guard(|| {
        if slam.is_null() || width.is_null() || height.is_null() {
            return MnStatus::NullPointer;
        }
        let f = (*slam).state.map().frame();
        *width = f.width;
        *height = f.height;
        MnStatus::Ok
    })
}

/// Copies the map as `MN_CELL_*` codes, row-major from the lower-left cell.
#[no_mangle]
pub unsafe extern "C" fn mn_slam_map_cells(
    slam: *const MnSlam,
    cells: *mut u8,
    capacity: usize,
) -> MnStatus {
    guard(|| {
        if slam.is_null() || cells.is_null() {
            return MnStatus::NullPointer;
        }
        let s = &*slam;
        let states = s.state.map().states(&s.thresholds);
        if capacity < states.len() {
            return MnStatus::BufferTooSmall;
        }
        let out = std::slice::from_raw_parts_mut(cells, states.len());
        for (o, st) in out.iter_mut().zip(states) {
            *o = match st {
                CellState::Unknown => MN_CELL_UNKNOWN,
                CellState::Free => MN_CELL_FREE,
                CellState::Occupied => MN_CELL_OCCUPIED,
            };
        }
        MnStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn mn_slam_free(slam: *mut MnSlam) {
    if !slam.is_null() {
        drop(Box::from_raw(slam));
    }
}

/// Planner over a `width` x `height` grid of `MN_CELL_*` codes, row-major
/// from the lower-left cell. Unknown cells are treated as obstacles.
#[no_mangle]
pub unsafe extern "C" fn mn_planner_new(
    resolution: f64,
    width: usize,
    height: usize,
    origin: MnPose,
    cells: *const u8,
    robot_radius: f64,
    clearance_weight: f64,
    danger_horizon: f64,
    out: *mut *mut MnPlanner,
) -> MnStatus {
    guard(|| {
        if cells.is_null() || out.is_null() {
            return MnStatus::NullPointer;
        }
        let frame = try_status!(GridFrame::new(resolution, width, height, origin.into())
            .map_err(|e| MnStatus::from(&e)));
        let raw = std::slice::from_raw_parts(cells, frame.len());
        let mut states = Vec::with_capacity(raw.len());
        for &c in raw {
            states.push(match c {
                MN_CELL_UNKNOWN => CellState::Unknown,
                MN_CELL_FREE => CellState::Free,
                MN_CELL_OCCUPIED => CellState::Occupied,
                _ => return MnStatus::InvalidArgument,
            });
        }
        let config = NavConfig {
            robot_radius,
            clearance_weight,
            danger_horizon,
            ..NavConfig::default()
        };
        if config.validate().is_err() {
            return MnStatus::InvalidArgument;
        }
        let grid = try_status!(PlanningGrid::new(frame, states).map_err(|e| MnStatus::from(&e)));
        *out = Box::into_raw(Box::new(MnPlanner { grid, config }));
        MnStatus::Ok
    })
}

/// Plans from `start` to `goal` and writes waypoints as interleaved x, y
/// pairs into `xy` (room for `capacity` waypoints). `len` always receives
/// the waypoint count; a short buffer yields `MN_STATUS_BUFFER_TOO_SMALL`.
#[no_mangle]
pub unsafe extern "C" fn mn_planner_plan(
    planner: *const MnPlanner,
    start: MnPose,
    goal: MnPose,
    xy: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> MnStatus {
    guard(|| {
        if planner.is_null() || len.is_null() || (xy.is_null() && capacity > 0) {
            return MnStatus::NullPointer;
        }
        let p = &*planner;
        let field = try_status!(
            path_transform(&p.grid, &goal.into(), &p.config).map_err(|e| MnStatus::from(&e))
        );
        let path = try_status!(extract_path(&field, &start.into()).map_err(|e| MnStatus::from(&e)));
        *len = path.len();
        if capacity < path.len() {
            return MnStatus::BufferTooSmall;
        }
        let out = std::slice::from_raw_parts_mut(xy, 2 * path.len());
        for (k, (x, y)) in path.waypoints.iter().enumerate() {
            out[2 * k] = *x;
            out[2 * k + 1] = *y;
        }
        MnStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn mn_planner_free(planner: *mut MnPlanner) {
    if !planner.is_null() {
        drop(Box::from_raw(planner));
    }
}
