// Parameter checks use `!(x > 0.0)` on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod formats;
pub mod geometry;
pub mod grid;
pub mod kinematics;
pub mod nav;
pub mod pipeline;
pub mod scan;
pub mod sim;
pub mod slam;

pub use error::{Error, Result};
pub use geometry::{
    normalize_angle, pose_error, Pose2D, Twist2D, WheelDistances, WheelSpeeds, WheelTicks,
};
pub use grid::{CellState, GridFrame, GridIndex, OccupancyGrid, OccupancyThresholds};
pub use kinematics::{KinematicParams, OdometryDelta};
pub use scan::LaserScan;
