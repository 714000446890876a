//! Planar poses, velocities and per-wheel quantities shared by every module.
//!
//! Conventions: x forward, y left, theta counter-clockwise positive. Every
//! operation that writes a heading leaves it in `[-pi, pi)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `[-pi, pi)`.
///
/// Non-finite input propagates as NaN; use [`checked_normalize_angle`] at
/// trust boundaries.
#[inline]
pub fn normalize_angle(theta: f64) -> f64 {
    let mut r = (theta + PI).rem_euclid(TAU) - PI;
    // rem_euclid may round up to exactly TAU for tiny negative inputs
    if r >= PI {
        r -= TAU;
    }
    r
}

pub fn checked_normalize_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::Domain("angle"));
    }
    Ok(normalize_angle(theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2D {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    /// Like [`Pose2D::new`] but rejects NaN and infinities.
    pub fn try_new(x: f64, y: f64, theta: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain("pose position"));
        }
        Ok(Pose2D {
            x,
            y,
            theta: checked_normalize_angle(theta)?,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    pub fn distance_to(&self, other: &Pose2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Expresses `other` in this pose's frame.
    pub fn relative(&self, other: &Pose2D) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        Pose2D::new(c * dx + s * dy, -s * dx + c * dy, other.theta - self.theta)
    }

    /// Applies a pose given in this pose's frame.
    pub fn compose(&self, local: &Pose2D) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(
            self.x + c * local.x - s * local.y,
            self.y + s * local.x + c * local.y,
            self.theta + local.theta,
        )
    }
}

/// Body-frame velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist2D {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl Twist2D {
    pub const ZERO: Twist2D = Twist2D {
        vx: 0.0,
        vy: 0.0,
        omega: 0.0,
    };

    pub fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Twist2D { vx, vy, omega }
    }

    pub fn linear_speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn is_zero(&self) -> bool {
        self.vx == 0.0 && self.vy == 0.0 && self.omega == 0.0
    }
}

/// Encoder counts accumulated over one sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WheelTicks {
    pub fl: i64,
    pub fr: i64,
    pub rl: i64,
    pub rr: i64,
}

impl WheelTicks {
    pub fn new(fl: i64, fr: i64, rl: i64, rr: i64) -> Self {
        WheelTicks { fl, fr, rl, rr }
    }

    pub fn to_array(self) -> [i64; 4] {
        [self.fl, self.fr, self.rl, self.rr]
    }

    pub fn from_array(a: [i64; 4]) -> Self {
        WheelTicks::new(a[0], a[1], a[2], a[3])
    }
}

/// Signed rolling distance of each wheel over one interval, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelDistances {
    pub fl: f64,
    pub fr: f64,
    pub rl: f64,
    pub rr: f64,
}

impl WheelDistances {
    pub fn new(fl: f64, fr: f64, rl: f64, rr: f64) -> Self {
        WheelDistances { fl, fr, rl, rr }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.fl, self.fr, self.rl, self.rr]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        WheelDistances::new(a[0], a[1], a[2], a[3])
    }

    pub fn scaled(self, k: f64) -> Self {
        WheelDistances::new(self.fl * k, self.fr * k, self.rl * k, self.rr * k)
    }
}

/// Per-wheel linear rim speed, m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelSpeeds {
    pub fl: f64,
    pub fr: f64,
    pub rl: f64,
    pub rr: f64,
}

impl WheelSpeeds {
    pub const ZERO: WheelSpeeds = WheelSpeeds {
        fl: 0.0,
        fr: 0.0,
        rl: 0.0,
        rr: 0.0,
    };

    pub fn new(fl: f64, fr: f64, rl: f64, rr: f64) -> Self {
        WheelSpeeds { fl, fr, rl, rr }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.fl, self.fr, self.rl, self.rr]
    }

    /// Distances rolled when held for `dt` seconds.
    pub fn over(self, dt: f64) -> WheelDistances {
        WheelDistances::new(self.fl * dt, self.fr * dt, self.rl * dt, self.rr * dt)
    }
}

/// FBM2-style scoring: Euclidean position error and absolute wrapped heading
/// error, reported separately.
pub fn pose_error(goal: &Pose2D, achieved: &Pose2D) -> (f64, f64) {
    let translation = goal.distance_to(achieved);
    let rotation = normalize_angle(goal.theta - achieved.theta).abs();
    (translation, rotation)
}

/// Checked variant of [`pose_error`].
pub fn try_pose_error(goal: &Pose2D, achieved: &Pose2D) -> Result<(f64, f64)> {
    if !goal.is_finite() || !achieved.is_finite() {
        return Err(Error::Domain("pose"));
    }
    Ok(pose_error(goal, achieved))
}

/// Circular mean of a set of headings. Returns 0 for an empty or perfectly
/// balanced set.
pub fn circular_mean(angles: impl IntoIterator<Item = f64>) -> f64 {
    let (s, c) = angles
        .into_iter()
        .fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    normalize_angle(s.atan2(c))
}
