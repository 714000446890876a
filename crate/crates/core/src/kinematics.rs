//! Four-wheel mecanum kinematics: encoder odometry, inverse kinematics for
//! command generation, and encoder calibration.
//!
//! Wheel order is always front-left, front-right, rear-left, rear-right.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Pose2D, Twist2D, WheelDistances, WheelSpeeds, WheelTicks};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicParams {
    distance_per_tick: f64,
    wheel_separation: f64,
}

impl Default for KinematicParams {
    /// 50 um per tick; 0.4 m separation, half the sum of the 0.45 m x 0.35 m base.
    fn default() -> Self {
        KinematicParams {
            distance_per_tick: 5.0e-5,
            wheel_separation: 0.4,
        }
    }
}

impl KinematicParams {
    pub fn new(distance_per_tick: f64, wheel_separation: f64) -> Result<Self> {
        if !(distance_per_tick.is_finite() && distance_per_tick > 0.0) {
            return Err(Error::Parameter(format!(
                "distance_per_tick must be > 0, got {distance_per_tick}"
            )));
        }
        if !(wheel_separation.is_finite() && wheel_separation > 0.0) {
            return Err(Error::Parameter(format!(
                "wheel_separation must be > 0, got {wheel_separation}"
            )));
        }
        Ok(KinematicParams {
            distance_per_tick,
            wheel_separation,
        })
    }

    pub fn distance_per_tick(&self) -> f64 {
        self.distance_per_tick
    }

    pub fn wheel_separation(&self) -> f64 {
        self.wheel_separation
    }

    /// `1 / (4 * wheel_separation)`.
    pub fn beta(&self) -> f64 {
        1.0 / (4.0 * self.wheel_separation)
    }
}

/// Body-frame motion over one interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdometryDelta {
    pub ds_x: f64,
    pub ds_y: f64,
    pub dtheta: f64,
}

impl OdometryDelta {
    pub const ZERO: OdometryDelta = OdometryDelta {
        ds_x: 0.0,
        ds_y: 0.0,
        dtheta: 0.0,
    };

    pub fn new(ds_x: f64, ds_y: f64, dtheta: f64) -> Self {
        OdometryDelta { ds_x, ds_y, dtheta }
    }

    pub fn translation(&self) -> f64 {
        self.ds_x.hypot(self.ds_y)
    }

    pub fn scaled(&self, k: f64) -> Self {
        OdometryDelta::new(self.ds_x * k, self.ds_y * k, self.dtheta * k)
    }

    /// The delta that [`integrate_pose`] maps the identity pose onto `rel`.
    pub fn from_relative(rel: &Pose2D) -> Self {
        let (s, c) = (rel.theta / 2.0).sin_cos();
        OdometryDelta::new(c * rel.x + s * rel.y, -s * rel.x + c * rel.y, rel.theta)
    }

    /// Net motion of applying `self` and then `next`.
    pub fn then(&self, next: &OdometryDelta) -> OdometryDelta {
        let rel = integrate_pose(&integrate_pose(&Pose2D::default(), self), next);
        OdometryDelta::from_relative(&rel)
    }
}

pub fn ticks_to_distances(t: &WheelTicks, k: &KinematicParams) -> WheelDistances {
    let d = k.distance_per_tick;
    WheelDistances::new(
        t.fl as f64 * d,
        t.fr as f64 * d,
        t.rl as f64 * d,
        t.rr as f64 * d,
    )
}

pub fn body_delta(d: &WheelDistances, k: &KinematicParams) -> OdometryDelta {
    let dtheta = (-d.fl + d.fr - d.rl + d.rr) * k.beta();
    let ds_x = (d.fl + d.fr + d.rl + d.rr) / 4.0;
    let ds_y = (-d.fl + d.fr + d.rl - d.rr) / 4.0;
    OdometryDelta { ds_x, ds_y, dtheta }
}

/// Midpoint integration of a body-frame delta onto a global pose.
pub fn integrate_pose(p: &Pose2D, d: &OdometryDelta) -> Pose2D {
    let phi = p.theta + d.dtheta / 2.0;
    let (s, c) = phi.sin_cos();
    Pose2D {
        x: p.x + d.ds_x * c - d.ds_y * s,
        y: p.y + d.ds_x * s + d.ds_y * c,
        theta: normalize_angle(p.theta + d.dtheta),
    }
}

/// One encoder interval: returns the new pose and the body delta that
/// produced it.
pub fn odometry_step(p: &Pose2D, t: &WheelTicks, k: &KinematicParams) -> (Pose2D, OdometryDelta) {
    let delta = body_delta(&ticks_to_distances(t, k), k);
    (integrate_pose(p, &delta), delta)
}

/// Wheel rim speeds realising a body twist; exact right inverse of
/// [`body_delta`].
pub fn inverse_kinematics(v: &Twist2D, k: &KinematicParams) -> WheelSpeeds {
    let w = v.omega * k.wheel_separation;
    WheelSpeeds {
        fl: v.vx - v.vy - w,
        fr: v.vx + v.vy + w,
        rl: v.vx + v.vy - w,
        rr: v.vx - v.vy + w,
    }
}

/// Distance per tick from driving a known distance and counting ticks.
pub fn calibrate_distance_per_tick(measured_distance: f64, ticks_observed: i64) -> Result<f64> {
    if ticks_observed == 0 {
        return Err(Error::Calibration("no ticks observed".into()));
    }
    if !(measured_distance.is_finite() && measured_distance > 0.0) {
        return Err(Error::Calibration(format!(
            "measured distance must be > 0, got {measured_distance}"
        )));
    }
    Ok(measured_distance / ticks_observed.unsigned_abs() as f64)
}

/// Dead-reckoning integrator over a stream of tick intervals.
#[derive(Debug, Clone)]
pub struct Odometry {
    params: KinematicParams,
    pose: Pose2D,
}

impl Odometry {
    pub fn new(params: KinematicParams, start: Pose2D) -> Self {
        Odometry {
            params,
            pose: start,
        }
    }

    pub fn pose(&self) -> Pose2D {
        self.pose
    }

    pub fn params(&self) -> &KinematicParams {
        &self.params
    }

    pub fn update(&mut self, ticks: &WheelTicks) -> OdometryDelta {
        let (pose, delta) = odometry_step(&self.pose, ticks, &self.params);
        self.pose = pose;
        delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(dt: f64, sep: f64) -> KinematicParams {
        KinematicParams::new(dt, sep).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ticks_to_distances_examples() {
        let k = params(0.001, 0.4);
        let d = ticks_to_distances(&WheelTicks::new(100, 100, 100, 100), &k);
        for v in d.to_array() {
            assert!(close(v, 0.1, 1e-15));
        }
        let d = ticks_to_distances(&WheelTicks::default(), &k);
        assert_eq!(d, WheelDistances::default());
        let d = ticks_to_distances(&WheelTicks::new(-50, 50, -50, 50), &params(0.002, 0.4));
        assert_eq!(
            d.to_array().map(|v| (v * 10.0).round()),
            [-1.0, 1.0, -1.0, 1.0]
        );
    }

    #[test]
    fn body_delta_examples() {
        let k = params(0.001, 0.4);
        let d = body_delta(&WheelDistances::new(0.1, 0.1, 0.1, 0.1), &k);
        assert!(close(d.ds_x, 0.1, 1e-15));
        assert_eq!((d.ds_y, d.dtheta), (0.0, 0.0));

        // 4 * 0.05 / (4 * 0.4)
        let d = body_delta(&WheelDistances::new(-0.05, 0.05, -0.05, 0.05), &k);
        assert_eq!((d.ds_x, d.ds_y), (0.0, 0.0));
        assert!(close(d.dtheta, 0.125, 1e-15));

        let d = body_delta(&WheelDistances::new(-0.1, 0.1, 0.1, -0.1), &k);
        assert_eq!((d.ds_x, d.dtheta), (0.0, 0.0));
        assert!(close(d.ds_y, 0.1, 1e-15));
    }

    #[test]
    fn beta_matches_separation() {
        assert_eq!(params(0.001, 0.4).beta(), 1.0 / 1.6);
    }

    #[test]
    fn integrate_pose_examples() {
        let o = Pose2D::default();
        assert_eq!(integrate_pose(&o, &OdometryDelta::ZERO), o);

        let p = integrate_pose(&o, &OdometryDelta::new(0.1, 0.0, 0.2));
        assert!(close(p.x, 0.1 * 0.1f64.cos(), 1e-15));
        assert!(close(p.y, 0.1 * 0.1f64.sin(), 1e-15));
        assert!(close(p.x, 0.09950, 1e-5) && close(p.y, 0.00998, 1e-5));
        assert!(close(p.theta, 0.2, 1e-15));

        let p = integrate_pose(&o, &OdometryDelta::new(0.0, 0.1, 0.0));
        assert!(close(p.x, 0.0, 1e-15) && close(p.y, 0.1, 1e-15));
    }

    #[test]
    fn odometry_step_examples() {
        let k = params(0.001, 0.4);
        let o = Pose2D::default();
        let (p, d) = odometry_step(&o, &WheelTicks::default(), &k);
        assert_eq!((p, d), (o, OdometryDelta::ZERO));

        let (p, d) = odometry_step(&o, &WheelTicks::new(100, 100, 100, 100), &k);
        assert!(close(p.x, 0.1, 1e-15) && p.y == 0.0 && p.theta == 0.0);
        assert!(close(d.ds_x, 0.1, 1e-15));

        // 50 ticks * 0.002 = 0.1 m per wheel: 4 * 0.1 / (4 * 0.4) = 0.25 rad
        let (p, _) = odometry_step(&o, &WheelTicks::new(-50, 50, -50, 50), &params(0.002, 0.4));
        assert_eq!((p.x, p.y), (0.0, 0.0));
        assert!(close(p.theta, 0.25, 1e-15));
        // half the ticks reproduce the 0.125 rad body_delta example
        let (p, _) = odometry_step(&o, &WheelTicks::new(-25, 25, -25, 25), &params(0.002, 0.4));
        assert!(close(p.theta, 0.125, 1e-15));
    }

    #[test]
    fn inverse_kinematics_examples() {
        let k = params(0.001, 0.4);
        let w = inverse_kinematics(&Twist2D::new(0.1, 0.0, 0.0), &k);
        assert_eq!(w.to_array(), [0.1; 4]);
        let w = inverse_kinematics(&Twist2D::new(0.0, 0.0, 1.0), &k);
        assert_eq!(w.to_array(), [-0.4, 0.4, -0.4, 0.4]);
        let w = inverse_kinematics(&Twist2D::new(0.0, 0.1, 0.0), &k);
        assert_eq!(w.to_array(), [-0.1, 0.1, 0.1, -0.1]);
        // substituting back recovers the commanded rotation
        let back = body_delta(&w.over(1.0), &k);
        assert!(close(back.ds_y, 0.1, 1e-15));
        let rot = body_delta(
            &inverse_kinematics(&Twist2D::new(0.0, 0.0, 1.0), &k).over(1.0),
            &k,
        );
        assert!(close(rot.dtheta, 1.0, 1e-15));
    }

    #[test]
    fn calibration_examples() {
        assert_eq!(calibrate_distance_per_tick(1.0, 20000).unwrap(), 5.0e-5);
        assert_eq!(calibrate_distance_per_tick(0.5, 20000).unwrap(), 2.5e-5);
        assert_eq!(calibrate_distance_per_tick(0.5, -20000).unwrap(), 2.5e-5);
        assert!(matches!(
            calibrate_distance_per_tick(1.0, 0),
            Err(Error::Calibration(_))
        ));
        assert!(calibrate_distance_per_tick(-1.0, 10).is_err());
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(KinematicParams::new(0.0, 0.4).is_err());
        assert!(KinematicParams::new(1e-3, -0.4).is_err());
        assert!(KinematicParams::new(f64::NAN, 0.4).is_err());
    }

    #[test]
    fn closed_square_returns_to_start() {
        let k = params(5e-5, 0.4);
        let mut odo = Odometry::new(k, Pose2D::new(1.0, 2.0, 0.3));
        let legs = [
            WheelTicks::new(20, 20, 20, 20),
            WheelTicks::new(-20, 20, 20, -20),
            WheelTicks::new(-20, -20, -20, -20),
            WheelTicks::new(20, -20, -20, 20),
        ];
        for leg in legs {
            for _ in 0..2000 {
                odo.update(&leg);
            }
        }
        let p = odo.pose();
        assert!(p.distance_to(&Pose2D::new(1.0, 2.0, 0.3)) < 1e-9);
        assert_eq!(p.theta, normalize_angle(0.3));
    }

    #[test]
    fn delta_composition_matches_sequential_integration() {
        let a = OdometryDelta::new(0.01, -0.003, 0.02);
        let b = OdometryDelta::new(0.004, 0.006, -0.05);
        let start = Pose2D::new(0.5, 0.2, 1.2);
        let seq = integrate_pose(&integrate_pose(&start, &a), &b);
        let once = integrate_pose(&start, &a.then(&b));
        assert!(seq.distance_to(&once) < 1e-14);
        assert!(normalize_angle(seq.theta - once.theta).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn inverse_round_trip(vx in -2.0f64..2.0, vy in -2.0f64..2.0, w in -3.0f64..3.0,
                              dt in 1e-3f64..1.0, sep in 0.1f64..1.0) {
            let k = params(1e-4, sep);
            let d = body_delta(&inverse_kinematics(&Twist2D::new(vx, vy, w), &k).over(dt), &k);
            for (got, want) in [(d.ds_x, vx * dt), (d.ds_y, vy * dt), (d.dtheta, w * dt)] {
                prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-3));
            }
        }

        #[test]
        fn equal_ticks_drive_straight(t in -100_000i64..100_000) {
            let k = params(3.7e-5, 0.37);
            let d = body_delta(&ticks_to_distances(&WheelTicks::new(t, t, t, t), &k), &k);
            prop_assert_eq!(d.dtheta, 0.0);
            prop_assert_eq!(d.ds_y, 0.0);
        }

        #[test]
        fn spin_pattern_has_no_translation(t in -100_000i64..100_000) {
            let k = params(3.7e-5, 0.37);
            let d = body_delta(&ticks_to_distances(&WheelTicks::new(-t, t, -t, t), &k), &k);
            prop_assert_eq!(d.ds_x, 0.0);
            prop_assert_eq!(d.ds_y, 0.0);
        }

        #[test]
        fn pure_translation_is_rotated_rigidly(x in -1.0f64..1.0, y in -1.0f64..1.0, th in -3.0f64..3.0) {
            let p = Pose2D::new(0.2, -0.4, th);
            let q = integrate_pose(&p, &OdometryDelta::new(x, y, 0.0));
            let (s, c) = th.sin_cos();
            prop_assert!((q.x - (0.2 + c * x - s * y)).abs() < 1e-12);
            prop_assert!((q.y - (-0.4 + s * x + c * y)).abs() < 1e-12);
            prop_assert_eq!(q.theta, p.theta);
        }

        #[test]
        fn repeated_rotation_accumulates(n in 1usize..200, dth in -0.5f64..0.5) {
            let mut p = Pose2D::default();
            for _ in 0..n {
                p = integrate_pose(&p, &OdometryDelta::new(0.0, 0.0, dth));
            }
            prop_assert_eq!((p.x, p.y), (0.0, 0.0));
            prop_assert!(normalize_angle(p.theta - normalize_angle(n as f64 * dth)).abs() < 1e-9);
        }
    }
}
