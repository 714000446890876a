use std::ffi::CStr;
use std::ptr;

use mecanav_ffi::*;

const DPT: f64 = 5e-5;
const SEP: f64 = 0.4;

#[test]
fn inverse_kinematics_matches_wheel_equations() {
    let twist = MnTwist {
        vx: 0.2,
        vy: 0.1,
        omega: 0.5,
    };
    let mut out = MnWheelSpeeds::default();
    let st = unsafe { mn_inverse_kinematics(DPT, SEP, &twist, &mut out) };
    assert_eq!(st, MnStatus::Ok);
    let w = 0.5 * SEP;
    assert!((out.fl - (0.2 - 0.1 - w)).abs() < 1e-15);
    assert!((out.fr - (0.2 + 0.1 + w)).abs() < 1e-15);
    assert!((out.rl - (0.2 + 0.1 - w)).abs() < 1e-15);
    assert!((out.rr - (0.2 - 0.1 + w)).abs() < 1e-15);

    assert_eq!(
        unsafe { mn_inverse_kinematics(DPT, SEP, ptr::null(), &mut out) },
        MnStatus::NullPointer
    );
    assert_eq!(
        unsafe { mn_inverse_kinematics(DPT, 0.0, &twist, &mut out) },
        MnStatus::InvalidArgument
    );
}

#[test]
fn odometry_handle_integrates_ticks() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { mn_odometry_new(0.001, SEP, MnPose::default(), &mut h) },
        MnStatus::Ok
    );
    let ticks = MnTicks {
        fl: 100,
        fr: 100,
        rl: 100,
        rr: 100,
    };
    let mut pose = MnPose::default();
    let mut delta = MnDelta::default();
    assert_eq!(
        unsafe { mn_odometry_update(h, &ticks, &mut pose, &mut delta) },
        MnStatus::Ok
    );
    assert!((pose.x - 0.1).abs() < 1e-12 && pose.y.abs() < 1e-12);
    assert!((delta.ds_x - 0.1).abs() < 1e-12);
    // delta is optional
    assert_eq!(
        unsafe { mn_odometry_update(h, &ticks, &mut pose, ptr::null_mut()) },
        MnStatus::Ok
    );
    assert!((pose.x - 0.2).abs() < 1e-12);
    unsafe { mn_odometry_free(h) };
    unsafe { mn_odometry_free(ptr::null_mut()) };

    let bad = MnPose {
        x: f64::NAN,
        y: 0.0,
        theta: 0.0,
    };
    assert_eq!(
        unsafe { mn_odometry_new(0.001, SEP, bad, &mut h) },
        MnStatus::InvalidArgument
    );
}

#[test]
fn slam_handle_builds_a_map() {
    let mut h = ptr::null_mut();
    let origin = MnPose::default();
    let start = MnPose {
        x: 1.0,
        y: 1.0,
        theta: 0.0,
    };
    assert_eq!(
        unsafe { mn_slam_new(100, 0.05, 4.0, 3.0, origin, start, 7, &mut h) },
        MnStatus::Ok
    );
    // a wall 1.5 m ahead across the whole field of view
    let n = 61;
    let ranges: Vec<f64> = (0..n)
        .map(|i| {
            let a = -0.6 + 0.02 * i as f64;
            1.5 / f64::cos(a)
        })
        .collect();
    let mut pose = MnPose::default();
    let st = unsafe {
        mn_slam_step(
            h,
            &MnDelta::default(),
            -0.6,
            0.02,
            0.02,
            5.6,
            ranges.as_ptr(),
            n,
            &mut pose,
        )
    };
    assert_eq!(st, MnStatus::Ok);
    assert_eq!((pose.x, pose.y), (1.0, 1.0));
    let (mut w, mut hgt) = (0, 0);
    assert_eq!(
        unsafe { mn_slam_map_size(h, &mut w, &mut hgt) },
        MnStatus::Ok
    );
    assert_eq!((w, hgt), (80, 60));
    let mut cells = vec![0u8; w * hgt];
    assert_eq!(
        unsafe { mn_slam_map_cells(h, cells.as_mut_ptr(), 10) },
        MnStatus::BufferTooSmall
    );
    assert_eq!(
        unsafe { mn_slam_map_cells(h, cells.as_mut_ptr(), cells.len()) },
        MnStatus::Ok
    );
    // cell (50, 20) holds x = 2.5 m, y = 1.0 m: the wall
    assert_eq!(cells[20 * w + 50], MN_CELL_OCCUPIED);
    assert_eq!(cells[20 * w + 30], MN_CELL_FREE);
    assert_eq!(cells[50 * w + 5], MN_CELL_UNKNOWN);
    unsafe { mn_slam_free(h) };
}

#[test]
fn planner_returns_waypoints_and_errors() {
    let (w, h) = (40usize, 20usize);
    let mut cells = vec![MN_CELL_FREE; w * h];
    for r in 0..14 {
        cells[r * w + 20] = MN_CELL_OCCUPIED;
    }
    let mut p = ptr::null_mut();
    let st = unsafe {
        mn_planner_new(
            0.05,
            w,
            h,
            MnPose::default(),
            cells.as_ptr(),
            0.1,
            0.0,
            0.5,
            &mut p,
        )
    };
    assert_eq!(st, MnStatus::Ok);
    let start = MnPose {
        x: 0.31,
        y: 0.31,
        theta: 0.0,
    };
    let goal = MnPose {
        x: 1.7,
        y: 0.3,
        theta: 0.0,
    };
    let mut len = 0;
    let st = unsafe { mn_planner_plan(p, start, goal, ptr::null_mut(), 0, &mut len) };
    assert_eq!(st, MnStatus::BufferTooSmall);
    assert!(len > 28);
    let mut xy = vec![0.0; 2 * len];
    assert_eq!(
        unsafe { mn_planner_plan(p, start, goal, xy.as_mut_ptr(), len, &mut len) },
        MnStatus::Ok
    );
    assert_eq!((xy[0], xy[1]), (0.325, 0.325));
    // the path climbs over the wall's top end
    assert!(xy.chunks(2).any(|c| c[1] > 0.7));

    let blocked = MnPose {
        x: 1.025,
        y: 0.2,
        theta: 0.0,
    };
    assert_eq!(
        unsafe { mn_planner_plan(p, start, blocked, xy.as_mut_ptr(), len, &mut len) },
        MnStatus::GoalInvalid
    );
    unsafe { mn_planner_free(p) };

    cells[0] = 7;
    let st = unsafe {
        mn_planner_new(
            0.05,
            w,
            h,
            MnPose::default(),
            cells.as_ptr(),
            0.1,
            0.0,
            0.5,
            &mut p,
        )
    };
    assert_eq!(st, MnStatus::InvalidArgument);
}

#[test]
fn status_messages_are_static_strings() {
    for s in [MnStatus::Ok, MnStatus::NoPath, MnStatus::Internal] {
        let m = unsafe { CStr::from_ptr(mn_status_message(s)) };
        assert!(!m.to_bytes().is_empty());
    }
    let v = unsafe { CStr::from_ptr(mn_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
