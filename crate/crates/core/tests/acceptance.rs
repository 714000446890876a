//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mecanav::bench::{fixtures, run_fbm2, run_tbm4};
use mecanav::kinematics::{
    body_delta, inverse_kinematics, KinematicParams, Odometry, OdometryDelta,
};
use mecanav::nav::{path_transform, NavConfig, PlanningGrid};
use mecanav::pipeline::{mean_trajectory_error, Mission, StackConfig};
use mecanav::sim::{SensorNoise, SimConfig, Simulator, World};
use mecanav::slam::{drift, Particle, SlamConfig, SlamState};
use mecanav::{normalize_angle, CellState, GridFrame, GridIndex, Pose2D, Twist2D};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion(n: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = f();
    let took = t.elapsed();
    let in_time = took <= budget;
    let pass = o.pass && in_time;
    println!(
        "criterion {n} [{}] {name}: {}; {:.2} s of {} s budget",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn kinematic_round_trip() -> Outcome {
    let k = KinematicParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let t = Twist2D::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-3.0..3.0),
        );
        let dt = rng.random_range(0.001..0.5);
        let d = body_delta(&inverse_kinematics(&t, &k).over(dt), &k);
        let want = [t.vx * dt, t.vy * dt, t.omega * dt];
        let got = [d.ds_x, d.ds_y, d.dtheta];
        let norm = want.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = want
            .iter()
            .zip(got)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err / norm);
    }
    outcome(
        worst <= 1e-12,
        format!("worst relative error {worst:.2e} over 1000 twists"),
    )
}

fn empty_room(w: f64, h: f64) -> World {
    use mecanav::sim::Shape;
    let frame = GridFrame::with_extent(0.05, w, h, Pose2D::default()).unwrap();
    let walls = [
        Shape::rect(0.0, 0.0, w, 0.1),
        Shape::rect(0.0, h - 0.1, w, h),
        Shape::rect(0.0, 0.0, 0.1, h),
        Shape::rect(w - 0.1, 0.0, w, h),
    ];
    World::from_shapes(frame, &walls).unwrap()
}

fn odometry_square() -> Outcome {
    let cfg = SimConfig {
        noise: SensorNoise::noiseless(0),
        ..SimConfig::default()
    };
    let start = Pose2D::new(1.0, 1.0, 0.0);
    let mut sim = Simulator::new(empty_room(4.0, 4.0), start, cfg).unwrap();
    let mut odo = Odometry::new(cfg.kinematics, start);
    let legs = [(0.1, 0.0), (0.0, 0.1), (-0.1, 0.0), (0.0, -0.1)];
    let mut steps = 0u32;
    for (vx, vy) in legs {
        let speeds = inverse_kinematics(&Twist2D::new(vx, vy, 0.0), &cfg.kinematics);
        for _ in 0..2000 {
            odo.update(&sim.step(&speeds, 0.01).unwrap().ticks);
            steps += 1;
        }
    }
    let bound = 0.5 * cfg.kinematics.distance_per_tick() * steps as f64;
    let back = odo.pose().distance_to(&start);
    let vs_truth = odo.pose().distance_to(&sim.pose());
    outcome(
        back <= bound && back <= 0.02 && sim.collisions() == 0,
        format!("{steps} steps, odometry ends {back:.2e} m from start (bound {bound:.2} m), {vs_truth:.2e} m from truth"),
    )
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn drift_statistics() -> Outcome {
    let cfg = SlamConfig::default();
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fresh = || {
        vec![
            Particle {
                pose: Pose2D::default(),
                weight: 1.0
            };
            n
        ]
    };

    let step = 0.5;
    let mut ps = fresh();
    drift(&mut ps, &OdometryDelta::new(step, 0.0, 0.0), &cfg, &mut rng);
    let dx: Vec<f64> = ps.iter().map(|p| p.pose.x - step).collect();
    let dy: Vec<f64> = ps.iter().map(|p| p.pose.y).collect();
    let want_t = 0.02 * step;
    let se_t = want_t / (2.0 * n as f64).sqrt();
    let (sx, sy) = (std_dev(&dx), std_dev(&dy));

    let turn = 0.8;
    let mut ps = fresh();
    drift(&mut ps, &OdometryDelta::new(0.0, 0.0, turn), &cfg, &mut rng);
    let dth: Vec<f64> = ps
        .iter()
        .map(|p| normalize_angle(p.pose.theta - turn))
        .collect();
    let want_r = 0.03 * turn;
    let se_r = want_r / (2.0 * n as f64).sqrt();
    let sr = std_dev(&dth);

    let ok = (sx - want_t).abs() <= 3.0 * se_t
        && (sy - want_t).abs() <= 3.0 * se_t
        && (sr - want_r).abs() <= 3.0 * se_r;
    outcome(
        ok,
        format!(
            "translation sigma {sx:.6}/{sy:.6} vs {want_t:.6} (3 SE = {:.6}), rotation sigma {sr:.6} vs {want_r:.6} (3 SE = {:.6})",
            3.0 * se_t,
            3.0 * se_r
        ),
    )
}

/// Straightforward Dijkstra with brute-force clearance, sharing nothing
/// with the library beyond the grid types.
fn oracle_costs(
    cells: &[CellState],
    w: usize,
    h: usize,
    res: f64,
    radius_cells: i64,
    goal: usize,
) -> Vec<f64> {
    let blocked: Vec<(i64, i64)> = (0..w * h)
        .filter(|&i| cells[i] != CellState::Free)
        .map(|i| ((i % w) as i64, (i / w) as i64))
        .collect();
    let passable: Vec<bool> = (0..w * h)
        .map(|i| {
            let (c, r) = ((i % w) as i64, (i / w) as i64);
            cells[i] == CellState::Free
                && blocked.iter().all(|&(bc, br)| {
                    (bc - c).pow(2) + (br - r).pow(2) >= radius_cells * radius_cells
                })
        })
        .collect();
    let mut cost = vec![f64::INFINITY; w * h];
    if !passable[goal] {
        return cost;
    }
    let mut heap = BinaryHeap::new();
    cost[goal] = 0.0;
    heap.push(Reverse((0u64, goal)));
    let mut done = vec![false; w * h];
    while let Some(Reverse((_, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        let (uc, ur) = ((u % w) as i64, (u / w) as i64);
        for dr in -1..=1i64 {
            for dc in -1..=1i64 {
                let (c, r) = (uc + dc, ur + dr);
                if (dc, dr) == (0, 0) || c < 0 || r < 0 || c >= w as i64 || r >= h as i64 {
                    continue;
                }
                let v = r as usize * w + c as usize;
                if !passable[v] {
                    continue;
                }
                let step = if dc != 0 && dr != 0 {
                    res * std::f64::consts::SQRT_2
                } else {
                    res
                };
                let cand = cost[u] + step;
                if cand < cost[v] {
                    cost[v] = cand;
                    // non-negative floats order like their bit patterns
                    heap.push(Reverse((cand.to_bits(), v)));
                }
            }
        }
    }
    cost
}

fn path_transform_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (w, h, res) = (50usize, 50usize, 0.05);
    let frame = GridFrame::new(res, w, h, Pose2D::default()).unwrap();
    let cfg = NavConfig {
        robot_radius: 2.0 * res,
        clearance_weight: 0.0,
        ..NavConfig::default()
    };
    let (mut grids, mut compared, mut mismatches) = (0, 0usize, 0usize);
    while grids < 20 {
        let density = rng.random_range(0.02..0.12);
        let cells: Vec<CellState> = (0..frame.len())
            .map(|_| match rng.random::<f64>() {
                p if p < density => CellState::Occupied,
                p if p < density * 1.2 => CellState::Unknown,
                _ => CellState::Free,
            })
            .collect();
        let grid = PlanningGrid::new(frame, cells.clone()).unwrap();
        let goal = rng.random_range(0..frame.len());
        let (x, y) = frame.cell_center(frame.from_linear(goal));
        let Ok(field) = path_transform(&grid, &Pose2D::new(x, y, 0.0), &cfg) else {
            continue;
        };
        grids += 1;
        let oracle = oracle_costs(&cells, w, h, res, 2, goal);
        for (i, (&a, &b)) in field.costs().iter().zip(&oracle).enumerate() {
            if a.is_finite() || b.is_finite() {
                compared += 1;
                if a.to_bits() != b.to_bits() {
                    mismatches += 1;
                    if mismatches <= 3 {
                        eprintln!("  mismatch at {:?}: {a} vs {b}", frame.from_linear(i));
                    }
                }
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{grids} random 50x50 grids, {compared} reachable cells, {mismatches} mismatches"),
    )
}

fn slam_loop() -> Outcome {
    let cfg = StackConfig {
        seed: 11,
        ..StackConfig::default()
    };
    let world = fixtures::apartment();
    let truth = world.static_occupancy().to_vec();
    let frame = *world.frame();
    let start = fixtures::apartment_start();
    let mut m = Mission::new(world, start, cfg).unwrap();
    let loop_goals = [
        Pose2D::new(3.0, 0.7, 0.0),
        Pose2D::new(4.6, 1.45, 0.0),
        Pose2D::new(5.45, 2.2, FRAC_PI_2),
        Pose2D::new(5.45, 3.6, FRAC_PI_2),
        Pose2D::new(4.2, 3.6, PI),
        Pose2D::new(5.45, 2.2, -FRAC_PI_2),
        Pose2D::new(4.6, 1.45, PI),
        Pose2D::new(2.9, 3.0, FRAC_PI_2),
        Pose2D::new(1.0, 2.6, PI),
        start,
    ];
    let mut reached = 0;
    for g in loop_goals {
        reached += m.go_to(g).unwrap().reached as usize;
    }
    let trace = m.trace();
    let length: f64 = trace
        .windows(2)
        .map(|w| w[0].truth.distance_to(&w[1].truth))
        .sum();
    let err = mean_trajectory_error(trace);
    let states = m.slam().map().states(&cfg.nav.thresholds);
    let (mut observed, mut agree) = (0usize, 0usize);
    for i in 0..frame.len() {
        let want = if truth[i] {
            CellState::Occupied
        } else {
            CellState::Free
        };
        if states[i] != CellState::Unknown {
            observed += 1;
            agree += (states[i] == want) as usize;
        }
    }
    let agreement = agree as f64 / observed as f64;
    outcome(
        err <= 0.10 && agreement >= 0.90 && (15.0..=30.0).contains(&length),
        format!(
            "{length:.1} m loop, {reached}/{} waypoints, mean pose error {err:.3} m, map agreement {:.1}% over {observed} observed cells",
            loop_goals.len(),
            100.0 * agreement
        ),
    )
}

fn fbm2() -> Outcome {
    let report = run_fbm2(&fixtures::fbm2(StackConfig::default()), 2024).unwrap();
    let s = &report.summary;
    let series: Vec<String> = report
        .rounds
        .iter()
        .map(|r| format!("{:.3}/{:.3}", r.mean_translation, r.mean_rotation))
        .collect();
    let hits: u64 = report.rounds.iter().map(|r| r.hits).sum();
    outcome(
        s.mean_translation <= 0.15 && s.mean_rotation <= 0.10 && hits == 0,
        format!(
            "top-{} mean {:.3} m / {:.3} rad, {hits} hits, {} of 15 goals reached, rounds {}",
            report.top_k,
            s.mean_translation,
            s.mean_rotation,
            s.reached,
            series.join(" ")
        ),
    )
}

fn tbm4() -> Outcome {
    let mut scenario = fixtures::tbm4(StackConfig::default(), 10);
    scenario.goals.truncate(1);
    let report = run_tbm4(&scenario, 77).unwrap();
    let good = report
        .rounds
        .iter()
        .filter(|r| {
            let g = &r.goals[0];
            g.reached && g.replanned && g.visited == ["door_b"] && g.hits == 0
        })
        .count();
    outcome(
        good == 10,
        format!("{good}/10 runs replanned and reached the goal through door B"),
    )
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

fn performance() -> Outcome {
    let world = fixtures::apartment();
    let start = fixtures::apartment_start();
    let cfg = StackConfig::default();
    let mut sim = Simulator::new(world.clone(), start, cfg.sim).unwrap();
    let mut slam = SlamState::init(cfg.slam, start).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let first = sim.scan().unwrap();
    slam.step(&OdometryDelta::ZERO, &first, &mut rng);
    let speeds = inverse_kinematics(&Twist2D::new(0.2, 0.0, 0.0), &cfg.sim.kinematics);
    let mut odo = Odometry::new(cfg.sim.kinematics, start);
    let mut times = Vec::new();
    for _ in 0..31 {
        let mut delta = OdometryDelta::ZERO;
        for _ in 0..10 {
            delta = delta.then(&odo.update(&sim.step(&speeds, 0.01).unwrap().ticks));
        }
        let scan = sim.scan().unwrap();
        let before = slam.updates();
        let t = Instant::now();
        slam.step(&delta, &scan, &mut rng);
        times.push(t.elapsed());
        assert_eq!(
            slam.updates(),
            before + 1,
            "every timed step runs the full filter"
        );
    }
    let slam_median = median(times);

    let grid = PlanningGrid::from_map(world.static_grid(), &cfg.nav.thresholds);
    let goal = Pose2D::new(5.45, 3.6, 0.0);
    let mut times = Vec::new();
    for _ in 0..31 {
        let t = Instant::now();
        let f = path_transform(&grid, &goal, &cfg.nav).unwrap();
        times.push(t.elapsed());
        assert!(f.is_reachable(GridIndex::new(24, 24)));
    }
    let pt_median = median(times);
    outcome(
        slam_median <= Duration::from_millis(50) && pt_median <= Duration::from_millis(20),
        format!(
            "slam step median {:.2} ms (1000 particles, 683 beams), path transform 140x100 median {:.2} ms",
            slam_median.as_secs_f64() * 1e3,
            pt_median.as_secs_f64() * 1e3
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_mecanav"))
            .args(["bench", "--seed", "99", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    outcome(
        a == b && !a.is_empty(),
        format!(
            "two bench runs with seed 99 wrote {} and {} bytes, identical: {}",
            a.len(),
            b.len(),
            a == b
        ),
    )
}

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "kinematic round trip", s(1), kinematic_round_trip),
        criterion(2, "odometry closed square", s(5), odometry_square),
        criterion(3, "drift noise statistics", s(10), drift_statistics),
        criterion(
            4,
            "path transform vs Dijkstra",
            s(10),
            path_transform_oracle,
        ),
        criterion(5, "SLAM apartment loop", s(60), slam_loop),
        criterion(6, "FBM2 accuracy", s(180), fbm2),
        criterion(7, "TBM4 blocked door", s(60), tbm4),
        criterion(8, "performance budget", s(60), performance),
        criterion(9, "bench determinism", s(120), determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
