use mecanav::bench::fixtures;
use mecanav::nav::{extract_path, path_transform, NavConfig, Path, PlanningGrid};
use mecanav::sim::{Shape, World};
use mecanav::{GridFrame, OccupancyThresholds, Pose2D};

/// Two routes from left to right: a 0.8 m corridor along the bottom and a
/// 3 m wide hall along the top, separated by a solid block.
fn corridor_or_hall() -> PlanningGrid {
    let frame = GridFrame::with_extent(0.05, 8.0, 6.0, Pose2D::default()).unwrap();
    let shapes = [
        Shape::rect(0.0, 0.0, 8.0, 0.1),
        Shape::rect(0.0, 5.9, 8.0, 6.0),
        Shape::rect(0.0, 0.0, 0.1, 6.0),
        Shape::rect(7.9, 0.0, 8.0, 6.0),
        Shape::rect(1.5, 0.0, 6.5, 0.6),
        Shape::rect(1.5, 1.4, 6.5, 2.9),
    ];
    let world = World::from_shapes(frame, &shapes).unwrap();
    PlanningGrid::from_map(world.static_grid(), &OccupancyThresholds::default())
}

fn plan(grid: &PlanningGrid, start: Pose2D, goal: Pose2D, cfg: &NavConfig) -> Path {
    let field = path_transform(grid, &goal, cfg).unwrap();
    extract_path(&field, &start).unwrap()
}

fn highest_y(p: &Path) -> f64 {
    p.waypoints.iter().map(|w| w.1).fold(f64::MIN, f64::max)
}

#[test]
fn clearance_weight_trades_the_short_corridor_for_the_wide_hall() {
    let grid = corridor_or_hall();
    let (start, goal) = (Pose2D::new(0.75, 1.0, 0.0), Pose2D::new(7.25, 1.0, 0.0));
    let base = NavConfig {
        danger_horizon: 0.8,
        ..NavConfig::default()
    };

    let short = plan(
        &grid,
        start,
        goal,
        &NavConfig {
            clearance_weight: 0.0,
            ..base
        },
    );
    assert!(highest_y(&short) < 1.4, "α = 0 takes the corridor");

    let safe = plan(
        &grid,
        start,
        goal,
        &NavConfig {
            clearance_weight: 50.0,
            ..base
        },
    );
    assert!(
        highest_y(&safe) > 2.9,
        "large α goes around through the hall"
    );
    assert!(safe.length() > short.length() + 2.0);
}

/// Sum of how far each path cell sits inside the danger horizon.
fn exposure(grid: &PlanningGrid, p: &Path, cfg: &NavConfig) -> f64 {
    let field = path_transform(grid, &p.goal, cfg).unwrap();
    p.cells
        .iter()
        .map(|&c| (cfg.danger_horizon - field.clearance().at(c)).max(0.0))
        .sum()
}

#[test]
fn raising_clearance_weight_never_adds_exposure() {
    let world = fixtures::apartment();
    let grid = PlanningGrid::from_map(world.static_grid(), &OccupancyThresholds::default());
    let start = fixtures::apartment_start();
    let goals = [
        Pose2D::new(5.45, 3.6, 0.0),
        Pose2D::new(2.9, 3.0, 0.0),
        Pose2D::new(5.0, 0.8, 0.0),
    ];
    for goal in goals {
        let mut last: Option<(f64, f64)> = None;
        for alpha in [0.0, 0.5, 2.0, 8.0, 32.0] {
            let cfg = NavConfig {
                clearance_weight: alpha,
                ..NavConfig::default()
            };
            let p = plan(&grid, start, goal, &cfg);
            let e = exposure(&grid, &p, &cfg);
            let len = p.length();
            if let Some((pe, pl)) = last {
                // one cell of slack for ties in steepest descent
                assert!(
                    e <= pe + 0.05,
                    "goal {goal:?} α {alpha}: exposure {e} after {pe}"
                );
                assert!(
                    len >= pl - 0.05,
                    "goal {goal:?} α {alpha}: length {len} after {pl}"
                );
            }
            last = Some((e, len));
        }
    }
}

#[test]
fn extracted_path_respects_the_robot_radius() {
    let world = fixtures::apartment();
    let grid = PlanningGrid::from_map(world.static_grid(), &OccupancyThresholds::default());
    let cfg = NavConfig::default();
    let field = path_transform(&grid, &Pose2D::new(5.45, 3.6, 0.0), &cfg).unwrap();
    let p = extract_path(&field, &fixtures::apartment_start()).unwrap();
    assert_eq!(p.cells.last(), Some(&field.goal_cell()));
    for &c in &p.cells {
        assert!(field.clearance().at(c) >= cfg.robot_radius);
    }
    for pair in p.cells.windows(2) {
        assert!(field.cost(pair[1]) < field.cost(pair[0]));
    }
}
