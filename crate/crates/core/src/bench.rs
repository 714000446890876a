//! Navigation benchmarks in simulation: accuracy runs to random goals
//! (translation and rotation error plus collision hits) and blocked-route
//! runs that must find an alternative doorway.
//!
//! Reported times are simulated seconds, so a fixed seed gives a
//! byte-identical report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose2D;
use crate::grid::GridFrame;
use crate::nav::{path_transform, NavStatus, PlanningGrid};
use crate::pipeline::{GoalOutcome, Mission, StackConfig};
use crate::sim::{Shape, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GoalSpec {
    Fixed(Vec<Pose2D>),
    /// `count` goals drawn uniformly over reachable free space, each at least
    /// `clearance` meters from the nearest wall.
    Random {
        count: usize,
        clearance: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Fbm2Scenario {
    pub world: World,
    pub start: Pose2D,
    pub goals: GoalSpec,
    pub rounds: usize,
    pub top_k: usize,
    pub config: StackConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalResult {
    pub goal: Pose2D,
    pub achieved: Pose2D,
    pub reached: bool,
    pub translation_error: f64,
    pub rotation_error: f64,
    pub hits: u64,
    /// Simulated seconds spent on this goal.
    pub time: f64,
}

impl From<&GoalOutcome> for GoalResult {
    fn from(o: &GoalOutcome) -> Self {
        GoalResult {
            goal: o.goal,
            achieved: o.achieved,
            reached: o.reached,
            translation_error: o.translation_error,
            rotation_error: o.rotation_error,
            hits: o.collisions,
            time: o.elapsed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub seed: u64,
    pub goals: Vec<GoalResult>,
    pub mean_translation: f64,
    pub mean_rotation: f64,
    pub hits: u64,
    pub reached: usize,
}

impl RoundReport {
    pub fn new(round: usize, seed: u64, goals: Vec<GoalResult>) -> Self {
        let n = goals.len().max(1) as f64;
        RoundReport {
            round,
            seed,
            mean_translation: goals.iter().map(|g| g.translation_error).sum::<f64>() / n,
            mean_rotation: goals.iter().map(|g| g.rotation_error).sum::<f64>() / n,
            hits: goals.iter().map(|g| g.hits).sum(),
            reached: goals.iter().filter(|g| g.reached).count(),
            goals,
        }
    }

    fn combined_error(&self) -> f64 {
        self.mean_translation + self.mean_rotation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Indices of the rounds that entered the means, best first.
    pub rounds_used: Vec<usize>,
    pub mean_translation: f64,
    pub mean_rotation: f64,
    pub hits: u64,
    pub reached: usize,
}

/// Means over the best `top_k` rounds, ranked by goals reached (more is
/// better) and then by translation plus rotation error. A `top_k` of zero or
/// above the round count uses every round.
pub fn aggregate(rounds: &[RoundReport], top_k: usize) -> Result<Summary> {
    if rounds.is_empty() {
        return Err(Error::Parameter(
            "aggregate needs at least one round".into(),
        ));
    }
    let mut order: Vec<usize> = (0..rounds.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&rounds[a], &rounds[b]);
        rb.reached
            .cmp(&ra.reached)
            .then(ra.combined_error().total_cmp(&rb.combined_error()))
            .then(a.cmp(&b))
    });
    let k = if top_k == 0 {
        rounds.len()
    } else {
        top_k.min(rounds.len())
    };
    order.truncate(k);
    let used: Vec<&RoundReport> = order.iter().map(|&i| &rounds[i]).collect();
    let n = k as f64;
    Ok(Summary {
        rounds_used: used.iter().map(|r| r.round).collect(),
        mean_translation: used.iter().map(|r| r.mean_translation).sum::<f64>() / n,
        mean_rotation: used.iter().map(|r| r.mean_rotation).sum::<f64>() / n,
        hits: used.iter().map(|r| r.hits).sum(),
        reached: used.iter().map(|r| r.reached).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub benchmark: String,
    pub seed: u64,
    pub top_k: usize,
    pub rounds: Vec<RoundReport>,
    pub summary: Summary,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Seed for round `round` of a run seeded with `seed`.
pub fn round_seed(seed: u64, round: usize) -> u64 {
    seed.wrapping_add(round as u64)
}

/// Draws `count` goals over free space reachable from `start`, with at
/// least `clearance` meters to the nearest static obstacle and a uniform
/// heading.
pub fn random_goals(
    world: &World,
    start: &Pose2D,
    count: usize,
    clearance: f64,
    config: &StackConfig,
    rng: &mut impl Rng,
) -> Result<Vec<Pose2D>> {
    let grid = PlanningGrid::from_map(world.static_grid(), &config.nav.thresholds);
    let reach = path_transform(&grid, start, &config.nav)?;
    let frame = *world.frame();
    let candidates: Vec<_> = (0..frame.len())
        .filter(|&i| {
            let idx = frame.from_linear(i);
            reach.is_reachable(idx) && reach.clearance().at(idx) >= clearance
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::Parameter(format!(
            "no reachable cell with {clearance} m clearance"
        )));
    }
    let half = frame.resolution / 2.0;
    Ok((0..count)
        .map(|_| {
            let cell = frame.from_linear(candidates[rng.random_range(0..candidates.len())]);
            let (cx, cy) = frame.cell_center(cell);
            // jitter inside the cell so goals are not grid-aligned
            let x = cx + rng.random_range(-half..half) * 0.5;
            let y = cy + rng.random_range(-half..half) * 0.5;
            let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            Pose2D::new(x, y, theta)
        })
        .collect())
}

fn check_scenario(rounds: usize, config: &StackConfig) -> Result<()> {
    if rounds == 0 {
        return Err(Error::Config("rounds must be >= 1".into()));
    }
    config.validate()
}

/// Runs every round of an accuracy benchmark with a fresh stack per round.
pub fn run_fbm2(s: &Fbm2Scenario, seed: u64) -> Result<BenchReport> {
    check_scenario(s.rounds, &s.config)?;
    let mut rounds = Vec::with_capacity(s.rounds);
    for round in 0..s.rounds {
        let rs = round_seed(seed, round);
        let mut cfg = s.config;
        cfg.seed = rs;
        let goals = match &s.goals {
            GoalSpec::Fixed(g) => g.clone(),
            GoalSpec::Random { count, clearance } => {
                let mut rng = ChaCha8Rng::seed_from_u64(rs);
                random_goals(&s.world, &s.start, *count, *clearance, &cfg, &mut rng)?
            }
        };
        let mut mission = Mission::new(s.world.clone(), s.start, cfg)?;
        let mut results = Vec::with_capacity(goals.len());
        for goal in goals {
            results.push(GoalResult::from(&mission.go_to(goal)?));
        }
        rounds.push(RoundReport::new(round, rs, results));
    }
    let summary = aggregate(&rounds, s.top_k)?;
    Ok(BenchReport {
        benchmark: "fbm2".into(),
        seed,
        top_k: s.top_k,
        rounds,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub name: String,
    pub region: Shape,
}

#[derive(Debug, Clone)]
pub struct Tbm4Scenario {
    /// World including its blockage schedule.
    pub world: World,
    pub start: Pose2D,
    pub goals: Vec<Pose2D>,
    /// Named regions; each goal lists those the robot passed through.
    pub checkpoints: Vec<Checkpoint>,
    pub rounds: usize,
    pub config: StackConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tbm4Goal {
    pub goal: Pose2D,
    pub reached: bool,
    pub replanned: bool,
    pub replans: u32,
    pub status: NavStatus,
    pub translation_error: f64,
    pub rotation_error: f64,
    pub hits: u64,
    pub time: f64,
    pub visited: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tbm4Round {
    pub round: usize,
    pub seed: u64,
    pub goals: Vec<Tbm4Goal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tbm4Report {
    pub benchmark: String,
    pub seed: u64,
    pub rounds: Vec<Tbm4Round>,
    /// Goals reached over goals attempted, across all rounds.
    pub reached: usize,
    pub attempted: usize,
}

impl Tbm4Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Runs the goal sequence once per round and records, per goal, whether it
/// was reached, whether the navigator replanned and which checkpoints the
/// ground-truth trajectory crossed.
pub fn run_tbm4(s: &Tbm4Scenario, seed: u64) -> Result<Tbm4Report> {
    check_scenario(s.rounds, &s.config)?;
    let mut rounds = Vec::with_capacity(s.rounds);
    for round in 0..s.rounds {
        let rs = round_seed(seed, round);
        let mut cfg = s.config;
        cfg.seed = rs;
        let mut mission = Mission::new(s.world.clone(), s.start, cfg)?;
        let mut goals = Vec::with_capacity(s.goals.len());
        for &goal in &s.goals {
            let from = mission.trace().len();
            let o = mission.go_to(goal)?;
            let visited = s
                .checkpoints
                .iter()
                .filter(|c| {
                    mission.trace()[from..]
                        .iter()
                        .any(|t| c.region.distance(t.truth.x, t.truth.y) <= 0.0)
                })
                .map(|c| c.name.clone())
                .collect();
            goals.push(Tbm4Goal {
                goal,
                reached: o.reached,
                replanned: o.replans > 0,
                replans: o.replans,
                status: o.final_status,
                translation_error: o.translation_error,
                rotation_error: o.rotation_error,
                hits: o.collisions,
                time: o.elapsed,
                visited,
            });
        }
        rounds.push(Tbm4Round {
            round,
            seed: rs,
            goals,
        });
    }
    let attempted = rounds.iter().map(|r| r.goals.len()).sum();
    let reached = rounds
        .iter()
        .flat_map(|r| &r.goals)
        .filter(|g| g.reached)
        .count();
    Ok(Tbm4Report {
        benchmark: "tbm4".into(),
        seed,
        rounds,
        reached,
        attempted,
    })
}

/// Built-in test worlds.
pub mod fixtures {
    use super::*;

    const WALL: f64 = 0.1;

    fn outer_walls(w: f64, h: f64) -> Vec<Shape> {
        vec![
            Shape::rect(0.0, 0.0, w, WALL),
            Shape::rect(0.0, h - WALL, w, h),
            Shape::rect(0.0, 0.0, WALL, h),
            Shape::rect(w - WALL, 0.0, w, h),
        ]
    }

    /// 7 x 5 m apartment: a living room on the left, a bedroom and a kitchen
    /// on the right, joined by 0.9 m doorways, with some furniture.
    pub fn apartment() -> World {
        let (w, h) = (7.0, 5.0);
        let frame = GridFrame::with_extent(0.05, w, h, Pose2D::default()).expect("valid frame");
        let mut shapes = outer_walls(w, h);
        // partition at x = 3.6 with a door at y in [1.0, 1.9]
        shapes.push(Shape::rect(3.55, 0.0, 3.65, 1.0));
        shapes.push(Shape::rect(3.55, 1.9, 3.65, h));
        // bedroom/kitchen split at y = 2.8 with a door at x in [5.0, 5.9]
        shapes.push(Shape::rect(3.55, 2.75, 5.0, 2.85));
        shapes.push(Shape::rect(5.9, 2.75, w, 2.85));
        // sofa, table and a plant in the living room
        shapes.push(Shape::rect(0.1, 3.6, 1.8, 4.2));
        shapes.push(Shape::rect(1.9, 1.6, 2.5, 2.4));
        shapes.push(Shape::disc(0.5, 0.5, 0.2));
        // bed and kitchen counter
        shapes.push(Shape::rect(6.0, 0.1, 6.9, 1.6));
        shapes.push(Shape::rect(3.65, 4.3, 5.6, 4.9));
        World::from_shapes(frame, &shapes).expect("fixture is valid")
    }

    pub fn apartment_start() -> Pose2D {
        Pose2D::new(1.2, 1.2, 0.0)
    }

    /// Default accuracy scenario: five random goals, three rounds.
    pub fn fbm2(config: StackConfig) -> Fbm2Scenario {
        Fbm2Scenario {
            world: apartment(),
            start: apartment_start(),
            goals: GoalSpec::Random {
                count: 5,
                clearance: 0.45,
            },
            rounds: 3,
            top_k: 3,
            config,
        }
    }

    /// Door A sits at y in [0.6, 1.5], door B at y in [2.5, 3.4], both in a
    /// wall at x = 3.
    pub const DOOR_A: (f64, f64) = (0.6, 1.5);
    pub const DOOR_B: (f64, f64) = (2.5, 3.4);

    /// 6 x 4 m hall split by a wall with two doorways.
    pub fn two_door() -> World {
        let (w, h) = (6.0, 4.0);
        let frame = GridFrame::with_extent(0.05, w, h, Pose2D::default()).expect("valid frame");
        let mut shapes = outer_walls(w, h);
        shapes.push(Shape::rect(2.95, 0.0, 3.05, DOOR_A.0));
        shapes.push(Shape::rect(2.95, DOOR_A.1, 3.05, DOOR_B.0));
        shapes.push(Shape::rect(2.95, DOOR_B.1, 3.05, h));
        World::from_shapes(frame, &shapes).expect("fixture is valid")
    }

    /// Box that fills door A.
    pub fn door_a_block() -> Shape {
        Shape::rect(2.8, DOOR_A.0 - 0.05, 3.2, DOOR_A.1 + 0.05)
    }

    pub fn door_checkpoints() -> Vec<Checkpoint> {
        vec![
            Checkpoint {
                name: "door_a".into(),
                region: Shape::rect(2.8, DOOR_A.0, 3.2, DOOR_A.1),
            },
            Checkpoint {
                name: "door_b".into(),
                region: Shape::rect(2.8, DOOR_B.0, 3.2, DOOR_B.1),
            },
        ]
    }

    /// Three goals behind the wall while door A is blocked for the whole
    /// run. The first goal's direct route runs through door A.
    pub fn tbm4(config: StackConfig, rounds: usize) -> Tbm4Scenario {
        let mut world = two_door();
        world
            .spawn_obstacle(door_a_block(), None, None)
            .expect("block lies inside the world");
        Tbm4Scenario {
            world,
            start: Pose2D::new(1.0, 1.05, 0.0),
            goals: vec![
                Pose2D::new(5.0, 1.05, 0.0),
                Pose2D::new(5.0, 3.0, std::f64::consts::FRAC_PI_2),
                Pose2D::new(1.0, 3.0, std::f64::consts::PI),
            ],
            checkpoints: door_checkpoints(),
            rounds,
            config,
        }
    }
}
