use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mecanav::bench::{fixtures, run_fbm2, run_tbm4};
use mecanav::formats::config::{apply_overrides, dump_config, load_config};
use mecanav::formats::log::{read_log, write_log, Payload};
use mecanav::formats::map::{load_map, save_map};
use mecanav::formats::render::{render_map, Overlay, PATH_COLOR, TRAJECTORY_COLOR};
use mecanav::formats::scenario::{builtin_start, builtin_world, load_scenario, Scenario};
use mecanav::formats::script::{load_script, Step};
use mecanav::formats::trajectory::{load_trajectory, save_trajectory};
use mecanav::formats::world::load_world;
use mecanav::kinematics::Odometry;
use mecanav::pipeline::{replay_slam, GoalOutcome, Mission, StackConfig};
use mecanav::sim::World;
use mecanav::{Error, OccupancyThresholds, Pose2D, Result};

/// Mecanum odometry, particle-filter SLAM and path-transform navigation in
/// simulation.
#[derive(Parser)]
#[command(name = "mecanav", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every random source.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Configuration override, applied after --config (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Primary output file; stdout when omitted and the output is text.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WorldArgs {
    /// World file (map sidecar plus obstacles).
    #[arg(long, conflicts_with = "builtin")]
    world: Option<PathBuf>,

    /// Built-in world: apartment, two_door or two_door_blocked.
    #[arg(long)]
    builtin: Option<String>,

    /// Start pose as x,y,theta.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    start: Option<Pose2D>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a command script in a world and write the TICKS/SCAN/CMD/GT log.
    Simulate {
        #[command(flatten)]
        world: WorldArgs,
        /// Script of drive/wait/goal lines.
        #[arg(long)]
        script: PathBuf,
        /// Also write the estimated trajectory.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Replay a log through odometry and SLAM; --out names the map sidecar.
    Slam {
        #[arg(long)]
        log: PathBuf,
        /// Initial pose; defaults to the first GT record, else the origin.
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        start: Option<Pose2D>,
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Drive the full stack to one or more goals and print the outcomes.
    Navigate {
        #[command(flatten)]
        world: WorldArgs,
        /// Goal pose as x,y,theta (repeatable).
        #[arg(long = "goal", required = true, value_parser = parse_pose, allow_hyphen_values = true)]
        goals: Vec<Pose2D>,
        /// Also write the log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run a benchmark and write its JSON report.
    Bench {
        /// Scenario file; the built-in accuracy benchmark when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Use the built-in blocked-door benchmark instead.
        #[arg(long, conflicts_with = "scenario")]
        blocked_door: bool,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Rasterize a map with optional trajectory overlays to PPM.
    Render {
        /// Map sidecar.
        #[arg(long, conflicts_with = "world")]
        map: Option<PathBuf>,
        /// World file.
        #[arg(long)]
        world: Option<PathBuf>,
        /// Trajectory file drawn in red (repeatable).
        #[arg(long)]
        trajectory: Vec<PathBuf>,
        /// Trajectory file drawn in blue.
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Dead-reckon a log's encoder ticks; reports drift against GT records.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Print every configuration key with its effective value.
    Config,
}

fn parse_pose(s: &str) -> std::result::Result<Pose2D, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()
        .ok_or_else(|| format!("expected x,y,theta, got {s:?}"))?;
    match v.as_slice() {
        [x, y, t] => Ok(Pose2D::new(*x, *y, *t)),
        _ => Err(format!("expected x,y,theta, got {s:?}")),
    }
}

fn stack_config(cli: &Cli) -> Result<StackConfig> {
    let mut cfg = StackConfig::default();
    if let Some(p) = &cli.config {
        cfg = load_config(p, &cfg)?;
    }
    let mut pairs = Vec::new();
    for s in &cli.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {s:?}")))?;
        pairs.push((k.trim(), v.trim()));
    }
    cfg = apply_overrides(&cfg, pairs).map_err(Error::Config)?;
    cfg.seed = cli.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn open_world(a: &WorldArgs) -> Result<(World, Pose2D)> {
    let (world, default_start) = match (&a.world, &a.builtin) {
        (Some(p), _) => (load_world(p)?, None),
        (None, Some(name)) => (
            builtin_world(name)
                .ok_or_else(|| Error::Config(format!("unknown builtin world {name:?}")))?,
            builtin_start(name),
        ),
        (None, None) => (fixtures::apartment(), Some(fixtures::apartment_start())),
    };
    let start = a
        .start
        .or(default_start)
        .ok_or_else(|| Error::Config("--start is required with --world".into()))?;
    Ok((world, start))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        }),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .and_then(|_| so.flush())
                .map_err(|e| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                })
        }
    }
}

fn require_out<'a>(out: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    out.as_deref()
        .ok_or_else(|| Error::Config(format!("--out is required for {what}")))
}

fn estimated_trajectory(m: &Mission) -> Vec<(f64, Pose2D)> {
    m.trace().iter().map(|s| (s.time, s.estimate)).collect()
}

#[derive(Serialize)]
struct NavigateReport<'a> {
    seed: u64,
    goals: &'a [GoalOutcome],
    collisions: u64,
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = stack_config(cli)?;
    match &cli.command {
        Command::Simulate {
            world,
            script,
            trajectory,
        } => {
            let (world, start) = open_world(world)?;
            let steps = load_script(script)?;
            let mut m = Mission::new(world, start, cfg)?;
            m.record();
            for step in steps {
                match step {
                    Step::Drive { twist, seconds } => m.drive(twist, seconds)?,
                    Step::Goal(g) => {
                        let o = m.go_to(g)?;
                        eprintln!(
                            "goal ({:.3}, {:.3}, {:.3}): {:?}, error {:.3} m / {:.3} rad",
                            g.x,
                            g.y,
                            g.theta,
                            o.final_status,
                            o.translation_error,
                            o.rotation_error
                        );
                    }
                }
            }
            let log = m.take_log();
            match &cli.out {
                Some(p) => write_log(p, &log)?,
                None => {
                    let text: String = log.iter().map(|r| format!("{r}\n")).collect();
                    emit(&None, &text)?;
                }
            }
            if let Some(t) = trajectory {
                save_trajectory(t, &estimated_trajectory(&m))?;
            }
        }
        Command::Slam {
            log,
            start,
            trajectory,
        } => {
            let out = require_out(&cli.out, "the map")?;
            let records = read_log(log)?;
            let start = start
                .or_else(|| {
                    records.iter().find_map(|r| match r.payload {
                        Payload::Gt(p) => Some(p),
                        _ => None,
                    })
                })
                .unwrap_or_default();
            let (slam, traj) = replay_slam(
                &records,
                start,
                cfg.sim.kinematics,
                &cfg.sim.lidar,
                cfg.slam,
                cfg.seed,
            )?;
            save_map(out, slam.map(), &cfg.nav.thresholds)?;
            if let Some(t) = trajectory {
                save_trajectory(t, &traj)?;
            }
        }
        Command::Navigate { world, goals, log } => {
            let (world, start) = open_world(world)?;
            let mut m = Mission::new(world, start, cfg)?;
            if log.is_some() {
                m.record();
            }
            let mut outcomes = Vec::new();
            for &g in goals {
                outcomes.push(m.go_to(g)?);
            }
            if let Some(p) = log {
                write_log(p, &m.take_log())?;
            }
            let report = NavigateReport {
                seed: cfg.seed,
                goals: &outcomes,
                collisions: m.simulator().collisions(),
            };
            let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
            text.push('\n');
            emit(&cli.out, &text)?;
        }
        Command::Bench {
            scenario,
            blocked_door,
            rounds,
            top_k,
        } => {
            let scenario = match scenario {
                Some(p) => load_scenario(p, cfg)?,
                None if *blocked_door => Scenario::Tbm4(fixtures::tbm4(cfg, 10)),
                None => Scenario::Fbm2(fixtures::fbm2(cfg)),
            };
            let text = match scenario {
                Scenario::Fbm2(mut s) => {
                    s.rounds = rounds.unwrap_or(s.rounds);
                    s.top_k = top_k.unwrap_or(s.top_k);
                    let r = run_fbm2(&s, cli.seed)?;
                    eprintln!(
                        "fbm2: top-{} mean {:.3} m / {:.3} rad, {} hits, {} goals reached",
                        s.top_k,
                        r.summary.mean_translation,
                        r.summary.mean_rotation,
                        r.summary.hits,
                        r.summary.reached
                    );
                    r.to_json()
                }
                Scenario::Tbm4(mut s) => {
                    s.rounds = rounds.unwrap_or(s.rounds);
                    let r = run_tbm4(&s, cli.seed)?;
                    eprintln!("tbm4: {}/{} goals reached", r.reached, r.attempted);
                    r.to_json()
                }
            };
            emit(&cli.out, &text)?;
        }
        Command::Render {
            map,
            world,
            trajectory,
            path,
        } => {
            let out = require_out(&cli.out, "the image")?;
            let (grid, th) = match (map, world) {
                (Some(p), _) => load_map(p)?,
                (None, Some(p)) => (
                    load_world(p)?.static_grid().clone(),
                    OccupancyThresholds::default(),
                ),
                (None, None) => return Err(Error::Config("render needs --map or --world".into())),
            };
            let load_points = |p: &PathBuf| -> Result<Vec<(f64, f64)>> {
                Ok(load_trajectory(p)?
                    .into_iter()
                    .map(|(_, q)| (q.x, q.y))
                    .collect())
            };
            let mut lines = Vec::new();
            for p in trajectory {
                lines.push((load_points(p)?, TRAJECTORY_COLOR));
            }
            if let Some(p) = path {
                lines.push((load_points(p)?, PATH_COLOR));
            }
            let overlays: Vec<Overlay<'_>> = lines
                .iter()
                .map(|(pts, c)| Overlay {
                    points: pts,
                    color: *c,
                })
                .collect();
            let img = render_map(&grid, &th, &overlays);
            std::fs::write(out, img.to_ppm()).map_err(|e| Error::Io {
                path: out.to_path_buf(),
                source: e,
            })?;
        }
        Command::Replay { log } => {
            let records = read_log(log)?;
            let mut odom: Option<Odometry> = None;
            let mut truth = None;
            let mut traj = Vec::new();
            for r in &records {
                match &r.payload {
                    Payload::Gt(p) => {
                        truth = Some(*p);
                        odom.get_or_insert_with(|| Odometry::new(cfg.sim.kinematics, *p));
                    }
                    Payload::Ticks(t) => {
                        let o = odom.get_or_insert_with(|| {
                            Odometry::new(cfg.sim.kinematics, Pose2D::default())
                        });
                        o.update(t);
                        traj.push((r.time.as_secs(), o.pose()));
                    }
                    _ => {}
                }
            }
            if let (Some(o), Some(t)) = (&odom, truth) {
                let (dt, dr) = mecanav::pose_error(&t, &o.pose());
                eprintln!("final odometry drift {dt:.4} m / {dr:.4} rad against ground truth");
            }
            let text = mecanav::formats::trajectory::format_trajectory(&traj);
            emit(&cli.out, &text)?;
        }
        Command::Config => emit(&cli.out, &dump_config(&cfg))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
