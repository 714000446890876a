//! Particle-filter SLAM over a counting occupancy grid.
//!
//! Each accepted update runs drift -> measure -> estimate -> map update ->
//! resample. Updates are gated on accumulated odometry (10 mm or 5 degrees).
//! Beam endpoints are taken half a cell behind the measured surface so the
//! hit lands inside the obstacle cell regardless of which face was struck.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{circular_mean, normalize_angle, Pose2D};
use crate::grid::{GridFrame, OccupancyGrid};
use crate::kinematics::{integrate_pose, OdometryDelta};
use crate::scan::LaserScan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub pose: Pose2D,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlamConfig {
    pub particle_count: usize,
    pub cell_resolution: f64,
    /// Meters of travel that trigger an update.
    pub gate_translation: f64,
    /// Radians of rotation that trigger an update.
    pub gate_rotation: f64,
    pub trans_error_frac: f64,
    pub rot_error_frac: f64,
    /// Heading noise per meter travelled, scaled by `trans_error_frac` (rad/m).
    pub rot_per_meter: f64,
    pub estimate_top_fraction: f64,
    pub map_width: f64,
    pub map_height: f64,
    pub map_origin: Pose2D,
    /// Likelihood floor added to every endpoint probability.
    pub endpoint_floor: f64,
    pub unknown_likelihood: f64,
    /// Only every n-th valid beam is scored.
    pub beam_stride: usize,
}

impl Default for SlamConfig {
    fn default() -> Self {
        SlamConfig {
            particle_count: 1000,
            cell_resolution: 0.05,
            gate_translation: 0.010,
            gate_rotation: 5.0f64.to_radians(),
            trans_error_frac: 0.02,
            rot_error_frac: 0.03,
            rot_per_meter: 0.1,
            estimate_top_fraction: 0.05,
            map_width: 7.0,
            map_height: 5.0,
            map_origin: Pose2D::default(),
            endpoint_floor: 0.1,
            unknown_likelihood: 0.5,
            beam_stride: 8,
        }
    }
}

impl SlamConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cell_resolution", self.cell_resolution),
            ("gate_translation", self.gate_translation),
            ("gate_rotation", self.gate_rotation),
            ("map_width", self.map_width),
            ("map_height", self.map_height),
            ("endpoint_floor", self.endpoint_floor),
            ("unknown_likelihood", self.unknown_likelihood),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("trans_error_frac", self.trans_error_frac),
            ("rot_error_frac", self.rot_error_frac),
            ("rot_per_meter", self.rot_per_meter),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.particle_count == 0 {
            return Err(Error::Config("particle_count must be > 0".into()));
        }
        if !(self.estimate_top_fraction > 0.0 && self.estimate_top_fraction <= 1.0) {
            return Err(Error::Config(
                "estimate_top_fraction must be in (0, 1]".into(),
            ));
        }
        if self.beam_stride == 0 {
            return Err(Error::Config("beam_stride must be > 0".into()));
        }
        if !self.map_origin.is_finite() {
            return Err(Error::Config("map origin must be finite".into()));
        }
        Ok(())
    }

    pub fn map_frame(&self) -> Result<GridFrame> {
        GridFrame::with_extent(
            self.cell_resolution,
            self.map_width,
            self.map_height,
            self.map_origin,
        )
    }
}

/// True once the accumulated motion reaches either gate (inclusive).
pub fn should_update(accumulated: &OdometryDelta, config: &SlamConfig) -> bool {
    accumulated.translation() >= config.gate_translation
        || accumulated.dtheta.abs() >= config.gate_rotation
}

/// Applies `delta` in every particle's own frame, then spreads the particles
/// with zero-mean Gaussian noise proportional to the motion.
pub fn drift<R: Rng + ?Sized>(
    particles: &mut [Particle],
    delta: &OdometryDelta,
    config: &SlamConfig,
    rng: &mut R,
) {
    let length = delta.translation();
    let sigma_trans = config.trans_error_frac * length;
    let sigma_rot = config.rot_error_frac * delta.dtheta.abs()
        + config.trans_error_frac * length * config.rot_per_meter;
    for p in particles.iter_mut() {
        let mut pose = integrate_pose(&p.pose, delta);
        if sigma_trans > 0.0 {
            pose.x += sigma_trans * rng.sample::<f64, _>(StandardNormal);
            pose.y += sigma_trans * rng.sample::<f64, _>(StandardNormal);
        }
        if sigma_rot > 0.0 {
            pose.theta =
                normalize_angle(pose.theta + sigma_rot * rng.sample::<f64, _>(StandardNormal));
        }
        p.pose = pose;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MeasureOutcome {
    /// The map held no evidence yet; weights were left uniform.
    pub bootstrap: bool,
    /// Every likelihood vanished; weights were reset to uniform.
    pub degenerate: bool,
}

/// Beam endpoints in the sensor frame, half a cell past the measured range.
fn scored_endpoints(scan: &LaserScan, resolution: f64, stride: usize) -> Vec<(f64, f64)> {
    scan.ranges
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .step_by(stride)
        .map(|(i, r)| {
            let (s, c) = scan.angle(i).sin_cos();
            let d = r + resolution / 2.0;
            (d * c, d * s)
        })
        .collect()
}

/// Reweights particles by the endpoint likelihood of `scan` against `map`
/// and normalizes the weights to sum to one.
pub fn measure(
    particles: &mut [Particle],
    scan: &LaserScan,
    map: &OccupancyGrid,
    config: &SlamConfig,
) -> MeasureOutcome {
    let n = particles.len();
    if n == 0 {
        return MeasureOutcome::default();
    }
    if map.is_blank() {
        set_uniform(particles);
        return MeasureOutcome {
            bootstrap: true,
            degenerate: false,
        };
    }
    let frame = map.frame();
    let log_unknown = config.unknown_likelihood.ln();
    let cell_log: Vec<f64> = (0..frame.len())
        .map(|i| match map.probability_at(i) {
            Some(p) => (p + config.endpoint_floor).ln(),
            None => log_unknown,
        })
        .collect();
    let endpoints = scored_endpoints(scan, frame.resolution, config.beam_stride);

    let log_weights: Vec<f64> = particles
        .iter()
        .map(|p| {
            let (s, c) = p.pose.theta.sin_cos();
            let prior = p.weight.ln();
            endpoints.iter().fold(prior, |acc, &(lx, ly)| {
                let x = p.pose.x + c * lx - s * ly;
                let y = p.pose.y + s * lx + c * ly;
                let (col, row) = frame.cell_coords(x, y);
                acc + if frame.contains(col, row) {
                    cell_log[row as usize * frame.width + col as usize]
                } else {
                    log_unknown
                }
            })
        })
        .collect();

    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        set_uniform(particles);
        return MeasureOutcome {
            bootstrap: false,
            degenerate: true,
        };
    }
    let mut total = 0.0;
    for (p, lw) in particles.iter_mut().zip(&log_weights) {
        p.weight = (lw - max).exp();
        total += p.weight;
    }
    if !(total > 0.0 && total.is_finite()) {
        set_uniform(particles);
        return MeasureOutcome {
            bootstrap: false,
            degenerate: true,
        };
    }
    for p in particles.iter_mut() {
        p.weight /= total;
    }
    MeasureOutcome::default()
}

fn set_uniform(particles: &mut [Particle]) {
    let w = 1.0 / particles.len() as f64;
    for p in particles {
        p.weight = w;
    }
}

/// Low-variance (systematic) resampling. Output has the same size, uniform
/// weights, and particle `i` appears floor or ceil of `N * w_i` times.
pub fn resample<R: Rng + ?Sized>(particles: &mut Vec<Particle>, rng: &mut R) {
    let n = particles.len();
    if n == 0 {
        return;
    }
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    let step = 1.0 / n as f64;
    let weight = step;
    if !(total > 0.0 && total.is_finite()) {
        set_uniform(particles);
        return;
    }
    let start = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    let mut cumulative = particles[0].weight / total;
    for m in 0..n {
        let u = start + m as f64 * step;
        while u > cumulative && i + 1 < n {
            i += 1;
            cumulative += particles[i].weight / total;
        }
        out.push(Particle {
            pose: particles[i].pose,
            weight,
        });
    }
    *particles = out;
}

/// Mean pose of the `ceil(fraction * N)` highest-weight particles; ties keep
/// particle order. Heading is the circular mean.
pub fn estimate_pose(particles: &[Particle], config: &SlamConfig) -> Result<Pose2D> {
    if particles.is_empty() {
        return Err(Error::Parameter("no particles".into()));
    }
    let n = particles.len();
    let k = ((config.estimate_top_fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| particles[b].weight.total_cmp(&particles[a].weight));
    let top = &order[..k];
    let x = top.iter().map(|&i| particles[i].pose.x).sum::<f64>() / k as f64;
    let y = top.iter().map(|&i| particles[i].pose.y).sum::<f64>() / k as f64;
    let theta = circular_mean(top.iter().map(|&i| particles[i].pose.theta));
    Ok(Pose2D::new(x, y, theta))
}

/// Integrates one scan taken from `pose` into the counters: cells a beam
/// passes through gain a miss, the endpoint cell gains a hit. Beams without
/// a return clear out to `range_max`. Beams are clipped at the map edge.
pub fn update_map(map: &mut OccupancyGrid, scan: &LaserScan, pose: &Pose2D) {
    let frame = *map.frame();
    let half_cell = frame.resolution / 2.0;
    for (i, reading) in scan.ranges.iter().enumerate() {
        let angle = pose.theta + scan.angle(i);
        let (length, hit) = match reading {
            Some(r) => (r + half_cell, true),
            None => (scan.range_max, false),
        };
        let mut last: Option<(i64, i64)> = None;
        for (col, row, _) in frame.ray(pose.x, pose.y, angle, length) {
            if let Some((c, r)) = last {
                if frame.contains(c, r) {
                    map.add_miss(r as usize * frame.width + c as usize);
                }
            }
            last = Some((col, row));
        }
        if let Some((c, r)) = last {
            if frame.contains(c, r) {
                let idx = r as usize * frame.width + c as usize;
                if hit {
                    map.add_hit(idx);
                } else {
                    map.add_miss(idx);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SlamState {
    config: SlamConfig,
    particles: Vec<Particle>,
    map: OccupancyGrid,
    /// Odometry-frame pose at the last accepted update.
    last_update_pose: Pose2D,
    accumulated: OdometryDelta,
    estimate: Pose2D,
    last_outcome: MeasureOutcome,
    updates: u64,
}

impl SlamState {
    /// All particles at `initial_pose` with weight `1/N`; blank map.
    pub fn init(config: SlamConfig, initial_pose: Pose2D) -> Result<Self> {
        config.validate()?;
        if !initial_pose.is_finite() {
            return Err(Error::Domain("initial pose"));
        }
        let n = config.particle_count;
        let particles = vec![
            Particle {
                pose: initial_pose,
                weight: 1.0 / n as f64,
            };
            n
        ];
        Ok(SlamState {
            map: OccupancyGrid::new(config.map_frame()?),
            config,
            particles,
            last_update_pose: initial_pose,
            accumulated: OdometryDelta::ZERO,
            estimate: initial_pose,
            last_outcome: MeasureOutcome::default(),
            updates: 0,
        })
    }

    pub fn config(&self) -> &SlamConfig {
        &self.config
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn map(&self) -> &OccupancyGrid {
        &self.map
    }

    /// Pose estimate at the last accepted update.
    pub fn estimate(&self) -> Pose2D {
        self.estimate
    }

    /// Last estimate advanced by odometry accumulated since.
    pub fn current_pose(&self) -> Pose2D {
        integrate_pose(&self.estimate, &self.accumulated)
    }

    pub fn accumulated(&self) -> OdometryDelta {
        self.accumulated
    }

    pub fn last_update_pose(&self) -> Pose2D {
        self.last_update_pose
    }

    pub fn last_outcome(&self) -> MeasureOutcome {
        self.last_outcome
    }

    /// Number of accepted filter updates.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Feeds one odometry delta and the scan taken at the end of it. Returns
    /// the (possibly unchanged) estimate.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        delta: &OdometryDelta,
        scan: &LaserScan,
        rng: &mut R,
    ) -> Pose2D {
        self.accumulated = self.accumulated.then(delta);
        if self.map.is_blank() {
            // first scan seeds the map from the known start pose
            let pose = self.current_pose();
            update_map(&mut self.map, scan, &pose);
            return self.estimate;
        }
        if !should_update(&self.accumulated, &self.config) {
            return self.estimate;
        }
        let acc = self.accumulated;
        drift(&mut self.particles, &acc, &self.config, rng);
        self.last_outcome = measure(&mut self.particles, scan, &self.map, &self.config);
        let estimate =
            estimate_pose(&self.particles, &self.config).expect("particle count is positive");
        update_map(&mut self.map, scan, &estimate);
        resample(&mut self.particles, rng);
        self.last_update_pose = integrate_pose(&self.last_update_pose, &acc);
        self.accumulated = OdometryDelta::ZERO;
        self.estimate = estimate;
        self.updates += 1;
        estimate
    }
}
