//! Per-node action sets: maneuver-tagged trajectory segments over one
//! planning period, plus trajectory-pair geometry.
//!
//! Vehicles follow a cubic in arc length, `s(t) = v1·t + (v0 − v1)·T/3·(1 − (1 − t/T)³)`,
//! which starts at speed `v0`, reaches the target `v1` at `t = T` with zero
//! acceleration and has constant jerk `2(v1 − v0)/T²`. Peak acceleration
//! magnitude is `2|v1 − v0|/T`, at `t = 0`. Pedestrians proceed at constant
//! velocity and wait by braking with the same cubic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point, Polyline};

/// Body-frame kinematic state `[x, y, v_x, v_y, a_x, a_y, θ]`.
///
/// `v_x`/`a_x` are lateral and `v_y`/`a_y` longitudinal. Agents track their
/// path exactly, so the lateral components stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub a_x: f64,
    pub a_y: f64,
    pub theta: f64,
}

impl AgentState {
    pub fn speed(&self) -> f64 {
        self.v_x.hypot(self.v_y)
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.x, self.y, self.v_x, self.v_y, self.a_x, self.a_y, self.theta,
        ]
        .iter()
        .all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicLimits {
    pub v_max: f64,
    pub a_long_max: f64,
    pub a_lat_max: f64,
    pub jerk_max: f64,
}

impl KinematicLimits {
    pub const VEHICLE: KinematicLimits = KinematicLimits {
        v_max: 12.0,
        a_long_max: 4.0,
        a_lat_max: 3.0,
        jerk_max: 10.0,
    };

    pub const PEDESTRIAN: KinematicLimits = KinematicLimits {
        v_max: 1.8,
        a_long_max: 3.0,
        a_lat_max: 3.0,
        jerk_max: 10.0,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [self.v_max, self.a_long_max, self.a_lat_max, self.jerk_max];
        if all.iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "kinematic limits must be positive: {self:?}"
            )))
        }
    }

    /// Largest speed change a single cubic segment of length `period` can make.
    pub fn max_speed_change(&self, period: f64) -> f64 {
        (self.a_long_max * period / 2.0).min(self.jerk_max * period * period / 2.0)
    }
}

/// Maneuver symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Maneuver {
    #[serde(rename = "w")]
    Wait,
    #[serde(rename = "p")]
    Proceed,
    #[serde(rename = "pa")]
    AggressiveProceed,
}

impl Maneuver {
    pub fn token(self) -> &'static str {
        match self {
            Maneuver::Wait => "w",
            Maneuver::Proceed => "p",
            Maneuver::AggressiveProceed => "pa",
        }
    }

    pub fn from_token(tok: &str) -> Option<Self> {
        match tok {
            "w" => Some(Maneuver::Wait),
            "p" => Some(Maneuver::Proceed),
            "pa" | "p_a" => Some(Maneuver::AggressiveProceed),
            _ => None,
        }
    }

    pub fn is_wait(self) -> bool {
        self == Maneuver::Wait
    }
}

/// Which high-level maneuver a trajectory was generated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManeuverClass {
    Wait,
    Proceed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    /// Absolute arc length along the agent's path.
    pub arc: f64,
    pub state: AgentState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub maneuver: Maneuver,
    pub intent: ManeuverClass,
    pub target_speed: f64,
    pub path_arc_progress: f64,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories are never empty")
    }

    pub fn terminal_speed(&self) -> f64 {
        self.last().state.speed()
    }

    pub fn dt(&self) -> f64 {
        self.samples[1].t - self.samples[0].t
    }

    pub fn duration(&self) -> f64 {
        self.last().t - self.first().t
    }

    /// Largest positive longitudinal acceleration over the samples.
    pub fn max_acceleration(&self) -> f64 {
        self.samples.iter().map(|s| s.state.a_y).fold(0.0, f64::max)
    }

    /// Constant-velocity extension from the last sample, along the path, for
    /// `duration` seconds at step `dt`.
    pub fn continuation(&self, path: &Polyline, duration: f64, dt: f64) -> Result<Trajectory> {
        let end = self.last();
        let v = end.state.speed();
        let grid = TimeGrid::new(duration, dt)?;
        let samples = grid
            .times()
            .map(|t| {
                let arc = end.arc + v * t;
                sample_on_path(path, end.t + t, arc, v, 0.0)
            })
            .collect();
        Ok(Trajectory {
            samples,
            maneuver: self.maneuver,
            intent: self.intent,
            target_speed: v,
            path_arc_progress: v * grid.period,
        })
    }
}

/// `n` equal steps covering `[0, period]`.
#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    pub period: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(period: f64, dt: f64) -> Result<Self> {
        if period.is_nan() || period <= 0.0 || dt.is_nan() || dt <= 0.0 {
            return Err(Error::Validation(format!(
                "period ({period}) and dt ({dt}) must be positive"
            )));
        }
        let steps = (period / dt).round();
        if steps < 1.0 || (steps * dt - period).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "period {period} is not a whole number of {dt} s steps"
            )));
        }
        Ok(TimeGrid {
            period,
            steps: steps as usize,
        })
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |k| self.period * k as f64 / self.steps as f64)
    }
}

/// Options shared by both action generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    /// Sample step, seconds.
    pub dt: f64,
    /// m/s²; a proceed whose peak acceleration exceeds this is aggressive.
    pub aggressive_threshold: f64,
    /// Terminal speed below which an agent counts as stopped.
    pub stop_speed: f64,
    /// Arc progress below which a stopped trajectory counts as stationary.
    pub progress_epsilon: f64,
    /// Change applied around the current speed for proceed targets.
    pub vehicle_speed_step: f64,
    pub vehicle_limits: KinematicLimits,
    pub pedestrian_limits: KinematicLimits,
    pub pedestrian_speeds: Vec<f64>,
    pub max_actions: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            dt: 0.1,
            aggressive_threshold: 2.5,
            stop_speed: 0.1,
            progress_epsilon: 0.05,
            vehicle_speed_step: 2.0,
            vehicle_limits: KinematicLimits::VEHICLE,
            pedestrian_limits: KinematicLimits::PEDESTRIAN,
            pedestrian_speeds: vec![1.3, 1.55, 1.8],
            max_actions: 6,
        }
    }
}

pub const PEDESTRIAN_SPEED_RANGE: (f64, f64) = (1.3, 1.8);

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        self.vehicle_limits.validate()?;
        self.pedestrian_limits.validate()?;
        let positive = |x: f64| x > 0.0;
        if !positive(self.dt) || !positive(self.aggressive_threshold) || self.max_actions < 2 {
            return Err(Error::Validation(
                "trajectory: dt and aggressive_threshold must be positive, max_actions >= 2".into(),
            ));
        }
        for &v in &self.pedestrian_speeds {
            check_pedestrian_speed(v)?;
        }
        Ok(())
    }
}

fn check_pedestrian_speed(v: f64) -> Result<()> {
    let (lo, hi) = PEDESTRIAN_SPEED_RANGE;
    if (lo - 1e-9..=hi + 1e-9).contains(&v) {
        Ok(())
    } else {
        Err(Error::Range {
            what: "pedestrian speed",
            value: v,
            min: lo,
            max: hi,
        })
    }
}

/// Trajectories available to one agent at one node, in canonical order:
/// wait first, proceeds by ascending target speed, aggressive proceed last.
#[derive(Debug, Clone, Default)]
pub struct ActionSet {
    pub actions: Vec<Trajectory>,
    /// Maneuver classes for which no feasible trajectory exists.
    pub unavailable: Vec<ManeuverClass>,
}

fn sample_on_path(path: &Polyline, t: f64, arc: f64, v: f64, a: f64) -> Sample {
    let pose = path.pose_at(arc);
    Sample {
        t,
        arc,
        state: AgentState {
            x: pose.x,
            y: pose.y,
            v_x: 0.0,
            v_y: v,
            a_x: 0.0,
            a_y: a,
            theta: pose.theta,
        },
    }
}

/// Cubic speed change `v0 → v1` over the grid, starting at `arc0`, time offset `t0`.
fn cubic_segment(
    path: &Polyline,
    t0: f64,
    arc0: f64,
    v0: f64,
    v1: f64,
    grid: TimeGrid,
) -> Vec<Sample> {
    let big_t = grid.period;
    grid.times()
        .map(|t| {
            let r = 1.0 - t / big_t;
            let s = v1 * t + (v0 - v1) * big_t / 3.0 * (1.0 - r * r * r);
            let v = v1 + (v0 - v1) * r * r;
            let a = -2.0 * (v0 - v1) * r / big_t;
            sample_on_path(path, t0 + t, arc0 + s, v, a)
        })
        .collect()
}

fn constant_segment(path: &Polyline, t0: f64, arc0: f64, v: f64, grid: TimeGrid) -> Vec<Sample> {
    grid.times()
        .map(|t| sample_on_path(path, t0 + t, arc0 + v * t, v, 0.0))
        .collect()
}

fn build(
    samples: Vec<Sample>,
    intent: ManeuverClass,
    target: f64,
    cfg: &TrajectoryConfig,
) -> Trajectory {
    let progress = samples.last().map(|s| s.arc).unwrap_or(0.0) - samples[0].arc;
    let mut traj = Trajectory {
        samples,
        maneuver: Maneuver::Proceed,
        intent,
        target_speed: target,
        path_arc_progress: progress,
    };
    traj.maneuver = classify_maneuver_symbol(&traj, cfg.aggressive_threshold, cfg);
    traj
}

/// Braking toward a stop: the full stop if one period allows it, otherwise the
/// hardest deceleration the limits permit.
fn wait_trajectory(
    path: &Polyline,
    t0: f64,
    arc: f64,
    v0: f64,
    limits: &KinematicLimits,
    grid: TimeGrid,
    cfg: &TrajectoryConfig,
) -> Trajectory {
    let v1 = (v0 - limits.max_speed_change(grid.period)).max(0.0);
    let samples = if v0 == 0.0 {
        constant_segment(path, t0, arc, 0.0, grid)
    } else {
        cubic_segment(path, t0, arc, v0, v1, grid)
    };
    build(samples, ManeuverClass::Wait, v1, cfg)
}

/// Cubic-spline actions for a vehicle at arc length `arc` on `path`.
pub fn generate_vehicle_actions(
    state: &AgentState,
    t0: f64,
    arc: f64,
    path: &Polyline,
    limits: &KinematicLimits,
    period: f64,
    cfg: &TrajectoryConfig,
) -> Result<ActionSet> {
    let grid = TimeGrid::new(period, cfg.dt)?;
    let v0 = state.speed();
    let mut set = ActionSet {
        actions: vec![wait_trajectory(path, t0, arc, v0, limits, grid, cfg)],
        unavailable: Vec::new(),
    };
    let wait_end = set.actions[0].target_speed;

    if arc >= path.length() {
        set.unavailable.push(ManeuverClass::Proceed);
        return Ok(set);
    }

    let step = cfg.vehicle_speed_step;
    let mut targets: Vec<f64> = [v0, v0 - step, v0 + step, limits.v_max / 2.0, limits.v_max]
        .into_iter()
        .map(|v| v.clamp(0.0, limits.v_max))
        .collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let (mut normal, mut aggressive) = (Vec::new(), Vec::new());
    for v1 in targets {
        let dv = (v1 - v0).abs();
        let feasible = v1 <= limits.v_max
            && 2.0 * dv / period <= limits.a_long_max + 1e-12
            && 2.0 * dv / (period * period) <= limits.jerk_max + 1e-12;
        // a target at (or below) the wait's terminal speed duplicates braking
        if !feasible || v1 < cfg.stop_speed || (v1 < v0 && (v1 - wait_end).abs() < 1e-9) {
            continue;
        }
        let traj = build(
            cubic_segment(path, t0, arc, v0, v1, grid),
            ManeuverClass::Proceed,
            v1,
            cfg,
        );
        match traj.maneuver {
            Maneuver::AggressiveProceed => aggressive.push(traj),
            _ => normal.push(traj),
        }
    }
    let room = cfg.max_actions.saturating_sub(1);
    let keep_aggressive = usize::from(!aggressive.is_empty() && room > 0);
    normal.truncate(room - keep_aggressive);
    set.actions.extend(normal);
    if keep_aggressive == 1 {
        set.actions.extend(aggressive.pop());
    }
    if set.actions.len() == 1 {
        set.unavailable.push(ManeuverClass::Proceed);
    }
    Ok(set)
}

/// Constant-velocity proceeds at each requested speed, plus a braking wait.
pub fn generate_pedestrian_actions(
    state: &AgentState,
    t0: f64,
    arc: f64,
    path: &Polyline,
    speed_options: &[f64],
    period: f64,
    cfg: &TrajectoryConfig,
) -> Result<ActionSet> {
    for &v in speed_options {
        check_pedestrian_speed(v)?;
    }
    let grid = TimeGrid::new(period, cfg.dt)?;
    let limits = &cfg.pedestrian_limits;
    let mut set = ActionSet {
        actions: vec![wait_trajectory(
            path,
            t0,
            arc,
            state.speed(),
            limits,
            grid,
            cfg,
        )],
        unavailable: Vec::new(),
    };
    if arc >= path.length() {
        set.unavailable.push(ManeuverClass::Proceed);
        return Ok(set);
    }
    let mut speeds = speed_options.to_vec();
    speeds.sort_by(f64::total_cmp);
    speeds.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    speeds.truncate(cfg.max_actions - 1);
    for v in speeds {
        set.actions.push(build(
            constant_segment(path, t0, arc, v, grid),
            ManeuverClass::Proceed,
            v,
            cfg,
        ));
    }
    Ok(set)
}

/// Speed options for a pedestrian at `state`: the configured set plus the
/// current speed when it is a valid walking speed.
pub fn pedestrian_speed_options(state: &AgentState, cfg: &TrajectoryConfig) -> Vec<f64> {
    let mut opts = cfg.pedestrian_speeds.clone();
    let v = state.speed();
    if check_pedestrian_speed(v).is_ok() {
        opts.push(v);
    }
    opts
}

/// Minimum Euclidean distance between two trajectories on a shared time grid.
pub fn min_gap(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.samples.len() != b.samples.len()
        || a.samples
            .iter()
            .zip(&b.samples)
            .any(|(p, q)| (p.t - q.t).abs() > 1e-9)
    {
        return Err(Error::GridMismatch);
    }
    Ok(a.samples
        .iter()
        .zip(&b.samples)
        .map(|(p, q)| p.state.position().dist(q.state.position()))
        .fold(f64::INFINITY, f64::min))
}

/// Symbol for a trajectory: `w` when it holds still, brakes toward a stop or
/// ends stopped after slowing; `pa` for a proceed whose peak acceleration
/// exceeds `aggressive_threshold`; `p` otherwise.
pub fn classify_maneuver_symbol(
    traj: &Trajectory,
    aggressive_threshold: f64,
    cfg: &TrajectoryConfig,
) -> Maneuver {
    let end_speed = traj.terminal_speed();
    let stationary = end_speed < cfg.stop_speed && traj.path_arc_progress < cfg.progress_epsilon;
    let slowed_to_stop = end_speed < cfg.stop_speed
        && traj
            .samples
            .windows(2)
            .all(|w| w[1].state.speed() <= w[0].state.speed() + 1e-12);
    if stationary || slowed_to_stop || traj.intent == ManeuverClass::Wait {
        Maneuver::Wait
    } else if traj.max_acceleration() > aggressive_threshold {
        Maneuver::AggressiveProceed
    } else {
        Maneuver::Proceed
    }
}

/// First kinematic limit a trajectory breaks, if any. Speed and acceleration
/// are checked exactly on the samples; jerk by finite differences of the
/// sampled acceleration with relative slack `jerk_tolerance`.
pub fn limit_violation(
    traj: &Trajectory,
    limits: &KinematicLimits,
    jerk_tolerance: f64,
) -> Option<String> {
    const EXACT: f64 = 1e-9;
    for s in &traj.samples {
        if s.state.speed() > limits.v_max + EXACT {
            return Some(format!(
                "speed {} > {} at t={}",
                s.state.speed(),
                limits.v_max,
                s.t
            ));
        }
        if s.state.a_y.abs() > limits.a_long_max + EXACT {
            return Some(format!(
                "a_long {} > {} at t={}",
                s.state.a_y, limits.a_long_max, s.t
            ));
        }
        if s.state.a_x.abs() > limits.a_lat_max + EXACT {
            return Some(format!(
                "a_lat {} > {} at t={}",
                s.state.a_x, limits.a_lat_max, s.t
            ));
        }
    }
    for w in traj.samples.windows(2) {
        let jerk = (w[1].state.a_y - w[0].state.a_y) / (w[1].t - w[0].t);
        if jerk.abs() > limits.jerk_max * (1.0 + jerk_tolerance) {
            return Some(format!(
                "jerk {} > {} at t={}",
                jerk, limits.jerk_max, w[0].t
            ));
        }
    }
    None
}
