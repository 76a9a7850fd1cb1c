//! Conflict scenarios and sweep expansion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ConvexPolygon, Point, Polyline};
use crate::trajectory::AgentState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    PedestrianVehicle,
    VehicleVehicle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Pedestrian,
    Vehicle,
}

/// Ranges the sweep speeds must fall in.
pub const PEDESTRIAN_SWEEP_RANGE: (f64, f64) = (1.3, 1.8);
pub const VEHICLE_SWEEP_RANGE: (f64, f64) = (1.0, 12.0);

impl AgentKind {
    pub fn sweep_range(self) -> (f64, f64) {
        match self {
            AgentKind::Pedestrian => PEDESTRIAN_SWEEP_RANGE,
            AgentKind::Vehicle => VEHICLE_SWEEP_RANGE,
        }
    }
}

/// One agent as written in the config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    pub agent_id: String,
    pub kind: AgentKind,
    pub path: Vec<[f64; 2]>,
    pub row_holder: bool,
    #[serde(default)]
    pub initial_state: AgentState,
    #[serde(default)]
    pub type_gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub pedestrian_speeds: Vec<f64>,
    pub vehicle_speeds: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub seed: u64,
}

impl SweepConfig {
    /// `n` evenly spaced values over `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    pub fn default_gamma_grid() -> Vec<f64> {
        vec![-1.0, -0.5, 0.0, 0.5, 1.0]
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            pedestrian_speeds: Self::linspace(1.3, 1.8, 5),
            vehicle_speeds: Self::linspace(1.0, 12.0, 10),
            gamma_grid: Self::default_gamma_grid(),
            seed: 2022,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub agent_id: String,
    pub kind: AgentKind,
    pub path: Polyline,
    pub row_holder: bool,
    pub initial_state: AgentState,
    pub type_gamma: f64,
    /// Arc length of the initial position along the path.
    pub start_arc: f64,
    /// Arc interval over which the path lies inside the conflict zone.
    pub zone_span: (f64, f64),
}

impl AgentSpec {
    /// Has the agent passed the far edge of the conflict zone at `arc`?
    pub fn cleared(&self, arc: f64) -> bool {
        arc > self.zone_span.1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scenario_id: String,
    pub kind: ScenarioKind,
    pub agents: [AgentSpec; 2],
    pub conflict_zone: ConvexPolygon,
}

const ON_PATH_TOLERANCE: f64 = 0.5;

impl Scenario {
    pub fn holder(&self) -> usize {
        if self.agents[0].row_holder {
            0
        } else {
            1
        }
    }

    /// Validates a scenario description. `conflict_zone` defaults to the
    /// bounding box of the path crossings inflated by 1 m.
    pub fn from_parts(
        scenario_id: &str,
        kind: ScenarioKind,
        agents: &[AgentDoc],
        conflict_zone: Option<&[[f64; 2]]>,
    ) -> Result<Scenario> {
        if agents.len() != 2 {
            return Err(Error::parse(
                "agents",
                format!("expected exactly 2 agents, got {}", agents.len()),
            ));
        }
        let holders = agents.iter().filter(|a| a.row_holder).count();
        if holders != 1 {
            return Err(Error::Validation(format!(
                "exactly one agent must hold right of way, found {holders}"
            )));
        }
        let kinds = (agents[0].kind, agents[1].kind);
        let kinds_ok = match kind {
            ScenarioKind::PedestrianVehicle => {
                matches!(
                    kinds,
                    (AgentKind::Pedestrian, AgentKind::Vehicle)
                        | (AgentKind::Vehicle, AgentKind::Pedestrian)
                )
            }
            ScenarioKind::VehicleVehicle => kinds == (AgentKind::Vehicle, AgentKind::Vehicle),
        };
        if !kinds_ok {
            return Err(Error::Validation(format!(
                "agent kinds {kinds:?} do not fit scenario kind {kind:?}"
            )));
        }

        let mut paths = Vec::with_capacity(2);
        for (i, a) in agents.iter().enumerate() {
            let pts = a.path.iter().copied().map(Point::from).collect();
            let path = Polyline::new(pts).ok_or_else(|| {
                Error::parse(
                    format!("agents[{i}].path"),
                    "needs at least 2 points with strictly increasing arc length",
                )
            })?;
            if !(-1.0..=1.0).contains(&a.type_gamma) {
                return Err(Error::Validation(format!(
                    "agents[{i}].type_gamma {} not in [-1, 1]",
                    a.type_gamma
                )));
            }
            if !a.initial_state.is_finite() {
                return Err(Error::Validation(format!(
                    "agents[{i}].initial_state is not finite"
                )));
            }
            paths.push(path);
        }

        let zone = match conflict_zone {
            Some(v) => ConvexPolygon::new(v.iter().copied().map(Point::from).collect())
                .ok_or_else(|| {
                    Error::parse(
                        "conflict_zone",
                        "must be a convex polygon with at least 3 vertices",
                    )
                })?,
            None => {
                let crossings = paths[0].intersections(&paths[1]);
                if crossings.is_empty() {
                    return Err(Error::Validation(
                        "agent paths do not cross; give conflict_zone explicitly".into(),
                    ));
                }
                let (mut min, mut max) = (crossings[0].2, crossings[0].2);
                for &(_, _, p) in &crossings {
                    min = Point::new(min.x.min(p.x), min.y.min(p.y));
                    max = Point::new(max.x.max(p.x), max.y.max(p.y));
                }
                ConvexPolygon::rect(
                    Point::new(min.x - 1.0, min.y - 1.0),
                    Point::new(max.x + 1.0, max.y + 1.0),
                )
            }
        };

        let mut specs = Vec::with_capacity(2);
        for (i, (a, path)) in agents.iter().zip(paths).enumerate() {
            let (start_arc, off) = path.project(a.initial_state.position());
            if off > ON_PATH_TOLERANCE {
                return Err(Error::Validation(format!(
                    "agents[{i}].initial_state is {off:.2} m off its path"
                )));
            }
            let zone_span = zone.path_span(&path, 0.05).ok_or_else(|| {
                Error::Validation(format!("agents[{i}].path does not reach the conflict zone"))
            })?;
            let pose = path.pose_at(start_arc);
            let mut initial_state = a.initial_state;
            initial_state.x = pose.x;
            initial_state.y = pose.y;
            initial_state.theta = pose.theta;
            specs.push(AgentSpec {
                agent_id: a.agent_id.clone(),
                kind: a.kind,
                path,
                row_holder: a.row_holder,
                initial_state,
                type_gamma: a.type_gamma,
                start_arc,
                zone_span,
            });
        }
        if specs[0].agent_id == specs[1].agent_id {
            return Err(Error::Validation("agent ids must differ".into()));
        }
        let agents: [AgentSpec; 2] = specs.try_into().expect("two agents");
        Ok(Scenario {
            scenario_id: scenario_id.to_owned(),
            kind,
            agents,
            conflict_zone: zone,
        })
    }
}

/// One fully specified game from a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameSetup {
    pub index: usize,
    pub speeds: [f64; 2],
    pub gammas: [f64; 2],
    pub seed: u64,
}

impl GameSetup {
    /// The scenario's initial state for `agent`, at this setup's speed.
    pub fn initial_state(&self, scenario: &Scenario, agent: usize) -> AgentState {
        AgentState {
            v_x: 0.0,
            v_y: self.speeds[agent],
            a_x: 0.0,
            a_y: 0.0,
            ..scenario.agents[agent].initial_state
        }
    }
}

/// SplitMix64 finalizer over `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_speeds(kind: AgentKind, speeds: &[f64], field: &'static str) -> Result<()> {
    let (lo, hi) = kind.sweep_range();
    for &v in speeds {
        if !(lo..=hi).contains(&v) {
            return Err(Error::Range {
                what: field,
                value: v,
                min: lo,
                max: hi,
            });
        }
    }
    Ok(())
}

/// Cartesian product speeds₁ × speeds₂ × Γ × Γ, in that nesting order.
pub fn expand_sweep(scenario: &Scenario, sweep: &SweepConfig) -> Result<Vec<GameSetup>> {
    check_speeds(
        AgentKind::Pedestrian,
        &sweep.pedestrian_speeds,
        "sweep.pedestrian_speeds",
    )?;
    check_speeds(
        AgentKind::Vehicle,
        &sweep.vehicle_speeds,
        "sweep.vehicle_speeds",
    )?;
    if let Some(&g) = sweep.gamma_grid.iter().find(|g| !(-1.0..=1.0).contains(*g)) {
        return Err(Error::Range {
            what: "sweep.gamma_grid",
            value: g,
            min: -1.0,
            max: 1.0,
        });
    }
    let speeds_for = |kind| match kind {
        AgentKind::Pedestrian => &sweep.pedestrian_speeds,
        AgentKind::Vehicle => &sweep.vehicle_speeds,
    };
    let s1 = speeds_for(scenario.agents[0].kind);
    let s2 = speeds_for(scenario.agents[1].kind);
    let g = &sweep.gamma_grid;
    let total = s1.len() * s2.len() * g.len() * g.len();
    if total == 0 {
        return Err(Error::EmptySweep);
    }
    let mut out = Vec::with_capacity(total);
    for &v1 in s1 {
        for &v2 in s2 {
            for &g1 in g {
                for &g2 in g {
                    let index = out.len();
                    out.push(GameSetup {
                        index,
                        speeds: [v1, v2],
                        gammas: [g1, g2],
                        seed: derive_seed(sweep.seed, index as u64),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Built-in intersection layouts.
pub mod presets {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::geom::turning_path;

    fn to_doc(pts: Vec<Point>) -> Vec<[f64; 2]> {
        pts.into_iter()
            .map(|p| [round_mm(p.x), round_mm(p.y)])
            .collect()
    }

    fn round_mm(x: f64) -> f64 {
        (x * 1000.0).round() / 1000.0
    }

    fn at(path: &[[f64; 2]], speed: f64) -> AgentState {
        AgentState {
            x: path[0][0],
            y: path[0][1],
            v_y: speed,
            ..AgentState::default()
        }
    }

    /// A pedestrian (right of way) is about to step onto a crosswalk across
    /// the exit leg of a right turn while the vehicle approaches the turn.
    pub fn pedestrian_vehicle_agents() -> Vec<AgentDoc> {
        let walk = to_doc(vec![Point::new(12.0, -2.0), Point::new(12.0, 12.0)]);
        let turn = to_doc(turning_path(
            Point::new(1.75, -46.0),
            FRAC_PI_2,
            40.0,
            6.0,
            -FRAC_PI_2,
            80.0,
            7.5,
        ));
        // the vehicle starts 22 m of path before the crosswalk
        let line =
            Polyline::new(turn.iter().map(|&p| Point::from(p)).collect()).expect("preset path");
        let start = line.point_at(line.project(Point::new(12.0, 0.0)).0 - 22.0);
        vec![
            AgentDoc {
                agent_id: "pedestrian".into(),
                kind: AgentKind::Pedestrian,
                initial_state: at(&walk, 1.5),
                path: walk,
                row_holder: true,
                type_gamma: 0.0,
            },
            AgentDoc {
                agent_id: "right_turn".into(),
                kind: AgentKind::Vehicle,
                initial_state: AgentState {
                    x: round_mm(start.x),
                    y: round_mm(start.y),
                    v_y: 6.0,
                    ..AgentState::default()
                },
                path: turn,
                row_holder: false,
                type_gamma: 0.0,
            },
        ]
    }

    /// A right-turning vehicle (right of way) has entered its turn; an
    /// oncoming left turner crosses its path and should wait.
    pub fn vehicle_vehicle_agents() -> Vec<AgentDoc> {
        let right = to_doc(turning_path(
            Point::new(1.75, -8.0),
            FRAC_PI_2,
            0.5,
            6.0,
            -FRAC_PI_2,
            80.0,
            7.5,
        ));
        let left = to_doc(turning_path(
            Point::new(-1.75, 14.0),
            -FRAC_PI_2,
            8.0,
            9.0,
            FRAC_PI_2,
            80.0,
            7.5,
        ));
        vec![
            AgentDoc {
                agent_id: "right_turn".into(),
                kind: AgentKind::Vehicle,
                initial_state: at(&right, 6.0),
                path: right,
                row_holder: true,
                type_gamma: 0.0,
            },
            AgentDoc {
                agent_id: "left_turn".into(),
                kind: AgentKind::Vehicle,
                initial_state: at(&left, 6.0),
                path: left,
                row_holder: false,
                type_gamma: 0.0,
            },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ped_veh() -> Scenario {
        Scenario::from_parts(
            "pv",
            ScenarioKind::PedestrianVehicle,
            &presets::pedestrian_vehicle_agents(),
            None,
        )
        .unwrap()
    }

    fn veh_veh() -> Scenario {
        Scenario::from_parts(
            "vv",
            ScenarioKind::VehicleVehicle,
            &presets::vehicle_vehicle_agents(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn presets_validate() {
        let pv = ped_veh();
        assert_eq!(pv.holder(), 0);
        let vv = veh_veh();
        assert_eq!(vv.holder(), 0);
        for s in [&pv, &vv] {
            assert_eq!(s.agents[0].path.intersections(&s.agents[1].path).len(), 1);
            for a in &s.agents {
                assert!(
                    a.zone_span.0 > a.start_arc,
                    "{} starts inside the zone",
                    a.agent_id
                );
            }
        }
    }

    #[test]
    fn two_holders_rejected() {
        let mut agents = presets::pedestrian_vehicle_agents();
        agents[1].row_holder = true;
        let err =
            Scenario::from_parts("x", ScenarioKind::PedestrianVehicle, &agents, None).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        agents[0].row_holder = false;
        agents[1].row_holder = false;
        assert!(Scenario::from_parts("x", ScenarioKind::PedestrianVehicle, &agents, None).is_err());
    }

    #[test]
    fn one_point_path_is_parse_error() {
        let mut agents = presets::pedestrian_vehicle_agents();
        agents[0].path.truncate(1);
        let err =
            Scenario::from_parts("x", ScenarioKind::PedestrianVehicle, &agents, None).unwrap_err();
        match err {
            Error::Parse { field, .. } => assert_eq!(field, "agents[0].path"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn default_game_counts() {
        let sweep = SweepConfig::default();
        assert_eq!(expand_sweep(&ped_veh(), &sweep).unwrap().len(), 1250);
        assert_eq!(expand_sweep(&veh_veh(), &sweep).unwrap().len(), 2500);
    }

    #[test]
    fn singleton_and_empty_sweeps() {
        let sweep = SweepConfig {
            pedestrian_speeds: vec![1.5],
            vehicle_speeds: vec![5.0],
            gamma_grid: vec![0.0],
            seed: 1,
        };
        let setups = expand_sweep(&ped_veh(), &sweep).unwrap();
        assert_eq!(setups.len(), 1);
        assert_eq!(setups[0].speeds, [1.5, 5.0]);

        let empty = SweepConfig {
            gamma_grid: vec![],
            ..sweep.clone()
        };
        assert!(matches!(
            expand_sweep(&ped_veh(), &empty),
            Err(Error::EmptySweep)
        ));

        let bad = SweepConfig {
            pedestrian_speeds: vec![2.5],
            ..sweep
        };
        assert!(matches!(
            expand_sweep(&ped_veh(), &bad),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn sweep_is_deterministic_and_in_range() {
        let sweep = SweepConfig::default();
        let a = expand_sweep(&veh_veh(), &sweep).unwrap();
        let b = expand_sweep(&veh_veh(), &sweep).unwrap();
        assert_eq!(a, b);
        for s in &a {
            for v in s.speeds {
                assert!((1.0..=12.0).contains(&v));
            }
        }
        let seeds: std::collections::HashSet<_> = a.iter().map(|s| s.seed).collect();
        assert_eq!(seeds.len(), a.len());
    }
}
