//! Experiment configuration: a TOML document plus dotted-path overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::game::GameParams;
use crate::scenario::{presets, AgentDoc, Scenario, ScenarioKind, SweepConfig};
use crate::solvers::Concept;
use crate::trajectory::TrajectoryConfig;
use crate::utility::UtilityParams;

/// How realized QLk play is drawn from the quantal distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QlkPlay {
    #[default]
    Mode,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub concept: Concept,
    pub qlk_play: QlkPlay,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            concept: Concept::Spene,
            qlk_play: QlkPlay::Mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario_id: String,
    pub kind: ScenarioKind,
    pub agents: Vec<AgentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conflict_zone: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub game: GameParams,
    #[serde(default)]
    pub utility: UtilityParams,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// Keys that are absent from a fully defaulted document but may be set.
const OPTIONAL_KEYS: [&str; 2] = ["game.terminal_norm", "conflict_zone"];

fn toml_error(e: impl std::fmt::Display) -> Error {
    let msg = e.to_string();
    // toml reports the offending key inside the message; keep the first line as the field hint
    let field = msg.lines().next().unwrap_or("document").trim().to_string();
    Error::parse(field, msg)
}

fn parse_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::UnknownKey(key.to_string()));
    }
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        let table = match cur {
            toml::Value::Table(t) => t,
            _ => return Err(Error::UnknownKey(key.to_string())),
        };
        if last {
            if !table.contains_key(*part) && !OPTIONAL_KEYS.contains(&key) {
                return Err(Error::UnknownKey(key.to_string()));
            }
            table.insert(part.to_string(), value);
            return Ok(());
        }
        cur = table
            .get_mut(*part)
            .ok_or_else(|| Error::UnknownKey(key.to_string()))?;
    }
    unreachable!("key has at least one part")
}

impl ExperimentConfig {
    pub fn from_toml_str(doc: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(doc).map_err(toml_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and applies `key=value` overrides in order.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let doc = std::fs::read_to_string(path)?;
        Self::from_toml_str(&doc)?.with_overrides(overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Validation(e.to_string()))
    }

    /// Applies dotted-path overrides such as `game.epsilon=0.2`. Values are
    /// read as TOML literals, falling back to a bare string.
    pub fn with_overrides(self, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut value =
            toml::Value::try_from(&self).map_err(|e| Error::Validation(e.to_string()))?;
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::parse(o.clone(), "override must be key=value"))?;
            set_path(&mut value, key.trim(), parse_value(raw))?;
        }
        let cfg: ExperimentConfig = value.try_into().map_err(toml_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.game.validate()?;
        self.utility.validate()?;
        self.trajectory.validate()?;
        self.scenario()?;
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::from_parts(
            &self.scenario_id,
            self.kind,
            &self.agents,
            self.conflict_zone.as_deref(),
        )
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        hex::encode(digest)[..16].to_string()
    }

    pub fn pedestrian_vehicle() -> Self {
        Self::preset(
            "ped_veh",
            ScenarioKind::PedestrianVehicle,
            presets::pedestrian_vehicle_agents(),
        )
    }

    pub fn vehicle_vehicle() -> Self {
        Self::preset(
            "veh_veh",
            ScenarioKind::VehicleVehicle,
            presets::vehicle_vehicle_agents(),
        )
    }

    fn preset(id: &str, kind: ScenarioKind, agents: Vec<AgentDoc>) -> Self {
        ExperimentConfig {
            scenario_id: id.to_string(),
            kind,
            agents,
            conflict_zone: None,
            sweep: SweepConfig::default(),
            game: GameParams::default(),
            utility: UtilityParams::default(),
            trajectory: TrajectoryConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}
