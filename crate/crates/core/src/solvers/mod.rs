//! Solution concepts over a [`PayoffTree`]: subgame-perfect ε-Nash
//! equilibrium by backward induction, level-0 maxmax, quantal level-1, and
//! a brute-force ε-equilibrium check.

use serde::{Deserialize, Serialize};

use crate::game::{NodeId, StrategyProfile};

mod qlk;
mod spene;
mod verify;

pub use qlk::{logit, solve_level0_maxmax, solve_qlk_level1, Level0Choices};
pub use spene::solve_spene;
pub use verify::{verify_epsilon_equilibrium, Deviation, VerifyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concept {
    Spene,
    Qlk,
}

impl Concept {
    pub fn as_str(self) -> &'static str {
        match self {
            Concept::Spene => "spene",
            Concept::Qlk => "qlk",
        }
    }
}

impl std::fmt::Display for Concept {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Concept {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spene" => Ok(Concept::Spene),
            "qlk" => Ok(Concept::Qlk),
            other => Err(format!("unknown concept `{other}` (expected spene or qlk)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverDiagnostics {
    /// Pure ε-equilibria found at each decision node (SPεNE only; zero at leaves).
    pub equilibria: Vec<usize>,
    /// Decision nodes where no pure ε-equilibrium existed and the
    /// minimal-regret joint action was used instead.
    pub fallback_nodes: Vec<NodeId>,
    /// QLk only: `action_values[node][agent][action]`, the expected value
    /// behind each logit distribution.
    pub action_values: Vec<[Vec<f64>; 2]>,
}

impl SolverDiagnostics {
    pub fn fallback_used(&self) -> bool {
        !self.fallback_nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub concept: Concept,
    pub profile: StrategyProfile,
    /// `values[node][agent]`: node value under `profile`.
    pub values: Vec<[f64; 2]>,
    pub diagnostics: SolverDiagnostics,
}
