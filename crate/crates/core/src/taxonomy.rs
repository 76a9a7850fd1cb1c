//! Maneuver symbol sequences and their mapping onto the two-dimensional
//! strategy taxonomy (responsiveness × right-of-way compliance).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameParams, GameTree, PureProfile};
use crate::scenario::Scenario;
use crate::trajectory::{classify_maneuver_symbol, Maneuver, ManeuverClass, TrajectoryConfig};

/// Non-empty sequence of maneuver symbols, one per stage.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolSequence(Vec<Maneuver>);

impl SymbolSequence {
    pub fn new(symbols: Vec<Maneuver>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Validation("symbol sequence is empty".into()));
        }
        Ok(SymbolSequence(symbols))
    }

    pub fn symbols(&self) -> &[Maneuver] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Space-separated tokens, e.g. `"p pa w"`.
    pub fn to_tokens(&self) -> String {
        self.0
            .iter()
            .map(|m| m.token())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_tokens(s: &str) -> Result<Self> {
        let symbols = s
            .split_whitespace()
            .map(|t| {
                Maneuver::from_token(t)
                    .ok_or_else(|| Error::parse("symbols", format!("unknown token `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Holder,
    NonHolder,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Holder => "holder",
            RowStatus::NonHolder => "non_holder",
        }
    }
}

impl FromStr for RowStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "holder" | "row" => Ok(RowStatus::Holder),
            "non_holder" | "non-holder" | "nonholder" => Ok(RowStatus::NonHolder),
            other => Err(Error::parse(
                "row_status",
                format!("unknown status `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    UA,
    RA,
    UAA,
    RAA,
    UR,
    RR,
    UV,
    RV,
    UAV,
    RAV,
    FP,
}

impl Category {
    pub const ALL: [Category; 11] = [
        Category::UA,
        Category::RA,
        Category::UAA,
        Category::RAA,
        Category::UR,
        Category::RR,
        Category::UV,
        Category::RV,
        Category::UAV,
        Category::RAV,
        Category::FP,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::UA => "UA",
            Category::RA => "RA",
            Category::UAA => "UAA",
            Category::RAA => "RAA",
            Category::UR => "UR",
            Category::RR => "RR",
            Category::UV => "UV",
            Category::RV => "RV",
            Category::UAV => "UAV",
            Category::RAV => "RAV",
            Category::FP => "FP",
        }
    }

    /// Folds the aggressive variants into their plain counterparts.
    pub fn collapse(self) -> Category {
        match self {
            Category::UAA => Category::UA,
            Category::RAA => Category::RA,
            Category::UAV => Category::UV,
            Category::RAV => Category::RV,
            c => c,
        }
    }

    pub fn is_responsive(self) -> Option<bool> {
        match self {
            Category::RA | Category::RAA | Category::RR | Category::RV | Category::RAV => {
                Some(true)
            }
            Category::UA | Category::UAA | Category::UR | Category::UV | Category::UAV => {
                Some(false)
            }
            Category::FP => None,
        }
    }

    /// Whether `(self, status)` is a row of the taxonomy table.
    pub fn valid_for(self, status: RowStatus) -> bool {
        use Category::*;
        match status {
            RowStatus::Holder => matches!(self, UR | RR | UA | RA | UAA | RAA | FP),
            RowStatus::NonHolder => matches!(self, UA | RA | UV | RV | UAV | RAV | FP),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::parse("category", format!("unknown category `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaxonomyLabel {
    pub category: Category,
    pub row_status: RowStatus,
}

impl TaxonomyLabel {
    pub fn collapse(self) -> TaxonomyLabel {
        TaxonomyLabel {
            category: self.category.collapse(),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Initial {
    Wait,
    Proceed,
    Aggressive,
}

/// Maps a symbol sequence to its taxonomy category. The initial class is
/// the wait/proceed class of the first symbol; an initial proceed run that
/// contains any aggressive proceed is promoted to aggressive. The strategy
/// is responsive iff the wait/proceed class changes at least once.
pub fn classify_strategy(seq: &SymbolSequence, status: RowStatus) -> TaxonomyLabel {
    let syms = seq.symbols();
    let first = syms[0].is_wait();
    let change = syms.iter().position(|m| m.is_wait() != first);
    let responsive = change.is_some();
    let run = &syms[..change.unwrap_or(syms.len())];
    let initial = if first {
        Initial::Wait
    } else if run.contains(&Maneuver::AggressiveProceed) {
        Initial::Aggressive
    } else {
        Initial::Proceed
    };
    use Category::*;
    let category = match (status, initial, responsive) {
        (RowStatus::Holder, Initial::Wait, false) => UR,
        (RowStatus::Holder, Initial::Wait, true) => RR,
        (RowStatus::Holder, Initial::Proceed, false) => UA,
        (RowStatus::Holder, Initial::Proceed, true) => RA,
        (RowStatus::Holder, Initial::Aggressive, false) => UAA,
        (RowStatus::Holder, Initial::Aggressive, true) => RAA,
        (RowStatus::NonHolder, Initial::Wait, false) => UA,
        (RowStatus::NonHolder, Initial::Wait, true) => RA,
        (RowStatus::NonHolder, Initial::Proceed, false) => UV,
        (RowStatus::NonHolder, Initial::Proceed, true) => RV,
        (RowStatus::NonHolder, Initial::Aggressive, false) => UAV,
        (RowStatus::NonHolder, Initial::Aggressive, true) => RAV,
    };
    TaxonomyLabel {
        category,
        row_status: status,
    }
}

/// Annotated-log variant: an explicit alternate-path flag yields FP.
pub fn classify_annotated(
    seq: &SymbolSequence,
    status: RowStatus,
    alternate_path: bool,
) -> TaxonomyLabel {
    if alternate_path {
        TaxonomyLabel {
            category: Category::FP,
            row_status: status,
        }
    } else {
        classify_strategy(seq, status)
    }
}

/// Symbols of `agent`'s trajectories along the realized path.
pub fn extract_symbols(
    tree: &GameTree,
    profile: &PureProfile,
    agent: usize,
    aggressive_threshold: f64,
    cfg: &TrajectoryConfig,
) -> Result<SymbolSequence> {
    let path = tree.realized_path(profile)?;
    let symbols = path
        .iter()
        .map(|&(node, ja)| {
            classify_maneuver_symbol(
                &tree.node(node).actions[agent][ja[agent]],
                aggressive_threshold,
                cfg,
            )
        })
        .collect();
    SymbolSequence::new(symbols)
}

/// True iff at some stage both agents wait, both end the stage slower than
/// the stop speed, and neither has cleared the conflict zone by then.
pub fn detect_deadlock(
    tree: &GameTree,
    profile: &PureProfile,
    scenario: &Scenario,
    cfg: &TrajectoryConfig,
) -> Result<bool> {
    for (node, ja) in tree.realized_path(profile)? {
        let pair = [0, 1].map(|i| &tree.node(node).actions[i][ja[i]]);
        let all = (0..2).all(|i| {
            let t = pair[i];
            let waits = t.intent == ManeuverClass::Wait
                || classify_maneuver_symbol(t, cfg.aggressive_threshold, cfg) == Maneuver::Wait;
            waits
                && t.terminal_speed() < cfg.stop_speed
                && !scenario.agents[i].cleared(t.last().arc)
        });
        if all {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub symbols: [SymbolSequence; 2],
    pub labels: [TaxonomyLabel; 2],
    pub deadlock: bool,
    /// Conflict zone exited by the end of the planning horizon plus the
    /// constant-velocity continuation.
    pub cleared: [bool; 2],
}

/// Labels, deadlock flag and clearing flags for a solved game.
pub fn classify_outcome(
    tree: &GameTree,
    profile: &PureProfile,
    scenario: &Scenario,
    params: &GameParams,
    cfg: &TrajectoryConfig,
) -> Result<OutcomeRecord> {
    let symbols = [0, 1].map(|i| extract_symbols(tree, profile, i, cfg.aggressive_threshold, cfg));
    let [s1, s2] = symbols;
    let symbols = [s1?, s2?];
    let status = [0, 1].map(|i| {
        if scenario.agents[i].row_holder {
            RowStatus::Holder
        } else {
            RowStatus::NonHolder
        }
    });
    let labels = [0, 1].map(|i| classify_strategy(&symbols[i], status[i]));
    let path = tree.realized_path(profile)?;
    let &(last_node, last_ja) = path
        .last()
        .ok_or(Error::Validation("game has no stages".into()))?;
    let mut cleared = [false; 2];
    for (i, c) in cleared.iter_mut().enumerate() {
        let traj = &tree.node(last_node).actions[i][last_ja[i]];
        let spec = &scenario.agents[i];
        let cont = traj.continuation(&spec.path, params.delta_t_h, cfg.dt)?;
        *c = spec.cleared(cont.last().arc);
    }
    Ok(OutcomeRecord {
        symbols,
        labels,
        deadlock: detect_deadlock(tree, profile, scenario, cfg)?,
        cleared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> SymbolSequence {
        SymbolSequence::from_tokens(s).unwrap()
    }

    #[test]
    fn table_rows() {
        let h = RowStatus::Holder;
        let n = RowStatus::NonHolder;
        let cases = [
            (h, "w w w", Category::UR),
            (h, "p p w", Category::RA),
            (n, "pa w p", Category::RAV),
            (n, "w w w", Category::UA),
            (n, "w p w", Category::RA),
            (h, "pa pa pa", Category::UAA),
            (h, "w p", Category::RR),
            (n, "p p", Category::UV),
            (n, "p w", Category::RV),
            (h, "p pa p", Category::UAA),
            (h, "p w pa", Category::RA),
        ];
        for (status, s, want) in cases {
            assert_eq!(
                classify_strategy(&seq(s), status).category,
                want,
                "{s} as {status:?}"
            );
        }
    }

    #[test]
    fn collapse_folds_aggressive() {
        assert_eq!(Category::RAV.collapse(), Category::RV);
        assert_eq!(Category::UAA.collapse(), Category::UA);
        assert_eq!(Category::RR.collapse(), Category::RR);
    }

    #[test]
    fn fp_only_with_flag() {
        let s = seq("p p");
        assert_eq!(
            classify_annotated(&s, RowStatus::Holder, true).category,
            Category::FP
        );
        assert_eq!(
            classify_annotated(&s, RowStatus::Holder, false).category,
            Category::UA
        );
    }

    #[test]
    fn tokens_round_trip() {
        let s = seq("w pa p");
        assert_eq!(s.to_tokens(), "w pa p");
        assert!(SymbolSequence::from_tokens("").is_err());
        assert!(SymbolSequence::from_tokens("w x").is_err());
    }
}
