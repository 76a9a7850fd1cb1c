use crate::error::{Error, Result};
use crate::game::{GameParams, NodeId, PayoffTree, PureProfile, StrategyProfile, TreeShape};

/// The most profitable unilateral deviation found.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    /// Root of the subgame in which the deviation is measured.
    pub node: NodeId,
    pub agent: usize,
    /// Deviating agent's own actions, one per stage from `node` down.
    pub actions: Vec<usize>,
    pub profile_value: f64,
    pub deviation_value: f64,
}

impl Deviation {
    pub fn gain(&self) -> f64 {
        self.deviation_value - self.profile_value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub holds: bool,
    pub epsilon: f64,
    /// Largest gain over all subgames and agents (`None` for a tree with no
    /// decision nodes).
    pub worst: Option<Deviation>,
}

/// Value of the path from `node` where `agent` plays `own` (one action per
/// stage) and the opponent follows `profile`. Weights restart at δ at `node`.
fn path_value(
    tree: &PayoffTree,
    profile: &PureProfile,
    node: NodeId,
    agent: usize,
    own: &[usize],
    params: &GameParams,
) -> Result<f64> {
    let shape = &tree.shape;
    let mut cur = node;
    let mut total = 0.0;
    let mut k = 0;
    while !shape.is_leaf(cur) {
        let other = profile.get(1 - agent, cur).ok_or(Error::UndefinedChoice {
            node: cur,
            agent: 1 - agent,
        })?;
        let mut ja = [0; 2];
        ja[agent] = own[k];
        ja[1 - agent] = other;
        total += params.delta.powi(k as i32 + 1) * tree.stage_payoff(cur, ja)[agent];
        cur = shape.child(cur, ja);
        k += 1;
    }
    Ok(total + params.terminal_weight() * tree.terminal_payoff(cur)[agent])
}

/// Every own-action sequence `agent` can play from `node` against the
/// opponent's fixed choices.
fn sequences(
    shape: &TreeShape,
    profile: &PureProfile,
    node: NodeId,
    agent: usize,
) -> Result<Vec<Vec<usize>>> {
    if shape.is_leaf(node) {
        return Ok(vec![Vec::new()]);
    }
    let other = profile.get(1 - agent, node).ok_or(Error::UndefinedChoice {
        node,
        agent: 1 - agent,
    })?;
    let mut out = Vec::new();
    for a in 0..shape.node(node).actions[agent] {
        let mut ja = [0; 2];
        ja[agent] = a;
        ja[1 - agent] = other;
        for mut rest in sequences(shape, profile, shape.child(node, ja), agent)? {
            rest.insert(0, a);
            out.push(rest);
        }
    }
    Ok(out)
}

/// Brute-force ε-equilibrium check of a pure profile in every subgame. The
/// opponent is fixed and pure, so enumerating the deviating agent's own
/// action sequences covers all of its behavior-strategy deviations.
/// Quantal profiles are checked at their mode.
pub fn verify_epsilon_equilibrium(
    tree: &PayoffTree,
    profile: &StrategyProfile,
    params: &GameParams,
    epsilon: f64,
) -> Result<VerifyReport> {
    let profile = profile.resolve();
    let shape = &tree.shape;
    let mut worst: Option<Deviation> = None;
    for node in 0..shape.len() {
        if shape.is_leaf(node) {
            continue;
        }
        for agent in 0..2 {
            let mut on_path = Vec::new();
            let mut cur = node;
            while !shape.is_leaf(cur) {
                let ja = profile.joint(cur)?;
                on_path.push(ja[agent]);
                cur = shape.child(cur, ja);
            }
            let base = path_value(tree, &profile, node, agent, &on_path, params)?;
            for seq in sequences(shape, &profile, node, agent)? {
                let v = path_value(tree, &profile, node, agent, &seq, params)?;
                if worst.as_ref().is_none_or(|w| v - base > w.gain()) {
                    worst = Some(Deviation {
                        node,
                        agent,
                        actions: seq,
                        profile_value: base,
                        deviation_value: v,
                    });
                }
            }
        }
    }
    let holds = worst.as_ref().is_none_or(|w| w.gain() <= epsilon + 1e-9);
    Ok(VerifyReport {
        holds,
        epsilon,
        worst,
    })
}
