use crate::game::{
    argmax_first, GameParams, JointAction, NodeId, PayoffTree, QuantalProfile, StrategyProfile,
};
use crate::utility::Weights;

use super::{Concept, SolverDiagnostics, SolverResult};

/// Level-0 action per node for one agent (`None` at leaves).
pub type Level0Choices = Vec<Option<usize>>;

fn joint(agent: usize, own: usize, other: usize) -> JointAction {
    if agent == 0 {
        [own, other]
    } else {
        [other, own]
    }
}

/// Best-case value for `agent` from `node` over every joint continuation,
/// with stage weight `w` at `node`.
fn optimistic(tree: &PayoffTree, node: NodeId, agent: usize, w: f64, weights: Weights) -> f64 {
    let shape = &tree.shape;
    if shape.is_leaf(node) {
        return weights.terminal * tree.terminal_payoff(node)[agent];
    }
    shape
        .children(node)
        .map(|(ja, child)| {
            w * tree.stage_payoff(node, ja)[agent]
                + optimistic(tree, child, agent, w * weights.delta, weights)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Optimistic non-strategic play: at every node `agent` picks the action
/// whose best outcome over opponent actions (and over all continuations) is
/// highest. Only `agent`'s own payoffs are read. Ties go to the first action.
pub fn solve_level0_maxmax(tree: &PayoffTree, params: &GameParams, agent: usize) -> Level0Choices {
    let shape = &tree.shape;
    let weights = Weights::from(params);
    let d = weights.delta;
    let mut out = vec![None; shape.len()];
    for (id, slot) in out.iter_mut().enumerate() {
        if shape.is_leaf(id) {
            continue;
        }
        let mut best = vec![f64::NEG_INFINITY; shape.node(id).actions[agent]];
        for (ja, child) in shape.children(id) {
            let v = d * tree.stage_payoff(id, ja)[agent]
                + optimistic(tree, child, agent, d * d, weights);
            let a = ja[agent];
            if v > best[a] {
                best[a] = v;
            }
        }
        *slot = Some(argmax_first(&best));
    }
    out
}

/// Logit response `P(a) ∝ exp(λ·EV(a))`, shifted by the maximum for
/// stability.
pub fn logit(evs: &[f64], lambda: f64) -> Vec<f64> {
    let m = evs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = evs.iter().map(|&v| (lambda * (v - m)).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

/// Quantal level-1 against a maxmax level-0 opponent. Each agent's
/// expected value of an own action at a node assumes the opponent's level-0
/// choice there and below, and its own modal level-1 choice below. The
/// value table holds expectations under both agents' quantal distributions.
pub fn solve_qlk_level1(tree: &PayoffTree, params: &GameParams) -> SolverResult {
    let shape = &tree.shape;
    let weights = Weights::from(params);
    let d = weights.delta;
    let n = shape.len();
    let level0 = [
        solve_level0_maxmax(tree, params, 0),
        solve_level0_maxmax(tree, params, 1),
    ];
    let mut profile = QuantalProfile::empty(n);
    let mut action_values: Vec<[Vec<f64>; 2]> = vec![[Vec::new(), Vec::new()]; n];
    let mut mode: [Vec<usize>; 2] = [vec![0; n], vec![0; n]];

    for i in 0..2 {
        let other = 1 - i;
        let opp = &level0[other];
        for id in shape.bottom_up() {
            let k = shape.node(id).actions[i];
            let b = opp[id].expect("decision node");
            let evs: Vec<f64> = (0..k)
                .map(|a| {
                    let ja = joint(i, a, b);
                    let mut total = d * tree.stage_payoff(id, ja)[i];
                    let mut w = d * d;
                    let mut cur = shape.child(id, ja);
                    while !shape.is_leaf(cur) {
                        let step = joint(i, mode[i][cur], opp[cur].expect("decision node"));
                        total += w * tree.stage_payoff(cur, step)[i];
                        w *= d;
                        cur = shape.child(cur, step);
                    }
                    total + weights.terminal * tree.terminal_payoff(cur)[i]
                })
                .collect();
            let dist = logit(&evs, params.lambda);
            mode[i][id] = argmax_first(&dist);
            profile.set(i, id, dist);
            action_values[id][i] = evs;
        }
    }

    // expectation under both quantal distributions, split into the stage
    // sum and the expected terminal utility
    let mut s = vec![[0.0; 2]; n];
    let mut c = vec![[0.0; 2]; n];
    for (id, cell) in c.iter_mut().enumerate() {
        if shape.is_leaf(id) {
            *cell = tree.terminal_payoff(id);
        }
    }
    for id in shape.bottom_up() {
        let p = [profile.get(0, id).unwrap(), profile.get(1, id).unwrap()];
        let mut sn = [0.0; 2];
        let mut cn = [0.0; 2];
        for (ja, child) in shape.children(id) {
            let q = p[0][ja[0]] * p[1][ja[1]];
            let u = tree.stage_payoff(id, ja);
            for i in 0..2 {
                sn[i] += q * (d * u[i] + d * s[child][i]);
                cn[i] += q * c[child][i];
            }
        }
        s[id] = sn;
        c[id] = cn;
    }
    let values = (0..n)
        .map(|id| [0, 1].map(|i| s[id][i] + weights.terminal * c[id][i]))
        .collect();

    SolverResult {
        concept: Concept::Qlk,
        profile: StrategyProfile::Quantal(profile),
        values,
        diagnostics: SolverDiagnostics {
            equilibria: vec![0; n],
            fallback_nodes: Vec::new(),
            action_values,
        },
    }
}
