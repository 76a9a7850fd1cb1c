use crate::game::{
    GameParams, JointAction, NodeId, PayoffTree, PureProfile, StrategyProfile, TIE_TOLERANCE,
};
use crate::utility::Weights;

use super::{Concept, SolverDiagnostics, SolverResult};

/// Value split of a subgame: discounted stage sum `s` (weights restarting at
/// δ) and the terminal utility `c` of the leaf it reaches.
#[derive(Debug, Clone, Copy, Default)]
struct Split {
    s: [f64; 2],
    c: [f64; 2],
}

/// Best value `agent` can reach from `node` against the opponent's fixed
/// choices in `profile`, with stage weight `w` at `node`.
fn best_continuation(
    tree: &PayoffTree,
    profile: &PureProfile,
    node: NodeId,
    agent: usize,
    w: f64,
    weights: Weights,
) -> f64 {
    let shape = &tree.shape;
    if shape.is_leaf(node) {
        return weights.terminal * tree.terminal_payoff(node)[agent];
    }
    let other = 1 - agent;
    let b = profile
        .get(other, node)
        .expect("subtree solved before its parent");
    (0..shape.node(node).actions[agent])
        .map(|a| {
            let ja = joint(agent, a, b);
            w * tree.stage_payoff(node, ja)[agent]
                + best_continuation(
                    tree,
                    profile,
                    shape.child(node, ja),
                    agent,
                    w * weights.delta,
                    weights,
                )
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn joint(agent: usize, own: usize, other: usize) -> JointAction {
    if agent == 0 {
        [own, other]
    } else {
        [other, own]
    }
}

/// Backward induction over pure joint actions. At each subgame a joint
/// action qualifies when neither agent can gain more than ε by any
/// unilateral deviation in that subgame, including deviations further down
/// the tree. Among qualifying actions the highest welfare wins, ties going
/// to the lexicographically first `(a1, a2)`. Subgames without a pure
/// ε-equilibrium take the joint action of least maximal regret and are
/// recorded in the diagnostics.
pub fn solve_spene(tree: &PayoffTree, params: &GameParams) -> SolverResult {
    let shape = &tree.shape;
    let weights = Weights::from(params);
    let eps = params.epsilon;
    let n = shape.len();
    let mut profile = PureProfile::empty(n);
    let mut split = vec![Split::default(); n];
    let mut diag = SolverDiagnostics {
        equilibria: vec![0; n],
        fallback_nodes: Vec::new(),
        action_values: Vec::new(),
    };
    for (id, cell) in split.iter_mut().enumerate() {
        if shape.is_leaf(id) {
            cell.c = tree.terminal_payoff(id);
        }
    }

    for id in shape.bottom_up() {
        let counts = shape.node(id).actions;
        let d = weights.delta;
        // value of each joint action with the solved continuation
        let mut value = vec![[0.0; 2]; counts[0] * counts[1]];
        // best deviation value for agent i given the opponent's action b
        let mut dev: [Vec<f64>; 2] = [
            vec![f64::NEG_INFINITY; counts[1]],
            vec![f64::NEG_INFINITY; counts[0]],
        ];
        for (ja, child) in shape.children(id) {
            let u = tree.stage_payoff(id, ja);
            let k = shape.joint_index(id, ja);
            for i in 0..2 {
                value[k][i] =
                    d * u[i] + d * split[child].s[i] + weights.terminal * split[child].c[i];
                let dv = d * u[i] + best_continuation(tree, &profile, child, i, d * d, weights);
                let b = ja[1 - i];
                if dv > dev[i][b] {
                    dev[i][b] = dv;
                }
            }
        }

        let mut best: Option<(JointAction, f64)> = None;
        let mut count = 0;
        let mut least_regret: Option<(JointAction, f64)> = None;
        for (ja, _) in shape.children(id) {
            let v = value[shape.joint_index(id, ja)];
            let regret = [0, 1].map(|i| dev[i][ja[1 - i]] - v[i]);
            let worst = regret[0].max(regret[1]);
            if least_regret.is_none_or(|(_, r)| worst < r - TIE_TOLERANCE) {
                least_regret = Some((ja, worst));
            }
            if worst <= eps {
                count += 1;
                let welfare = v[0] + v[1];
                if best.is_none_or(|(_, w)| welfare > w + TIE_TOLERANCE) {
                    best = Some((ja, welfare));
                }
            }
        }
        diag.equilibria[id] = count;
        let chosen = match best {
            Some((ja, _)) => ja,
            None => {
                diag.fallback_nodes.push(id);
                least_regret.expect("decision nodes have actions").0
            }
        };
        profile.set(id, chosen);
        let child = shape.child(id, chosen);
        let u = tree.stage_payoff(id, chosen);
        split[id] = Split {
            s: [0, 1].map(|i| d * u[i] + d * split[child].s[i]),
            c: split[child].c,
        };
    }
    diag.fallback_nodes.sort_unstable();

    let values = split
        .iter()
        .map(|sp| [0, 1].map(|i| sp.s[i] + weights.terminal * sp.c[i]))
        .collect();
    SolverResult {
        concept: Concept::Spene,
        profile: StrategyProfile::Pure(profile),
        values,
        diagnostics: diag,
    }
}
