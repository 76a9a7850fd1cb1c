#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rowgame::{Category, GameParams, Maneuver, NodeId, PayoffTree, PureProfile};

/// Every sequence over {w, p, pa} of length 1..=max_len, shortest first.
pub fn all_sequences(max_len: usize) -> Vec<Vec<Maneuver>> {
    const ALPHABET: [Maneuver; 3] = [
        Maneuver::Wait,
        Maneuver::Proceed,
        Maneuver::AggressiveProceed,
    ];
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Maneuver>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| {
                ALPHABET.iter().map(move |&m| {
                    let mut t = s.clone();
                    t.push(m);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Decision-table oracle for the taxonomy, written against the table rather
/// than the library's rule: split off the leading run of one wait/proceed
/// class, then look the triple up.
pub fn taxonomy_oracle(seq: &[Maneuver], holder: bool) -> Category {
    use Category::*;
    let waits = |m: Maneuver| m == Maneuver::Wait;
    let head_is_wait = waits(seq[0]);
    let head_len = seq
        .iter()
        .take_while(|&&m| waits(m) == head_is_wait)
        .count();
    let aggressive = seq[..head_len].contains(&Maneuver::AggressiveProceed);
    let responsive = head_len < seq.len();
    let table: [((bool, bool, bool, bool), Category); 12] = [
        // (holder, head wait, aggressive head, responsive)
        ((true, true, false, false), UR),
        ((true, true, false, true), RR),
        ((true, false, false, false), UA),
        ((true, false, false, true), RA),
        ((true, false, true, false), UAA),
        ((true, false, true, true), RAA),
        ((false, true, false, false), UA),
        ((false, true, false, true), RA),
        ((false, false, false, false), UV),
        ((false, false, false, true), RV),
        ((false, false, true, false), UAV),
        ((false, false, true, true), RAV),
    ];
    let key = (holder, head_is_wait, aggressive, responsive);
    table
        .iter()
        .find(|(k, _)| *k == key)
        .expect("table is complete")
        .1
}

/// Compact one-letter rendering used by the regex checks: w, p, a (= pa).
pub fn letters(seq: &[Maneuver]) -> String {
    seq.iter()
        .map(|m| match m {
            Maneuver::Wait => 'w',
            Maneuver::Proceed => 'p',
            Maneuver::AggressiveProceed => 'a',
        })
        .collect()
}

/// A random game of the given depth: 2..=max_actions actions per agent per
/// node, stage and terminal utilities uniform in [-1, 1].
pub fn random_tree(seed: u64, depth: usize, max_actions: usize) -> PayoffTree {
    let mut shape_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stage_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut term_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    PayoffTree::from_fn(
        depth,
        |_, _| {
            [
                shape_rng.random_range(2..=max_actions),
                shape_rng.random_range(2..=max_actions),
            ]
        },
        |_, _| {
            [
                stage_rng.random_range(-1.0..=1.0),
                stage_rng.random_range(-1.0..=1.0),
            ]
        },
        |_| {
            [
                term_rng.random_range(-1.0..=1.0),
                term_rng.random_range(-1.0..=1.0),
            ]
        },
    )
}

/// All own-action sequences of `agent` from `node` with the opponent fixed
/// by `opp(node)`, each with its discounted value (weights relative to
/// `node`).
pub fn own_paths(
    tree: &PayoffTree,
    node: NodeId,
    agent: usize,
    opp: &dyn Fn(NodeId) -> usize,
    params: &GameParams,
) -> Vec<(Vec<usize>, f64)> {
    #[allow(clippy::too_many_arguments)]
    fn go(
        tree: &PayoffTree,
        node: NodeId,
        agent: usize,
        opp: &dyn Fn(NodeId) -> usize,
        params: &GameParams,
        w: f64,
        prefix: &mut Vec<usize>,
        acc: f64,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        let shape = &tree.shape;
        if shape.is_leaf(node) {
            out.push((
                prefix.clone(),
                acc + params.terminal_weight() * tree.terminal_payoff(node)[agent],
            ));
            return;
        }
        let b = opp(node);
        for a in 0..shape.node(node).actions[agent] {
            let ja = if agent == 0 { [a, b] } else { [b, a] };
            prefix.push(a);
            let u = tree.stage_payoff(node, ja)[agent];
            go(
                tree,
                shape.child(node, ja),
                agent,
                opp,
                params,
                w * params.delta,
                prefix,
                acc + w * u,
                out,
            );
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(
        tree,
        node,
        agent,
        opp,
        params,
        params.delta,
        &mut Vec::new(),
        0.0,
        &mut out,
    );
    out
}

/// Best value over every joint continuation from `node` whose first own
/// action is `first`, for `agent`.
pub fn best_case(
    tree: &PayoffTree,
    node: NodeId,
    agent: usize,
    first: usize,
    params: &GameParams,
) -> f64 {
    fn go(tree: &PayoffTree, node: NodeId, agent: usize, params: &GameParams, w: f64) -> f64 {
        let shape = &tree.shape;
        if shape.is_leaf(node) {
            return params.terminal_weight() * tree.terminal_payoff(node)[agent];
        }
        shape
            .children(node)
            .map(|(ja, c)| {
                w * tree.stage_payoff(node, ja)[agent]
                    + go(tree, c, agent, params, w * params.delta)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
    let shape = &tree.shape;
    shape
        .children(node)
        .filter(|(ja, _)| ja[agent] == first)
        .map(|(ja, c)| {
            params.delta * tree.stage_payoff(node, ja)[agent]
                + go(tree, c, agent, params, params.delta * params.delta)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Decision nodes of a tree.
pub fn decision_nodes(tree: &PayoffTree) -> impl Iterator<Item = NodeId> + '_ {
    (0..tree.shape.len()).filter(|&n| !tree.shape.is_leaf(n))
}

pub fn pure_get(p: &PureProfile, agent: usize, node: NodeId) -> usize {
    p.get(agent, node).expect("profile covers decision nodes")
}

/// Value from `node` when `agent` opens with `first` and then follows
/// `policy`, the opponent playing `opp`. Weights restart at `node`.
pub fn value_following(
    tree: &PayoffTree,
    node: usize,
    agent: usize,
    first: usize,
    policy: &[Option<usize>],
    opp: &dyn Fn(usize) -> usize,
    params: &GameParams,
) -> f64 {
    let mut cur = node;
    let mut own = first;
    let mut w = params.delta;
    let mut total = 0.0;
    while !tree.shape.is_leaf(cur) {
        let ja = if agent == 0 {
            [own, opp(cur)]
        } else {
            [opp(cur), own]
        };
        total += w * tree.stage_payoff(cur, ja)[agent];
        w *= params.delta;
        cur = tree.shape.child(cur, ja);
        own = policy[cur].unwrap_or(0);
    }
    total + params.terminal_weight() * tree.terminal_payoff(cur)[agent]
}

/// Exact sequential best response to a fixed opponent: deepest nodes first,
/// each node maximizing its own subgame value given the choices below.
pub fn sequential_best_response(
    tree: &PayoffTree,
    agent: usize,
    opp: &dyn Fn(usize) -> usize,
    params: &GameParams,
) -> Vec<Option<usize>> {
    let mut policy = vec![None; tree.shape.len()];
    // breadth-first ids: children always come after their parent
    for node in (0..tree.shape.len())
        .rev()
        .filter(|&n| !tree.shape.is_leaf(n))
    {
        let n = tree.shape.node(node).actions[agent];
        let mut best = (f64::NEG_INFINITY, 0);
        for a in 0..n {
            let v = value_following(tree, node, agent, a, &policy, opp, params);
            if v > best.0 {
                best = (v, a);
            }
        }
        policy[node] = Some(best.1);
    }
    policy
}
