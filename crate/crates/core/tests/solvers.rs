mod common;

use common::{
    best_case, decision_nodes, own_paths, pure_get, random_tree, sequential_best_response,
    value_following,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rowgame::game::TIE_TOLERANCE;
use rowgame::solvers::logit;
use rowgame::{
    node_value, solve_level0_maxmax, solve_qlk_level1, solve_spene, verify_epsilon_equilibrium,
    GameParams, PayoffTree, PureProfile, StrategyProfile,
};

fn one_stage() -> GameParams {
    GameParams {
        delta_t_h: 1.3,
        ..GameParams::default()
    }
}

fn params_for(depth: usize) -> GameParams {
    GameParams {
        delta_t_h: 1.3 * depth as f64,
        ..GameParams::default()
    }
}

/// Single-stage game with the given payoff matrix `m[a1][a2]`.
fn matrix_game(m: Vec<Vec<[f64; 2]>>) -> PayoffTree {
    let dims = [m.len(), m[0].len()];
    PayoffTree::from_fn(1, |_, _| dims, |_, [a, b]| m[a][b], |_| [0.0, 0.0])
}

/// Brute-force pure ε-equilibria of a single-stage game.
fn stage_equilibria(tree: &PayoffTree, params: &GameParams) -> Vec<[usize; 2]> {
    let [n1, n2] = tree.shape.node(0).actions;
    let v = |ja: [usize; 2], i: usize| params.delta * tree.stage_payoff(0, ja)[i];
    let mut out = Vec::new();
    for a in 0..n1 {
        for b in 0..n2 {
            let ok1 = (0..n1).all(|d| v([d, b], 0) - v([a, b], 0) <= params.epsilon);
            let ok2 = (0..n2).all(|d| v([a, d], 1) - v([a, b], 1) <= params.epsilon);
            if ok1 && ok2 {
                out.push([a, b]);
            }
        }
    }
    out
}

#[test]
fn crossing_game_equilibria() {
    // action 0 = wait, 1 = proceed
    let tree = matrix_game(vec![
        vec![[0.0, 0.0], [0.2, 1.0]],
        vec![[1.0, 0.2], [-1.0, -1.0]],
    ]);
    let params = one_stage();
    let eqs = stage_equilibria(&tree, &params);
    assert_eq!(eqs, vec![[0, 1], [1, 0]]);
    let r = solve_spene(&tree, &params);
    assert_eq!(r.diagnostics.equilibria[0], 2);
    assert!(!r.diagnostics.fallback_used());
    // equal welfare: the lexicographically first joint action wins
    assert_eq!(r.profile.resolve().joint(0).unwrap(), [0, 1]);
}

#[test]
fn dominant_pair_is_unique_equilibrium() {
    let tree = matrix_game(vec![
        vec![[0.9, 0.9], [0.9, 0.1]],
        vec![[0.1, 0.9], [0.0, 0.0]],
    ]);
    let r = solve_spene(&tree, &one_stage());
    assert_eq!(r.diagnostics.equilibria[0], 1);
    assert_eq!(r.profile.resolve().joint(0).unwrap(), [0, 0]);
}

#[test]
fn large_epsilon_picks_welfare_maximum() {
    let tree = matrix_game(vec![
        vec![[0.1, 0.0], [0.3, 0.3]],
        vec![[1.0, -0.9], [0.5, 0.45]],
    ]);
    let params = GameParams {
        epsilon: 10.0,
        ..one_stage()
    };
    let r = solve_spene(&tree, &params);
    assert_eq!(r.diagnostics.equilibria[0], 4);
    assert_eq!(r.profile.resolve().joint(0).unwrap(), [1, 1]);
}

#[test]
fn maxmax_is_optimistic() {
    // agent 1: A -> {0.2, 0.9}, B -> {0.5, 0.6}
    let tree = matrix_game(vec![
        vec![[0.2, 0.0], [0.9, 0.0]],
        vec![[0.5, 0.0], [0.6, 0.0]],
    ]);
    assert_eq!(solve_level0_maxmax(&tree, &one_stage(), 0)[0], Some(0));
    let uniform = matrix_game(vec![vec![[0.3, 0.3]; 3]; 3]);
    assert_eq!(solve_level0_maxmax(&uniform, &one_stage(), 0)[0], Some(0));
    assert_eq!(solve_level0_maxmax(&uniform, &one_stage(), 1)[0], Some(0));
}

#[test]
fn logit_examples() {
    let p = logit(&[1.0, 0.0], 1.0);
    let e = std::f64::consts::E;
    assert!((p[0] - e / (1.0 + e)).abs() < 1e-12);
    assert!((p[1] - 1.0 / (1.0 + e)).abs() < 1e-12);
    assert_eq!(logit(&[0.4, 0.4, 0.4], 1.0), vec![1.0 / 3.0; 3]);
    assert!(logit(&[0.5, 0.3], 100.0)[0] > 0.999);
    // large values do not overflow
    let big = logit(&[1000.0, 999.0], 1.0);
    assert!((big[0] + big[1] - 1.0).abs() < 1e-12 && big[0].is_finite());
}

#[test]
fn verify_flags_profitable_deviation() {
    let tree = matrix_game(vec![
        vec![[0.0, 0.0], [0.0, 0.0]],
        vec![[1.0, 0.0], [1.0, 0.0]],
    ]);
    let params = GameParams {
        delta: 1.0,
        ..one_stage()
    };
    let mut p = PureProfile::empty(tree.shape.len());
    p.set(0, [0, 0]);
    let report =
        verify_epsilon_equilibrium(&tree, &StrategyProfile::Pure(p.clone()), &params, 0.1).unwrap();
    assert!(!report.holds);
    let worst = report.worst.unwrap();
    assert_eq!(
        (worst.node, worst.agent, worst.actions.clone()),
        (0, 0, vec![1])
    );
    assert!((worst.gain() - 1.0).abs() < 1e-12);
    // a vacuous ε accepts anything
    assert!(
        verify_epsilon_equilibrium(&tree, &StrategyProfile::Pure(p), &params, 5.0)
            .unwrap()
            .holds
    );
}

#[test]
fn verify_names_deep_node() {
    // gain of 0.5 hidden at a stage-2 node
    let tree = PayoffTree::from_fn(
        2,
        |_, _| [2, 2],
        |id, [a, _]| {
            if id == 1 && a == 1 {
                [2.0, 0.0]
            } else {
                [0.0, 0.0]
            }
        },
        |_| [0.0, 0.0],
    );
    let params = params_for(2);
    let p = PureProfile::constant(&tree.shape, 0);
    let report =
        verify_epsilon_equilibrium(&tree, &StrategyProfile::Pure(p), &params, 0.1).unwrap();
    assert!(!report.holds);
    let worst = report.worst.unwrap();
    assert_eq!(worst.node, 1);
    assert!((worst.gain() - 1.0).abs() < 1e-12);
}

#[test]
fn missing_choice_is_an_error() {
    let tree = matrix_game(vec![vec![[0.0, 0.0]; 2]; 2]);
    let p = PureProfile::empty(tree.shape.len());
    assert!(
        verify_epsilon_equilibrium(&tree, &StrategyProfile::Pure(p), &one_stage(), 0.1).is_err()
    );
}

/// Worst unilateral gain over every subgame, from an independent path
/// enumeration.
fn max_gain(tree: &PayoffTree, p: &PureProfile, params: &GameParams) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for node in decision_nodes(tree) {
        for agent in 0..2 {
            let opp = |n| pure_get(p, 1 - agent, n);
            let on =
                node_value(tree, node, &StrategyProfile::Pure(p.clone()), agent, params).unwrap();
            let best = own_paths(tree, node, agent, &opp, params)
                .into_iter()
                .map(|(_, v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(best - on);
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spene_is_sound(seed in any::<u64>(), depth in 1usize..=3) {
        let tree = random_tree(seed, depth, 4);
        let params = params_for(depth);
        let r = solve_spene(&tree, &params);
        let p = r.profile.resolve();
        let report = verify_epsilon_equilibrium(&tree, &r.profile, &params, params.epsilon).unwrap();
        if r.diagnostics.fallback_used() {
            return Ok(());
        }
        prop_assert!(report.holds, "worst {:?}", report.worst);
        prop_assert!(max_gain(&tree, &p, &params) <= params.epsilon + 1e-9);
        // reported values match a fresh evaluation
        for node in decision_nodes(&tree) {
            for agent in 0..2 {
                let v = node_value(&tree, node, &r.profile, agent, &params).unwrap();
                prop_assert!((v - r.values[node][agent]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn qlk_distributions_are_valid(seed in any::<u64>(), depth in 1usize..=3) {
        let tree = random_tree(seed, depth, 4);
        let params = params_for(depth);
        let r = solve_qlk_level1(&tree, &params);
        for node in decision_nodes(&tree) {
            for agent in 0..2 {
                let n = tree.shape.node(node).actions[agent];
                let dist: Vec<f64> = (0..n).map(|a| r.profile.prob(agent, node, a).unwrap()).collect();
                prop_assert!(dist.iter().all(|&q| q >= 0.0));
                prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                let ev = &r.diagnostics.action_values[node][agent];
                for a in 0..n {
                    for b in 0..n {
                        if ev[a] > ev[b] {
                            prop_assert!(dist[a] > dist[b]);
                        }
                        if dist[a] > dist[b] {
                            prop_assert!(ev[a] > ev[b]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn level0_ignores_opponent_payoffs(seed in any::<u64>(), depth in 1usize..=3, noise_seed in any::<u64>()) {
        let tree = random_tree(seed, depth, 4);
        let params = params_for(depth);
        for agent in 0..2 {
            let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
            let noisy = tree.map_agent(1 - agent, |u| u + rng.random_range(-1.0..1.0));
            prop_assert_eq!(solve_level0_maxmax(&tree, &params, agent), solve_level0_maxmax(&noisy, &params, agent));
        }
    }

    #[test]
    fn level0_matches_best_case_enumeration(seed in any::<u64>(), depth in 1usize..=3) {
        let tree = random_tree(seed, depth, 3);
        let params = params_for(depth);
        for agent in 0..2 {
            let l0 = solve_level0_maxmax(&tree, &params, agent);
            for node in decision_nodes(&tree) {
                let n = tree.shape.node(node).actions[agent];
                let vals: Vec<f64> = (0..n).map(|a| best_case(&tree, node, agent, a, &params)).collect();
                let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(best - vals[l0[node].unwrap()] <= TIE_TOLERANCE);
            }
        }
    }

    #[test]
    fn sharp_qlk_mode_is_best_response_to_level0(seed in any::<u64>(), depth in 1usize..=3) {
        let tree = random_tree(seed, depth, 4);
        let params = GameParams { lambda: 100.0, ..params_for(depth) };
        let r = solve_qlk_level1(&tree, &params);
        let mode = r.profile.resolve();
        for agent in 0..2 {
            let l0 = solve_level0_maxmax(&tree, &params, 1 - agent);
            let opp = |n: usize| l0[n].unwrap();
            let policy = sequential_best_response(&tree, agent, &opp, &params);
            for node in decision_nodes(&tree) {
                // compare values, not indices, so exact ties cannot fail the test
                let chosen = pure_get(&mode, agent, node);
                let value_of = |first: usize| value_following(&tree, node, agent, first, &policy, &opp, &params);
                prop_assert!(value_of(policy[node].unwrap()) - value_of(chosen) <= TIE_TOLERANCE, "node {} agent {}", node, agent);
            }
            // one stage from the end, full enumeration is the same thing
            for node in decision_nodes(&tree).filter(|&n| tree.shape.node(n).stage + 1 == depth) {
                let best = own_paths(&tree, node, agent, &opp, &params)
                    .into_iter()
                    .max_by(|x, y| x.1.total_cmp(&y.1))
                    .unwrap();
                let chosen = pure_get(&mode, agent, node);
                let got = own_paths(&tree, node, agent, &opp, &params).into_iter().find(|(s, _)| s[0] == chosen).unwrap();
                prop_assert!(best.1 - got.1 <= TIE_TOLERANCE);
            }
        }
    }

    #[test]
    fn adding_a_constant_keeps_best_responses(seed in any::<u64>(), c in -3.0f64..3.0) {
        // one agent's utilities shifted: that agent's level-1 mode is unchanged
        let tree = random_tree(seed, 2, 3);
        let params = params_for(2);
        let shifted = tree.map_agent(0, |u| u + c);
        let a = solve_qlk_level1(&tree, &params).profile.resolve();
        let b = solve_qlk_level1(&shifted, &params).profile.resolve();
        for node in decision_nodes(&tree) {
            prop_assert_eq!(a.get(0, node), b.get(0, node));
        }
    }

    #[test]
    fn solvers_are_deterministic(seed in any::<u64>()) {
        let tree = random_tree(seed, 3, 3);
        let params = params_for(3);
        prop_assert_eq!(solve_spene(&tree, &params), solve_spene(&tree, &params));
        prop_assert_eq!(solve_qlk_level1(&tree, &params), solve_qlk_level1(&tree, &params));
    }
}
