//! Safety/progress utilities, the type-dependent lexicographic combination,
//! the right-of-way penalty, and discounted node values.
//!
//! The value of a node `n` for agent `i` under profile `σ` is
//!
//! ```text
//! V_i(n) = Σ_{k=1..K−stage(n)} δ^k · u_i(stage k after n) + N · u_{i,C}
//! ```
//!
//! with stage weights restarting at `δ` in every subgame while the terminal
//! weight `N` stays fixed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameParams, GameTree, NodeId, PayoffTree, StrategyProfile, TreeShape};
use crate::scenario::{GameSetup, Scenario};
use crate::trajectory::{min_gap, Maneuver, Trajectory, TrajectoryConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SigmoidParams {
    /// Gap (m) at which safety utility is zero.
    pub midpoint: f64,
    /// Logistic steepness, 1/m.
    pub steepness: f64,
}

impl Default for SigmoidParams {
    fn default() -> Self {
        SigmoidParams {
            midpoint: 2.0,
            steepness: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressParams {
    /// Arc length (m) that earns full progress utility.
    pub full_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UtilityParams {
    pub safety: SigmoidParams,
}

impl UtilityParams {
    pub fn validate(&self) -> Result<()> {
        if self.safety.steepness > 0.0 && self.safety.midpoint >= 0.0 {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "invalid sigmoid parameters {:?}",
                self.safety
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityComponents {
    pub u_s: f64,
    pub u_p: f64,
}

/// `2 / (1 + e^{−a(gap − d0)}) − 1`, in (−1, 1).
pub fn safety_utility(gap: f64, sp: &SigmoidParams) -> f64 {
    2.0 / (1.0 + (-sp.steepness * (gap - sp.midpoint)).exp()) - 1.0
}

pub fn progress_utility(arc_length: f64, pp: &ProgressParams) -> f64 {
    (arc_length / pp.full_scale).clamp(0.0, 1.0)
}

pub fn apply_row_penalty(u_s: f64, violated: bool, tau: f64) -> f64 {
    if violated {
        (u_s - tau).max(-1.0)
    } else {
        u_s
    }
}

/// The safety component when it is at or below `−γ`, the progress component otherwise.
pub fn combine_lexicographic(c: UtilityComponents, gamma: f64) -> f64 {
    if c.u_s <= -gamma {
        c.u_s
    } else {
        c.u_p
    }
}

/// Everything needed to turn trajectories into utilities for one game.
#[derive(Debug, Clone, Copy)]
pub struct UtilityContext<'a> {
    pub scenario: &'a Scenario,
    pub gammas: [f64; 2],
    pub params: &'a GameParams,
    pub utility: &'a UtilityParams,
    pub trajectory: &'a TrajectoryConfig,
}

impl<'a> UtilityContext<'a> {
    pub fn new(
        scenario: &'a Scenario,
        setup: &GameSetup,
        params: &'a GameParams,
        utility: &'a UtilityParams,
        trajectory: &'a TrajectoryConfig,
    ) -> Self {
        UtilityContext {
            scenario,
            gammas: setup.gammas,
            params,
            utility,
            trajectory,
        }
    }

    fn v_max(&self, agent: usize) -> f64 {
        match self.scenario.agents[agent].kind {
            crate::scenario::AgentKind::Vehicle => self.trajectory.vehicle_limits.v_max,
            crate::scenario::AgentKind::Pedestrian => self.trajectory.pedestrian_limits.v_max,
        }
    }

    pub fn stage_progress(&self, agent: usize) -> ProgressParams {
        ProgressParams {
            full_scale: self.v_max(agent) * self.params.delta_t_p,
        }
    }

    pub fn terminal_progress(&self, agent: usize) -> ProgressParams {
        ProgressParams {
            full_scale: self.v_max(agent) * self.params.delta_t_h,
        }
    }

    /// Proceeding without right of way while neither agent has cleared the zone.
    pub fn violates_row(&self, agent: usize, proceeding: bool, arcs: [f64; 2]) -> bool {
        let holder = self.scenario.holder();
        agent != holder
            && proceeding
            && !self.scenario.agents[holder].cleared(arcs[holder])
            && !self.scenario.agents[agent].cleared(arcs[agent])
    }

    fn combined(
        &self,
        agent: usize,
        gap: f64,
        violated: bool,
        progress: f64,
        pp: &ProgressParams,
    ) -> f64 {
        let u_s = apply_row_penalty(
            safety_utility(gap, &self.utility.safety),
            violated,
            self.params.tau,
        );
        let u_p = progress_utility(progress, pp);
        combine_lexicographic(UtilityComponents { u_s, u_p }, self.gammas[agent])
    }

    /// Combined utilities of one stage for a trajectory pair starting at `arcs`.
    pub fn stage_utilities(&self, pair: [&Trajectory; 2], arcs: [f64; 2]) -> Result<[f64; 2]> {
        let gap = min_gap(pair[0], pair[1])?;
        Ok([0, 1].map(|i| {
            let violated = self.violates_row(i, !pair[i].maneuver.is_wait(), arcs);
            self.combined(
                i,
                gap,
                violated,
                pair[i].path_arc_progress,
                &self.stage_progress(i),
            )
        }))
    }

    /// Both agents keep their last trajectory's terminal velocity for another
    /// `Δt_h` seconds; utilities are computed on that extrapolation.
    pub fn terminal_utilities(&self, last: [&Trajectory; 2]) -> Result<[f64; 2]> {
        let cont = [0, 1].map(|i| {
            last[i].continuation(
                &self.scenario.agents[i].path,
                self.params.delta_t_h,
                self.trajectory.dt,
            )
        });
        let [c1, c2] = cont;
        self.terminal_from_continuations([&c1?, &c2?], last)
    }

    fn terminal_from_continuations(
        &self,
        cont: [&Trajectory; 2],
        last: [&Trajectory; 2],
    ) -> Result<[f64; 2]> {
        let gap = min_gap(cont[0], cont[1])?;
        let arcs = [last[0].last().arc, last[1].last().arc];
        Ok([0, 1].map(|i| {
            let moving = last[i].maneuver != Maneuver::Wait
                && last[i].terminal_speed() >= self.trajectory.stop_speed;
            let violated = self.violates_row(i, moving, arcs);
            self.combined(
                i,
                gap,
                violated,
                cont[i].path_arc_progress,
                &self.terminal_progress(i),
            )
        }))
    }
}

/// Stage and terminal utilities for every node of a built game tree.
pub fn evaluate_payoffs(tree: &GameTree, ctx: &UtilityContext<'_>) -> Result<PayoffTree> {
    let shape = &tree.shape;
    let mut stage = vec![Vec::new(); shape.len()];
    let mut terminal = vec![[0.0, 0.0]; shape.len()];
    for (id, slot) in stage.iter_mut().enumerate() {
        if shape.is_leaf(id) {
            continue;
        }
        let node = tree.node(id);
        let mut row = Vec::with_capacity(shape.node(id).joint_count());
        for (ja, _) in shape.children(id) {
            row.push(
                ctx.stage_utilities([&node.actions[0][ja[0]], &node.actions[1][ja[1]]], node.arc)?,
            );
        }
        *slot = row;
        if shape.node(id).stage + 1 == shape.depth() {
            // all children are leaves: extrapolate each action once
            let conts: Vec<Vec<Trajectory>> = (0..2)
                .map(|i| {
                    node.actions[i]
                        .iter()
                        .map(|t| {
                            t.continuation(
                                &ctx.scenario.agents[i].path,
                                ctx.params.delta_t_h,
                                ctx.trajectory.dt,
                            )
                        })
                        .collect::<Result<_>>()
                })
                .collect::<Result<_>>()?;
            for (ja, child) in shape.children(id) {
                terminal[child] = ctx.terminal_from_continuations(
                    [&conts[0][ja[0]], &conts[1][ja[1]]],
                    [&node.actions[0][ja[0]], &node.actions[1][ja[1]]],
                )?;
            }
        }
    }
    PayoffTree::new(shape.clone(), stage, terminal)
}

/// Discounted value of `node` for `agent` under `profile`; quantal profiles
/// are evaluated in expectation over both agents' mixing.
pub fn node_value(
    payoffs: &PayoffTree,
    node: NodeId,
    profile: &StrategyProfile,
    agent: usize,
    params: &GameParams,
) -> Result<f64> {
    let weights = Weights::from(params);
    match profile {
        StrategyProfile::Pure(p) => {
            let mut cur = node;
            let mut w = weights.delta;
            let mut total = 0.0;
            while !payoffs.shape.is_leaf(cur) {
                let ja = p.joint(cur)?;
                total += w * payoffs.stage_payoff(cur, ja)[agent];
                w *= weights.delta;
                cur = payoffs.shape.child(cur, ja);
            }
            Ok(total + weights.terminal * payoffs.terminal_payoff(cur)[agent])
        }
        StrategyProfile::Quantal(_) => {
            expected(payoffs, node, profile, agent, weights, weights.delta)
        }
    }
}

fn expected(
    payoffs: &PayoffTree,
    node: NodeId,
    profile: &StrategyProfile,
    agent: usize,
    weights: Weights,
    w: f64,
) -> Result<f64> {
    let shape: &TreeShape = &payoffs.shape;
    if shape.is_leaf(node) {
        return Ok(weights.terminal * payoffs.terminal_payoff(node)[agent]);
    }
    let mut total = 0.0;
    for (ja, child) in shape.children(node) {
        let p1 = profile
            .prob(0, node, ja[0])
            .ok_or(Error::UndefinedChoice { node, agent: 0 })?;
        let p2 = profile
            .prob(1, node, ja[1])
            .ok_or(Error::UndefinedChoice { node, agent: 1 })?;
        let p = p1 * p2;
        if p == 0.0 {
            continue;
        }
        let cont = expected(payoffs, child, profile, agent, weights, w * weights.delta)?;
        total += p * (w * payoffs.stage_payoff(node, ja)[agent] + cont);
    }
    Ok(total)
}

/// Discount and terminal weight of the value formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub delta: f64,
    pub terminal: f64,
}

impl From<&GameParams> for Weights {
    fn from(p: &GameParams) -> Self {
        Weights {
            delta: p.delta,
            terminal: p.terminal_weight(),
        }
    }
}

/// Terminal utility of one leaf for one agent.
pub fn terminal_utility(
    tree: &GameTree,
    leaf: NodeId,
    agent: usize,
    ctx: &UtilityContext<'_>,
) -> Result<f64> {
    let pair = tree
        .incoming(leaf)
        .ok_or_else(|| Error::Validation(format!("node {leaf} has no incoming trajectories")))?;
    Ok(ctx.terminal_utilities(pair)?[agent])
}
