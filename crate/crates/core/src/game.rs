//! The dynamic game: a fixed-depth tree of simultaneous-move stage games.
//!
//! Nodes are stored breadth-first. The children of a decision node are
//! contiguous and indexed row-major by the joint action `[a1, a2]`, so the
//! same [`NodeId`] addresses a node in the [`GameTree`] (trajectories) and in
//! the [`PayoffTree`] (utilities) built from it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{AgentKind, GameSetup, Scenario};
use crate::trajectory::{self, ActionSet, AgentState, ManeuverClass, Trajectory, TrajectoryConfig};

pub type NodeId = usize;
/// `[agent-1 action index, agent-2 action index]`.
pub type JointAction = [usize; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameParams {
    /// Planning period, seconds.
    pub delta_t_p: f64,
    /// Horizon, seconds.
    pub delta_t_h: f64,
    /// Discount factor in (0, 1].
    pub delta: f64,
    /// Safety penalty for proceeding without right of way.
    pub tau: f64,
    pub epsilon: f64,
    /// Logit precision for quantal play.
    pub lambda: f64,
    /// Weight on the terminal continuation utility; `δ^(K+1)` when unset.
    pub terminal_norm: Option<f64>,
}

impl Default for GameParams {
    fn default() -> Self {
        GameParams {
            delta_t_p: 1.3,
            delta_t_h: 4.0,
            delta: 0.5,
            tau: 0.25,
            epsilon: 0.1,
            lambda: 1.0,
            terminal_norm: None,
        }
    }
}

impl GameParams {
    /// Number of decision stages `K = ⌊Δt_h / Δt_p⌋`.
    pub fn stages(&self) -> usize {
        (self.delta_t_h / self.delta_t_p + 1e-9).floor() as usize
    }

    pub fn terminal_weight(&self) -> f64 {
        self.terminal_norm
            .unwrap_or_else(|| self.delta.powi(self.stages() as i32 + 1))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.delta_t_p > 0.0
            && self.delta_t_h.is_finite()
            && self.stages() >= 1
            && self.delta > 0.0
            && self.delta <= 1.0
            && self.tau >= 0.0
            && self.epsilon >= 0.0
            && self.lambda > 0.0
            && self.terminal_weight() > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "invalid game parameters: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeNode {
    pub stage: usize,
    pub parent: Option<(NodeId, JointAction)>,
    /// Action counts per agent; `[0, 0]` at leaves.
    pub actions: [usize; 2],
    first_child: NodeId,
}

impl ShapeNode {
    pub fn is_leaf(&self) -> bool {
        self.actions == [0, 0]
    }

    pub fn joint_count(&self) -> usize {
        self.actions[0] * self.actions[1]
    }
}

/// Tree topology shared by [`GameTree`] and [`PayoffTree`].
#[derive(Debug, Clone, PartialEq)]
pub struct TreeShape {
    nodes: Vec<ShapeNode>,
    depth: usize,
}

impl TreeShape {
    /// Breadth-first construction. `actions_at(id, stage)` is called once per
    /// decision node, in id order, after its parent has been expanded.
    pub fn build<E>(
        depth: usize,
        mut actions_at: impl FnMut(NodeId, usize, &[ShapeNode]) -> Result<[usize; 2], E>,
    ) -> Result<TreeShape, E> {
        let mut nodes = vec![ShapeNode {
            stage: 0,
            parent: None,
            actions: [0, 0],
            first_child: 0,
        }];
        let mut i = 0;
        while i < nodes.len() {
            let stage = nodes[i].stage;
            if stage < depth {
                let counts = actions_at(i, stage, &nodes)?;
                let first = nodes.len();
                nodes[i].actions = counts;
                nodes[i].first_child = first;
                for a1 in 0..counts[0] {
                    for a2 in 0..counts[1] {
                        nodes.push(ShapeNode {
                            stage: stage + 1,
                            parent: Some((i, [a1, a2])),
                            actions: [0, 0],
                            first_child: 0,
                        });
                    }
                }
            }
            i += 1;
        }
        Ok(TreeShape { nodes, depth })
    }

    pub const ROOT: NodeId = 0;

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &ShapeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[ShapeNode] {
        &self.nodes
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].is_leaf()
    }

    /// Index of a joint action in the row-major joint action list.
    pub fn joint_index(&self, id: NodeId, ja: JointAction) -> usize {
        ja[0] * self.nodes[id].actions[1] + ja[1]
    }

    pub fn child(&self, id: NodeId, ja: JointAction) -> NodeId {
        let n = &self.nodes[id];
        debug_assert!(ja[0] < n.actions[0] && ja[1] < n.actions[1]);
        n.first_child + self.joint_index(id, ja)
    }

    /// `(joint action, child)` pairs in row-major order.
    pub fn children(&self, id: NodeId) -> impl Iterator<Item = (JointAction, NodeId)> + '_ {
        let n = &self.nodes[id];
        let [n1, n2] = n.actions;
        let first = n.first_child;
        (0..n1 * n2).map(move |k| ([k / n2, k % n2], first + k))
    }

    /// Decision node ids, deepest stage first.
    pub fn bottom_up(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len())
            .rev()
            .filter(|&i| !self.nodes[i].is_leaf())
    }

    /// Joint actions from the root to `id`.
    pub fn history(&self, id: NodeId) -> Vec<JointAction> {
        let mut h = Vec::with_capacity(self.nodes[id].stage);
        let mut cur = id;
        while let Some((p, ja)) = self.nodes[cur].parent {
            h.push(ja);
            cur = p;
        }
        h.reverse();
        h
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }
}

/// A node of the trajectory-level game.
#[derive(Debug, Clone)]
pub struct GameNode {
    pub id: NodeId,
    /// Stage start time, seconds.
    pub t: f64,
    pub joint_state: [AgentState; 2],
    /// Arc length of each agent along its path.
    pub arc: [f64; 2],
    /// Empty at leaves.
    pub actions: [Vec<Trajectory>; 2],
    pub unavailable: [Vec<ManeuverClass>; 2],
}

#[derive(Debug, Clone)]
pub struct GameTree {
    pub shape: TreeShape,
    pub nodes: Vec<GameNode>,
}

impl GameTree {
    pub fn root(&self) -> &GameNode {
        &self.nodes[TreeShape::ROOT]
    }

    pub fn node(&self, id: NodeId) -> &GameNode {
        &self.nodes[id]
    }

    /// The trajectory pair played on the edge into `id`.
    pub fn incoming(&self, id: NodeId) -> Option<[&Trajectory; 2]> {
        let (p, [a1, a2]) = self.shape.node(id).parent?;
        let parent = &self.nodes[p];
        Some([&parent.actions[0][a1], &parent.actions[1][a2]])
    }

    pub fn realized_path(&self, profile: &PureProfile) -> Result<Vec<(NodeId, JointAction)>> {
        realized_path(&self.shape, profile)
    }

    pub fn trajectories(&self) -> impl Iterator<Item = (usize, &Trajectory)> + '_ {
        self.nodes.iter().flat_map(|n| {
            n.actions
                .iter()
                .enumerate()
                .flat_map(|(i, a)| a.iter().map(move |t| (i, t)))
        })
    }
}

fn actions_for(
    scenario: &Scenario,
    agent: usize,
    state: &AgentState,
    t: f64,
    arc: f64,
    params: &GameParams,
    cfg: &TrajectoryConfig,
) -> Result<ActionSet> {
    let spec = &scenario.agents[agent];
    match spec.kind {
        AgentKind::Vehicle => trajectory::generate_vehicle_actions(
            state,
            t,
            arc,
            &spec.path,
            &cfg.vehicle_limits,
            params.delta_t_p,
            cfg,
        ),
        AgentKind::Pedestrian => {
            let opts = trajectory::pedestrian_speed_options(state, cfg);
            trajectory::generate_pedestrian_actions(
                state,
                t,
                arc,
                &spec.path,
                &opts,
                params.delta_t_p,
                cfg,
            )
        }
    }
}

/// Builds the full tree of depth `K` for one game setup.
pub fn build_tree(
    scenario: &Scenario,
    setup: &GameSetup,
    params: &GameParams,
    cfg: &TrajectoryConfig,
) -> Result<GameTree> {
    let depth = params.stages();
    let root = GameNode {
        id: 0,
        t: 0.0,
        joint_state: [
            setup.initial_state(scenario, 0),
            setup.initial_state(scenario, 1),
        ],
        arc: [scenario.agents[0].start_arc, scenario.agents[1].start_arc],
        actions: [Vec::new(), Vec::new()],
        unavailable: [Vec::new(), Vec::new()],
    };
    let mut nodes = vec![root];
    let shape = TreeShape::build(depth, |id, stage, shape_nodes| -> Result<[usize; 2]> {
        // materialize children of the parent lazily: the node itself must exist
        while nodes.len() <= id {
            let nid = nodes.len();
            let (p, [a1, a2]) = shape_nodes[nid].parent.expect("non-root has a parent");
            let par = &nodes[p];
            let (t1, t2) = (par.actions[0][a1].last(), par.actions[1][a2].last());
            nodes.push(GameNode {
                id: nid,
                t: shape_nodes[nid].stage as f64 * params.delta_t_p,
                joint_state: [t1.state, t2.state],
                arc: [t1.arc, t2.arc],
                actions: [Vec::new(), Vec::new()],
                unavailable: [Vec::new(), Vec::new()],
            });
        }
        let node = &nodes[id];
        let t = stage as f64 * params.delta_t_p;
        let mut sets = Vec::with_capacity(2);
        for agent in 0..2 {
            let set = actions_for(
                scenario,
                agent,
                &node.joint_state[agent],
                t,
                node.arc[agent],
                params,
                cfg,
            )?;
            if set.actions.is_empty() {
                return Err(Error::EmptyActions { node: id, agent });
            }
            sets.push(set);
        }
        let [s1, s2]: [ActionSet; 2] = sets.try_into().expect("two agents");
        let counts = [s1.actions.len(), s2.actions.len()];
        let node = &mut nodes[id];
        node.actions = [s1.actions, s2.actions];
        node.unavailable = [s1.unavailable, s2.unavailable];
        Ok(counts)
    })?;
    // leaves of the last stage
    while nodes.len() < shape.len() {
        let nid = nodes.len();
        let (p, [a1, a2]) = shape.node(nid).parent.expect("non-root has a parent");
        let par = &nodes[p];
        let (t1, t2) = (par.actions[0][a1].last(), par.actions[1][a2].last());
        nodes.push(GameNode {
            id: nid,
            t: shape.node(nid).stage as f64 * params.delta_t_p,
            joint_state: [t1.state, t2.state],
            arc: [t1.arc, t2.arc],
            actions: [Vec::new(), Vec::new()],
            unavailable: [Vec::new(), Vec::new()],
        });
    }
    Ok(GameTree { shape, nodes })
}

/// Stage and terminal utilities over a [`TreeShape`].
#[derive(Debug, Clone)]
pub struct PayoffTree {
    pub shape: TreeShape,
    /// Per decision node, per row-major joint action: `[u_1, u_2]`. Empty at leaves.
    stage: Vec<Vec<[f64; 2]>>,
    /// Per leaf: terminal continuation utility. `[0, 0]` at decision nodes.
    terminal: Vec<[f64; 2]>,
}

impl PayoffTree {
    pub fn new(
        shape: TreeShape,
        stage: Vec<Vec<[f64; 2]>>,
        terminal: Vec<[f64; 2]>,
    ) -> Result<Self> {
        if stage.len() != shape.len() || terminal.len() != shape.len() {
            return Err(Error::Validation(
                "payoff table size does not match tree".into(),
            ));
        }
        for (i, n) in shape.nodes().iter().enumerate() {
            if stage[i].len() != n.joint_count() {
                return Err(Error::Validation(format!(
                    "node {i}: wrong number of stage payoffs"
                )));
            }
        }
        Ok(PayoffTree {
            shape,
            stage,
            terminal,
        })
    }

    /// Builds a tree from closures; handy for synthetic games.
    pub fn from_fn(
        depth: usize,
        mut actions: impl FnMut(NodeId, usize) -> [usize; 2],
        mut stage: impl FnMut(NodeId, JointAction) -> [f64; 2],
        mut terminal: impl FnMut(NodeId) -> [f64; 2],
    ) -> Self {
        let shape =
            TreeShape::build::<std::convert::Infallible>(depth, |id, s, _| Ok(actions(id, s)))
                .expect("infallible");
        let stage_tab = (0..shape.len())
            .map(|id| shape.children(id).map(|(ja, _)| stage(id, ja)).collect())
            .collect();
        let term = (0..shape.len())
            .map(|id| {
                if shape.is_leaf(id) {
                    terminal(id)
                } else {
                    [0.0, 0.0]
                }
            })
            .collect();
        PayoffTree {
            shape,
            stage: stage_tab,
            terminal: term,
        }
    }

    pub fn stage_payoff(&self, id: NodeId, ja: JointAction) -> [f64; 2] {
        self.stage[id][self.shape.joint_index(id, ja)]
    }

    pub fn terminal_payoff(&self, leaf: NodeId) -> [f64; 2] {
        self.terminal[leaf]
    }

    /// Same tree with `f` applied to every utility of `agent`.
    pub fn map_agent(&self, agent: usize, mut f: impl FnMut(f64) -> f64) -> PayoffTree {
        let mut out = self.clone();
        for row in &mut out.stage {
            for u in row.iter_mut() {
                u[agent] = f(u[agent]);
            }
        }
        for (id, u) in out.terminal.iter_mut().enumerate() {
            if self.shape.is_leaf(id) {
                u[agent] = f(u[agent]);
            }
        }
        out
    }
}

/// Pure behavior strategies: one action index per agent per decision node.
#[derive(Debug, Clone, PartialEq)]
pub struct PureProfile {
    choices: [Vec<Option<usize>>; 2],
}

impl PureProfile {
    pub fn empty(nodes: usize) -> Self {
        PureProfile {
            choices: [vec![None; nodes], vec![None; nodes]],
        }
    }

    /// Same action index for every agent at every decision node.
    pub fn constant(shape: &TreeShape, action: usize) -> Self {
        let mut p = Self::empty(shape.len());
        for id in 0..shape.len() {
            if !shape.is_leaf(id) {
                p.set(id, [action, action]);
            }
        }
        p
    }

    pub fn get(&self, agent: usize, node: NodeId) -> Option<usize> {
        self.choices[agent].get(node).copied().flatten()
    }

    pub fn set(&mut self, node: NodeId, ja: JointAction) {
        self.choices[0][node] = Some(ja[0]);
        self.choices[1][node] = Some(ja[1]);
    }

    pub fn set_agent(&mut self, agent: usize, node: NodeId, action: usize) {
        self.choices[agent][node] = Some(action);
    }

    pub fn clear(&mut self, agent: usize, node: NodeId) {
        self.choices[agent][node] = None;
    }

    pub fn joint(&self, node: NodeId) -> Result<JointAction> {
        let a1 = self
            .get(0, node)
            .ok_or(Error::UndefinedChoice { node, agent: 0 })?;
        let a2 = self
            .get(1, node)
            .ok_or(Error::UndefinedChoice { node, agent: 1 })?;
        Ok([a1, a2])
    }
}

/// Per agent per decision node: a probability vector over that agent's actions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantalProfile {
    dists: [Vec<Option<Vec<f64>>>; 2],
}

impl QuantalProfile {
    pub fn empty(nodes: usize) -> Self {
        QuantalProfile {
            dists: [vec![None; nodes], vec![None; nodes]],
        }
    }

    pub fn get(&self, agent: usize, node: NodeId) -> Option<&[f64]> {
        self.dists[agent].get(node).and_then(|d| d.as_deref())
    }

    pub fn set(&mut self, agent: usize, node: NodeId, dist: Vec<f64>) {
        self.dists[agent][node] = Some(dist);
    }

    /// Most likely action at every node; ties go to the lowest index.
    pub fn mode(&self) -> PureProfile {
        let n = self.dists[0].len();
        let mut p = PureProfile::empty(n);
        for agent in 0..2 {
            for node in 0..n {
                if let Some(d) = self.get(agent, node) {
                    p.set_agent(agent, node, argmax_first(d));
                }
            }
        }
        p
    }

    /// Draws one action per agent per node.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PureProfile {
        let n = self.dists[0].len();
        let mut p = PureProfile::empty(n);
        for agent in 0..2 {
            for node in 0..n {
                if let Some(d) = self.get(agent, node) {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = d.len() - 1;
                    for (i, &q) in d.iter().enumerate() {
                        acc += q;
                        if u < acc {
                            pick = i;
                            break;
                        }
                    }
                    p.set_agent(agent, node, pick);
                }
            }
        }
        p
    }
}

/// Values closer than this count as tied. Saturated safety utilities differ
/// only by rounding noise, which must not pick an action.
pub const TIE_TOLERANCE: f64 = 1e-6;

/// Index of the first maximal entry, up to [`TIE_TOLERANCE`].
pub fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] + TIE_TOLERANCE {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrategyProfile {
    Pure(PureProfile),
    Quantal(QuantalProfile),
}

impl StrategyProfile {
    /// Pure profiles as-is; quantal profiles resolved to their mode.
    pub fn resolve(&self) -> PureProfile {
        match self {
            StrategyProfile::Pure(p) => p.clone(),
            StrategyProfile::Quantal(q) => q.mode(),
        }
    }

    /// Probability that `agent` plays `action` at `node`.
    pub fn prob(&self, agent: usize, node: NodeId, action: usize) -> Option<f64> {
        match self {
            StrategyProfile::Pure(p) => p
                .get(agent, node)
                .map(|a| if a == action { 1.0 } else { 0.0 }),
            StrategyProfile::Quantal(q) => q.get(agent, node).and_then(|d| d.get(action).copied()),
        }
    }
}

/// Root-to-leaf path induced by a pure profile: one `(node, joint action)`
/// per stage.
pub fn realized_path(
    shape: &TreeShape,
    profile: &PureProfile,
) -> Result<Vec<(NodeId, JointAction)>> {
    let mut out = Vec::with_capacity(shape.depth());
    let mut cur = TreeShape::ROOT;
    while !shape.is_leaf(cur) {
        let ja = profile.joint(cur)?;
        out.push((cur, ja));
        cur = shape.child(cur, ja);
    }
    Ok(out)
}
