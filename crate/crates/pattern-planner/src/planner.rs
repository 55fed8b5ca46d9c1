//! Monte Carlo tree search over motion primitives.
//!
//! Each planning step grows a fresh tree from the current state. Selection
//! walks the tree by maximizing `Q + c1·P·sqrt(N(s))/(1+N(s,a)) + c2·H`,
//! where P comes from the policy prior and H is the running mean of a
//! normalized mission-robustness heuristic. A simulation ends at the first
//! unexpanded node (valued by the costmap) or at a goal-set region (valued
//! 1 for the episode goal, 0 otherwise); the leaf's value and heuristic
//! back up the whole path. The executed action is then drawn proportional
//! to root visit counts, and the tree is rebuilt from the new state.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{AircraftState, DynamicsError, PrimitiveLibrary};
use crate::policy::{Costmap, CostmapSet, GoalVector, PolicyError, PolicyPrior};
use crate::scenario::{Airspace, Box3, ChannelSet, Episode, ScenarioError};
use stl_core::{robustness_table, EvalError, Formula, SignalTable, Trace};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("bad planner config: {0}")]
    BadConfig(String),
    #[error("no root visits at step {step}; the planning budget is too small")]
    NoVisits { step: usize },
    #[error("dynamics: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("policy: {0}")]
    Policy(#[from] PolicyError),
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("robustness: {0}")]
    Eval(#[from] EvalError),
}

/// How much search each planning step gets: a fixed simulation count
/// (deterministic) or a wall-clock allowance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanBudget {
    Simulations(u32),
    WallClockMs(u64),
}

/// Omitted JSON fields fall back to [`PlannerConfig::default`], so configs
/// can state only what they change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Exploration weight on the prior term.
    pub c1: f64,
    /// Weight on the robustness heuristic term; 0 disables it.
    pub c2: f64,
    pub plan_budget: PlanBudget,
    /// Cap on executed primitive steps per episode.
    pub max_steps: usize,
    /// Cap on tree depth; leaves at the cap return their costmap value.
    pub max_depth: usize,
    /// Robustness normalization scale in metres; defaults to half the
    /// bounding-box diagonal.
    pub rho_scale: Option<f64>,
    pub rng_seed: u64,
    /// Use the standard running mean instead of the biased
    /// increment-then-average backup.
    pub unbiased_backup: bool,
    /// Record per-step tree edges for plotting.
    pub record_trees: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            plan_budget: PlanBudget::Simulations(2000),
            max_steps: 60,
            max_depth: 40,
            rho_scale: None,
            rng_seed: 0,
            unbiased_backup: false,
            record_trees: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.c1.is_finite() && self.c1 > 0.0) {
            return Err(PlanError::BadConfig(format!("c1 must be positive, got {}", self.c1)));
        }
        if !self.c2.is_finite() {
            return Err(PlanError::BadConfig("c2 must be finite".into()));
        }
        match self.plan_budget {
            PlanBudget::Simulations(0) => {
                return Err(PlanError::BadConfig("simulation budget must be positive".into()))
            }
            PlanBudget::WallClockMs(0) => {
                return Err(PlanError::BadConfig("wall-clock budget must be positive".into()))
            }
            _ => {}
        }
        if self.max_steps == 0 {
            return Err(PlanError::BadConfig("max_steps must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(PlanError::BadConfig("max_depth must be at least 1".into()));
        }
        if let Some(scale) = self.rho_scale {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(PlanError::BadConfig(format!(
                    "rho_scale must be positive, got {scale}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-action statistics on a tree node's outgoing edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeStats {
    pub q: f64,
    pub n: u32,
    pub p: f64,
    pub h: f64,
}

impl EdgeStats {
    pub fn new(p: f64) -> Self {
        Self { q: 0.0, n: 0, p, h: 0.0 }
    }

    /// Fold one simulation result into the running means.
    ///
    /// The default increments the visit count first and then averages with
    /// the incremented count — `Q <- (N·Q + v)/(1 + N)` — which biases the
    /// first update to v/2. `unbiased` selects the standard running mean
    /// for sensitivity comparisons.
    pub fn backup(&mut self, v: f64, h: f64, unbiased: bool) {
        self.n += 1;
        let n = self.n as f64;
        if unbiased {
            self.q += (v - self.q) / n;
            self.h += (h - self.h) / n;
        } else {
            self.q = (n * self.q + v) / (n + 1.0);
            self.h = (n * self.h + h) / (n + 1.0);
        }
    }
}

/// The selection score: exploitation plus prior-weighted exploration plus
/// the robustness heuristic.
pub fn uct_score(e: &EdgeStats, n_parent: u32, c1: f64, c2: f64) -> f64 {
    e.q + c1 * e.p * (n_parent as f64).sqrt() / (1.0 + e.n as f64) + c2 * e.h
}

/// Draw an index with probability proportional to visit counts.
pub fn select_action(edges: &[EdgeStats], rng: &mut impl Rng) -> Result<usize, PlanError> {
    let total: u64 = edges.iter().map(|e| e.n as u64).sum();
    if total == 0 {
        return Err(PlanError::NoVisits { step: 0 });
    }
    let mut pick = rng.gen_range(0..total);
    for (i, e) in edges.iter().enumerate() {
        let n = e.n as u64;
        if pick < n {
            return Ok(i);
        }
        pick -= n;
    }
    unreachable!("pick is below the total visit count");
}

/// One expanded search node. `h_stl` caches the heuristic of the flight
/// history ending at this node — the path from the episode start through
/// the tree is fixed within a planning step, so the value never changes.
struct TreeNode {
    state: AircraftState,
    depth: usize,
    value: f64,
    h_stl: f64,
    edges: Vec<EdgeStats>,
    children: Vec<Child>,
}

enum Child {
    Unexplored,
    /// A goal-set state: simulations stop here with a fixed value, and the
    /// cached heuristic of the path into it.
    Terminal { value: f64, h_stl: f64, state: AircraftState },
    Node(Box<TreeNode>),
}

/// One visited edge of a search tree, flattened for plotting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeEdgeRecord {
    pub step: usize,
    pub parent_x: f64,
    pub parent_y: f64,
    pub child_x: f64,
    pub child_y: f64,
    pub visits: u32,
}

/// Everything a planning run borrows from the scenario.
pub struct PlannerDeps<'a> {
    pub airspace: &'a Airspace,
    pub library: &'a PrimitiveLibrary,
    pub prior: &'a dyn PolicyPrior,
    pub costmaps: &'a CostmapSet,
}

/// The flown outcome of one episode.
#[derive(Debug, Clone)]
pub struct EpisodeResult {
    /// Executed flight at segment-sample granularity: channels x, y, z, chi.
    pub trajectory: Trace,
    pub reached_goal: bool,
    /// Fraction of mission stages achieved, in [0, 1].
    pub stl_score: f64,
    /// Raw robustness of the episode spec over the flown trajectory.
    pub final_robustness: f64,
    /// Executed primitive steps.
    pub steps: usize,
    /// Visited tree edges per planning step, when recording is enabled.
    pub tree_edges: Option<Vec<TreeEdgeRecord>>,
}

/// Mutable search state threaded through one planning step's simulations:
/// the flight history (executed states plus the current tree path) as both
/// states and STL channel columns.
struct SearchCtx<'a> {
    library: &'a PrimitiveLibrary,
    prior: &'a dyn PolicyPrior,
    value_map: &'a Costmap,
    goal: GoalVector,
    spec: &'a Formula,
    channel_names: &'a [String],
    channels: &'a ChannelSet,
    terminals: &'a [(f64, Box3)],
    c1: f64,
    c2: f64,
    rho_scale: f64,
    max_depth: usize,
    unbiased: bool,
    times: Vec<f64>,
    cols: Vec<Vec<f64>>,
    history: Vec<AircraftState>,
}

impl<'a> SearchCtx<'a> {
    fn push_state(&mut self, state: AircraftState) {
        let row = self.channels.row(&state);
        for (col, v) in self.cols.iter_mut().zip(row) {
            col.push(v);
        }
        let next = self.times.last().map_or(0.0, |t| t + self.library.horizon_s());
        self.times.push(next);
        self.history.push(state);
    }

    fn pop_state(&mut self) {
        for col in &mut self.cols {
            col.pop();
        }
        self.times.pop();
        self.history.pop();
    }

    /// Heuristic of the current history (which must already include the
    /// state under evaluation): clamped normalized robustness.
    fn heuristic(&self) -> Result<f64, PlanError> {
        if self.c2 == 0.0 {
            return Ok(0.0);
        }
        let table = SignalTable::new(&self.times, self.channel_names, &self.cols)?;
        let rho = robustness_table(self.spec, &table, 0)?;
        Ok((rho / self.rho_scale).clamp(-1.0, 1.0))
    }

    /// Terminal value of a state: 1 at the episode goal, 0 at any other
    /// goal-set region, None elsewhere.
    fn terminal_value(&self, s: &AircraftState) -> Option<f64> {
        self.terminals
            .iter()
            .find(|(_, b)| b.contains(s.x, s.y, s.z))
            .map(|&(value, _)| value)
    }

    fn make_node(&self, state: AircraftState, depth: usize, h_stl: f64) -> TreeNode {
        let priors = self.prior.action_probabilities(&self.history, self.goal);
        debug_assert_eq!(priors.len(), self.library.len());
        TreeNode {
            state,
            depth,
            value: self.value_map.lookup_state(&state),
            h_stl,
            edges: priors.into_iter().map(EdgeStats::new).collect(),
            children: (0..self.library.len()).map(|_| Child::Unexplored).collect(),
        }
    }
}

/// One simulation: descend by the selection rule, stop at a terminal, an
/// unexpanded node, or the depth cap, and back the leaf's (value,
/// heuristic) pair up every edge on the way out.
fn simulate(ctx: &mut SearchCtx, node: &mut TreeNode) -> Result<(f64, f64), PlanError> {
    if node.depth >= ctx.max_depth {
        return Ok((node.value, node.h_stl));
    }
    let n_parent: u32 = node.edges.iter().map(|e| e.n).sum();
    let mut action = 0;
    let mut best = f64::NEG_INFINITY;
    for (a, e) in node.edges.iter().enumerate() {
        let score = uct_score(e, n_parent, ctx.c1, ctx.c2);
        if score > best {
            best = score;
            action = a;
        }
    }
    let (v, h) = match &mut node.children[action] {
        Child::Terminal { value, h_stl, .. } => (*value, *h_stl),
        Child::Node(child) => {
            ctx.push_state(child.state);
            let result = simulate(ctx, child);
            ctx.pop_state();
            result?
        }
        slot @ Child::Unexplored => {
            let state = ctx.library.transition(&node.state, action)?;
            ctx.push_state(state);
            let outcome = (|| -> Result<(f64, f64), PlanError> {
                let h = ctx.heuristic()?;
                if let Some(value) = ctx.terminal_value(&state) {
                    *slot = Child::Terminal { value, h_stl: h, state };
                    Ok((value, h))
                } else {
                    let child = ctx.make_node(state, node.depth + 1, h);
                    let v = child.value;
                    *slot = Child::Node(Box::new(child));
                    Ok((v, h))
                }
            })();
            ctx.pop_state();
            outcome?
        }
    };
    node.edges[action].backup(v, h, ctx.unbiased);
    Ok((v, h))
}

impl<'a> SearchCtx<'a> {
    fn collect_edges(node: &TreeNode, step: usize, out: &mut Vec<TreeEdgeRecord>) {
        for (a, edge) in node.edges.iter().enumerate() {
            if edge.n == 0 {
                continue;
            }
            let child_state = match &node.children[a] {
                Child::Terminal { state, .. } => Some(*state),
                Child::Node(child) => Some(child.state),
                Child::Unexplored => None,
            };
            if let Some(child) = child_state {
                out.push(TreeEdgeRecord {
                    step,
                    parent_x: node.state.x,
                    parent_y: node.state.y,
                    child_x: child.x,
                    child_y: child.y,
                    visits: edge.n,
                });
            }
            if let Child::Node(child) = &node.children[a] {
                Self::collect_edges(child, step, out);
            }
        }
    }
}

/// Fly one episode: plan with a fresh tree at every step, execute the
/// visit-count-sampled action, and stop on reaching any goal-set region or
/// the step cap. Entering the episode goal succeeds; entering any other
/// goal region fails the episode. The start region never terminates, so
/// departures can climb out of it.
pub fn plan_episode(
    episode: &Episode,
    cfg: &PlannerConfig,
    deps: &PlannerDeps,
) -> Result<EpisodeResult, PlanError> {
    cfg.validate()?;
    let airspace = deps.airspace;
    let goal =
        GoalVector::new(airspace.goal_index(&episode.goal_region)?, airspace.goal_set.len())?;
    deps.costmaps.validate_for(airspace.goal_set.len())?;
    let value_map = deps.costmaps.for_goal(goal)?;
    let signal_names = episode.spec.signal_names();
    let channels = ChannelSet::for_signals(airspace, &signal_names, &episode.goal_region)?;
    let mut terminals = Vec::new();
    for name in &airspace.goal_set {
        if *name == episode.start_region {
            continue;
        }
        let value = if *name == episode.goal_region { 1.0 } else { 0.0 };
        terminals.push((value, airspace.effective_goal_box(name)?));
    }
    let bb = &airspace.bounding_box;
    let rho_scale = cfg.rho_scale.unwrap_or_else(|| {
        0.5 * ((bb.max[0] - bb.min[0]).powi(2)
            + (bb.max[1] - bb.min[1]).powi(2)
            + (bb.max[2] - bb.min[2]).powi(2))
        .sqrt()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let period = deps.library.sample_period_s();
    let horizon = deps.library.horizon_s();
    let samples = deps.library.samples_per_segment();
    let mut current = episode.start_state;
    let mut traj_times = vec![0.0];
    let mut traj_states = vec![current];
    let mut tree_edges: Option<Vec<TreeEdgeRecord>> = cfg.record_trees.then(Vec::new);
    let mut reached_goal = false;
    let mut steps = 0;

    let mut ctx = SearchCtx {
        library: deps.library,
        prior: deps.prior,
        value_map,
        goal,
        spec: &episode.spec,
        channel_names: channels.names(),
        channels: &channels,
        terminals: &terminals,
        c1: cfg.c1,
        c2: cfg.c2,
        rho_scale,
        max_depth: cfg.max_depth,
        unbiased: cfg.unbiased_backup,
        times: Vec::new(),
        cols: vec![Vec::new(); channels.len()],
        history: Vec::new(),
    };
    ctx.push_state(current);

    loop {
        // Entering any goal-set region ends the episode: success at the
        // goal, failure elsewhere.
        if let Some(value) = ctx.terminal_value(&current) {
            reached_goal = value == 1.0;
            break;
        }
        if steps == cfg.max_steps {
            break;
        }
        let mut root = ctx.make_node(current, 0, 0.0);
        match cfg.plan_budget {
            PlanBudget::Simulations(k) => {
                for _ in 0..k {
                    simulate(&mut ctx, &mut root)?;
                }
            }
            PlanBudget::WallClockMs(ms) => {
                let deadline = std::time::Instant::now() + std::time::Duration::from_millis(ms);
                loop {
                    simulate(&mut ctx, &mut root)?;
                    if std::time::Instant::now() >= deadline {
                        break;
                    }
                }
            }
        }
        let action = select_action(&root.edges, &mut rng).map_err(|e| match e {
            PlanError::NoVisits { .. } => PlanError::NoVisits { step: steps },
            other => other,
        })?;
        if let Some(records) = tree_edges.as_mut() {
            SearchCtx::collect_edges(&root, steps, records);
        }
        let segment = deps.library.integrate(&current, action)?;
        for (k, s) in segment.iter().enumerate().skip(1) {
            traj_times.push(steps as f64 * horizon + k as f64 * period);
            traj_states.push(*s);
        }
        current = segment[samples];
        steps += 1;
        ctx.push_state(current);
    }

    let stl_score = crate::scenario::stage_score(airspace, episode, &traj_times, &traj_states)?;
    let final_robustness =
        crate::scenario::final_robustness(airspace, episode, &traj_times, &traj_states)?;
    let trajectory = Trace::new(
        traj_times,
        vec![
            ("x".into(), traj_states.iter().map(|s| s.x).collect()),
            ("y".into(), traj_states.iter().map(|s| s.y).collect()),
            ("z".into(), traj_states.iter().map(|s| s.z).collect()),
            ("chi".into(), traj_states.iter().map(|s| s.chi).collect()),
        ],
    )
    .map_err(ScenarioError::from)?;
    Ok(EpisodeResult { trajectory, reached_goal, stl_score, final_robustness, steps, tree_edges })
}
