//! Airspace geometry, mission specifications, and episode sampling.
//!
//! An airspace is a set of named axis-aligned boxes: goal regions (eight
//! compass boxes plus the two runway ends) and the downwind/base/final legs
//! of each runway's traffic pattern. Missions are temporal-logic formulas
//! over signed distances to those boxes: landing must thread downwind, base,
//! and final in order; takeoff must eventually reach its goal region.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{wrap_angle, AircraftState};
use crate::policy::{build_costmap_from_traces, CostmapSet};
use stl_core::{robustness_prefix, EvalError, Formula, Trace};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown region {0}")]
    UnknownRegion(String),
    #[error("unknown runway {0}")]
    UnknownRunway(String),
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error("episode request cannot be satisfied: {0}")]
    OverConstrained(String),
    #[error("signal {0} does not name a region distance or the goal indicator")]
    UnknownSignal(String),
    #[error("robustness: {0}")]
    Eval(#[from] EvalError),
    #[error("trace: {0}")]
    Trace(#[from] stl_core::TraceError),
    #[error("policy: {0}")]
    Policy(#[from] crate::policy::PolicyError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Axis-aligned box, min/max per axis in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Box3 {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self, ScenarioError> {
        for axis in 0..3 {
            if !(min[axis].is_finite() && max[axis].is_finite() && min[axis] < max[axis]) {
                return Err(ScenarioError::BadGeometry(format!(
                    "box must have min < max on every axis, got {min:?}..{max:?}"
                )));
            }
        }
        Ok(Self { min, max })
    }

    /// Positive inside (distance to the nearest face), negative outside
    /// (minus the Euclidean distance to the box), zero on the boundary.
    pub fn signed_distance(&self, x: f64, y: f64, z: f64) -> f64 {
        let p = [x, y, z];
        let mut inside_margin = f64::NEG_INFINITY;
        let mut outside_sq = 0.0;
        for axis in 0..3 {
            // Negative inside the slab, positive outside.
            let d = (self.min[axis] - p[axis]).max(p[axis] - self.max[axis]);
            inside_margin = inside_margin.max(d);
            outside_sq += d.max(0.0).powi(2);
        }
        if outside_sq > 0.0 {
            -outside_sq.sqrt()
        } else {
            -inside_margin
        }
    }

    pub fn contains(&self, x: f64, y: f64, z: f64) -> bool {
        let p = [x, y, z];
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    /// True when the boxes share interior volume (touching faces do not
    /// count).
    pub fn overlaps(&self, other: &Box3) -> bool {
        (0..3).all(|a| self.min[a] < other.max[a] && other.min[a] < self.max[a])
    }

    fn encloses(&self, other: &Box3) -> bool {
        (0..3).all(|a| self.min[a] <= other.min[a] && self.max[a] >= other.max[a])
    }
}

/// A named box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    #[serde(rename = "box")]
    pub bounds: Box3,
}

/// Signed distance from a state to a region's box.
pub fn signed_distance(region: &Region, s: &AircraftState) -> f64 {
    region.bounds.signed_distance(s.x, s.y, s.z)
}

/// A runway end with its left-hand pattern legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunwayPattern {
    pub name: String,
    pub heading_deg: f64,
    pub downwind: String,
    pub base: String,
    #[serde(rename = "final")]
    pub final_leg: String,
}

impl RunwayPattern {
    /// Course angle of the runway heading (compass degrees to radians
    /// counterclockwise from east).
    pub fn course_rad(&self) -> f64 {
        wrap_angle((90.0 - self.heading_deg).to_radians())
    }
}

fn default_landing_altitude() -> f64 {
    30.0
}

/// The full scenario geometry: bounding box, named regions, runway
/// patterns, and the ordered goal set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Airspace {
    pub bounding_box: Box3,
    pub regions: Vec<Region>,
    pub runways: Vec<RunwayPattern>,
    pub goal_set: Vec<String>,
    pub pattern_altitude_m: f64,
    /// Landing counts only below this altitude; runway goal boxes are
    /// clamped to it when used as goals.
    #[serde(default = "default_landing_altitude")]
    pub landing_altitude_m: f64,
}

impl Airspace {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (i, r) in self.regions.iter().enumerate() {
            if self.regions[..i].iter().any(|o| o.name == r.name) {
                return Err(ScenarioError::BadGeometry(format!("duplicate region {}", r.name)));
            }
            if !self.bounding_box.encloses(&r.bounds) {
                return Err(ScenarioError::BadGeometry(format!(
                    "region {} leaves the bounding box",
                    r.name
                )));
            }
        }
        if self.goal_set.len() < 2 {
            return Err(ScenarioError::BadGeometry("goal set needs at least 2 regions".into()));
        }
        for name in &self.goal_set {
            self.region(name)?;
        }
        for i in 0..self.goal_set.len() {
            for j in i + 1..self.goal_set.len() {
                let a = self.region(&self.goal_set[i])?;
                let b = self.region(&self.goal_set[j])?;
                if a.bounds.overlaps(&b.bounds) {
                    return Err(ScenarioError::BadGeometry(format!(
                        "goal regions {} and {} overlap",
                        a.name, b.name
                    )));
                }
            }
        }
        for rw in &self.runways {
            self.region(&rw.name)?;
            self.region(&rw.downwind)?;
            self.region(&rw.base)?;
            self.region(&rw.final_leg)?;
        }
        if !(self.pattern_altitude_m.is_finite() && self.pattern_altitude_m > 0.0) {
            return Err(ScenarioError::BadGeometry("pattern altitude must be positive".into()));
        }
        if !(self.landing_altitude_m.is_finite() && self.landing_altitude_m > 0.0) {
            return Err(ScenarioError::BadGeometry("landing altitude must be positive".into()));
        }
        Ok(())
    }

    pub fn region(&self, name: &str) -> Result<&Region, ScenarioError> {
        self.regions
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| ScenarioError::UnknownRegion(name.to_string()))
    }

    pub fn runway(&self, name: &str) -> Option<&RunwayPattern> {
        self.runways.iter().find(|r| r.name == name)
    }

    pub fn goal_index(&self, name: &str) -> Result<usize, ScenarioError> {
        self.goal_set
            .iter()
            .position(|g| g == name)
            .ok_or_else(|| ScenarioError::UnknownRegion(name.to_string()))
    }

    /// The box that counts as "reached" for a goal: runway ends are clamped
    /// to the landing altitude, other goals use their full box.
    pub fn effective_goal_box(&self, name: &str) -> Result<Box3, ScenarioError> {
        let mut bounds = self.region(name)?.bounds;
        if self.runway(name).is_some() {
            bounds.max[2] = bounds.max[2].min(self.landing_altitude_m);
            if bounds.min[2] >= bounds.max[2] {
                return Err(ScenarioError::BadGeometry(format!(
                    "runway {name} box sits entirely above the landing altitude"
                )));
            }
        }
        Ok(bounds)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let space: Airspace = serde_json::from_str(text)?;
        space.validate()?;
        Ok(space)
    }

    pub fn from_json_path(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

fn boxed(cx: f64, cy: f64, half: f64, zmin: f64, zmax: f64) -> Box3 {
    Box3 { min: [cx - half, cy - half, zmin], max: [cx + half, cy + half, zmax] }
}

/// The stock synthetic airfield: a 1 km runway box per end on the x-axis,
/// eight 2 km compass goal boxes at 6 km radius, and left-hand pattern legs
/// for both runway ends.
pub fn default_airspace() -> Airspace {
    let mut regions = vec![
        Region {
            name: "R08".into(),
            bounds: Box3 { min: [-1250.0, -300.0, 0.0], max: [-250.0, 300.0, 40.0] },
        },
        Region {
            name: "R26".into(),
            bounds: Box3 { min: [250.0, -300.0, 0.0], max: [1250.0, 300.0, 40.0] },
        },
    ];
    let d = 6000.0;
    let diag = (d / std::f64::consts::SQRT_2).round(); // 4243
    let compass = [
        ("N", 0.0, d),
        ("NE", diag, diag),
        ("E", d, 0.0),
        ("SE", diag, -diag),
        ("S", 0.0, -d),
        ("SW", -diag, -diag),
        ("W", -d, 0.0),
        ("NW", -diag, diag),
    ];
    for &(name, cx, cy) in &compass {
        regions.push(Region { name: name.into(), bounds: boxed(cx, cy, 1000.0, 100.0, 800.0) });
    }
    // Left-hand pattern for R08 (runway course east): downwind north of the
    // field flown west, base descending south, final aligned eastbound.
    regions.push(Region {
        name: "downwind_r08".into(),
        bounds: Box3 { min: [-2200.0, 800.0, 150.0], max: [1200.0, 1800.0, 500.0] },
    });
    regions.push(Region {
        name: "base_r08".into(),
        bounds: Box3 { min: [-3200.0, -500.0, 100.0], max: [-2200.0, 800.0, 450.0] },
    });
    regions.push(Region {
        name: "final_r08".into(),
        bounds: Box3 { min: [-2200.0, -400.0, 0.0], max: [-250.0, 400.0, 350.0] },
    });
    // R26 mirrors R08 through the origin.
    regions.push(Region {
        name: "downwind_r26".into(),
        bounds: Box3 { min: [-1200.0, -1800.0, 150.0], max: [2200.0, -800.0, 500.0] },
    });
    regions.push(Region {
        name: "base_r26".into(),
        bounds: Box3 { min: [2200.0, -800.0, 100.0], max: [3200.0, 500.0, 450.0] },
    });
    regions.push(Region {
        name: "final_r26".into(),
        bounds: Box3 { min: [250.0, -400.0, 0.0], max: [2200.0, 400.0, 350.0] },
    });
    let space = Airspace {
        bounding_box: Box3 { min: [-8000.0, -8000.0, 0.0], max: [8000.0, 8000.0, 1000.0] },
        regions,
        runways: vec![
            RunwayPattern {
                name: "R08".into(),
                heading_deg: 90.0,
                downwind: "downwind_r08".into(),
                base: "base_r08".into(),
                final_leg: "final_r08".into(),
            },
            RunwayPattern {
                name: "R26".into(),
                heading_deg: 270.0,
                downwind: "downwind_r26".into(),
                base: "base_r26".into(),
                final_leg: "final_r26".into(),
            },
        ],
        goal_set: vec![
            "N".into(),
            "NE".into(),
            "E".into(),
            "SE".into(),
            "S".into(),
            "SW".into(),
            "W".into(),
            "NW".into(),
            "R08".into(),
            "R26".into(),
        ],
        pattern_altitude_m: 300.0,
        landing_altitude_m: 30.0,
    };
    space.validate().expect("stock airspace is valid");
    space
}

fn dist_channel(region: &str) -> String {
    format!("d_{region}")
}

/// Landing mission: thread downwind, base, and final in order and stay on
/// final — `F ((d_dw > 0) & F ((d_base > 0) & F G (d_final > 0)))`.
pub fn build_landing_spec(airspace: &Airspace, runway: &str) -> Result<Formula, ScenarioError> {
    let rw = airspace
        .runway(runway)
        .ok_or_else(|| ScenarioError::UnknownRunway(runway.to_string()))?;
    airspace.region(&rw.downwind)?;
    airspace.region(&rw.base)?;
    airspace.region(&rw.final_leg)?;
    let stay_final = Formula::always(Formula::gt(dist_channel(&rw.final_leg), 0.0));
    let base_then = Formula::and(
        Formula::gt(dist_channel(&rw.base), 0.0),
        Formula::eventually(stay_final),
    );
    let downwind_then =
        Formula::and(Formula::gt(dist_channel(&rw.downwind), 0.0), Formula::eventually(base_then));
    Ok(Formula::eventually(downwind_then))
}

/// The three nested prefixes of the landing mission, shallowest first:
/// reach downwind; reach downwind then base; the full mission.
pub fn landing_stage_specs(
    airspace: &Airspace,
    runway: &str,
) -> Result<[Formula; 3], ScenarioError> {
    let rw = airspace
        .runway(runway)
        .ok_or_else(|| ScenarioError::UnknownRunway(runway.to_string()))?;
    let dw = Formula::gt(dist_channel(&rw.downwind), 0.0);
    let base = Formula::gt(dist_channel(&rw.base), 0.0);
    Ok([
        Formula::eventually(dw.clone()),
        Formula::eventually(Formula::and(dw, Formula::eventually(base))),
        build_landing_spec(airspace, runway)?,
    ])
}

/// Takeoff mission: eventually reach the goal region, `F (d_goal > 0)`.
pub fn build_takeoff_spec(airspace: &Airspace, goal: &str) -> Result<Formula, ScenarioError> {
    airspace.region(goal)?;
    Ok(Formula::eventually(Formula::gt(dist_channel(goal), 0.0)))
}

/// Resolves formula signal names to boxes: `d_<region>` is the signed
/// distance to that region, `in_goal` the signed distance to the episode
/// goal's effective box. Rows are evaluated per state in the planner's hot
/// path, so the resolution happens once.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    names: Vec<String>,
    boxes: Vec<Box3>,
}

impl ChannelSet {
    pub fn for_signals(
        airspace: &Airspace,
        signals: &[String],
        goal: &str,
    ) -> Result<Self, ScenarioError> {
        let mut boxes = Vec::with_capacity(signals.len());
        for name in signals {
            if name == "in_goal" {
                boxes.push(airspace.effective_goal_box(goal)?);
            } else if let Some(region) = name.strip_prefix("d_") {
                boxes.push(airspace.region(region)?.bounds);
            } else {
                return Err(ScenarioError::UnknownSignal(name.clone()));
            }
        }
        Ok(Self { names: signals.to_vec(), boxes })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, s: &AircraftState) -> Vec<f64> {
        self.boxes.iter().map(|b| b.signed_distance(s.x, s.y, s.z)).collect()
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Column-major rows for a whole state sequence, assembled into a Trace.
    pub fn trace(&self, times: Vec<f64>, states: &[AircraftState]) -> Result<Trace, ScenarioError> {
        let mut columns: Vec<(String, Vec<f64>)> =
            self.names.iter().map(|n| (n.clone(), Vec::with_capacity(states.len()))).collect();
        for s in states {
            for (col, b) in columns.iter_mut().zip(&self.boxes) {
                col.1.push(b.signed_distance(s.x, s.y, s.z));
            }
        }
        Ok(Trace::new(times, columns)?)
    }
}

/// Signed-distance channels for every region plus the `in_goal` indicator,
/// stamped at one timestamp per state (`step_s` seconds apart).
pub fn derive_channels(
    airspace: &Airspace,
    states: &[AircraftState],
    goal: &str,
    step_s: f64,
) -> Result<Trace, ScenarioError> {
    let mut signals: Vec<String> = airspace.regions.iter().map(|r| dist_channel(&r.name)).collect();
    signals.push("in_goal".into());
    let set = ChannelSet::for_signals(airspace, &signals, goal)?;
    let times = (0..states.len()).map(|i| i as f64 * step_s).collect();
    set.trace(times, states)
}

/// Landing or takeoff, deciding which spec family an episode uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    Landing,
    Takeoff,
}

/// One sampled mission: where to start, where to go, and the formula that
/// scores the flight.
#[derive(Debug, Clone)]
pub struct Episode {
    pub start_region: String,
    pub goal_region: String,
    pub start_state: AircraftState,
    pub spec: Formula,
    pub spec_kind: SpecKind,
}

/// Optional fixed start/goal for [`sample_episode`].
#[derive(Debug, Clone, Default)]
pub struct EpisodeConstraints {
    pub start: Option<String>,
    pub goal: Option<String>,
}

/// Draw a start/goal pair (uniform over distinct ordered pairs unless
/// constrained), a start state inside the start region, and the matching
/// spec. Runway starts launch on the runway course just above the landing
/// altitude; other starts spawn in the pattern-altitude band on a random
/// course.
pub fn sample_episode(
    airspace: &Airspace,
    rng: &mut impl Rng,
    constraints: &EpisodeConstraints,
) -> Result<Episode, ScenarioError> {
    let goals = &airspace.goal_set;
    if let Some(name) = &constraints.start {
        airspace.goal_index(name)?;
    }
    if let Some(name) = &constraints.goal {
        airspace.goal_index(name)?;
    }
    if constraints.start.is_some() && constraints.start == constraints.goal {
        return Err(ScenarioError::OverConstrained(format!(
            "start and goal are both {}",
            constraints.start.clone().unwrap()
        )));
    }
    let start_region = match &constraints.start {
        Some(name) => name.clone(),
        None => {
            let mut candidates: Vec<&String> = goals.iter().collect();
            if let Some(goal) = &constraints.goal {
                candidates.retain(|g| *g != goal);
            }
            candidates[rng.gen_range(0..candidates.len())].clone()
        }
    };
    let goal_region = match &constraints.goal {
        Some(name) => name.clone(),
        None => {
            let candidates: Vec<&String> = goals.iter().filter(|g| **g != start_region).collect();
            candidates[rng.gen_range(0..candidates.len())].clone()
        }
    };
    let bounds = airspace.region(&start_region)?.bounds;
    let x = rng.gen_range(bounds.min[0]..bounds.max[0]);
    let y = rng.gen_range(bounds.min[1]..bounds.max[1]);
    let (z, chi) = match airspace.runway(&start_region) {
        Some(rw) => {
            let lo = airspace.landing_altitude_m.max(bounds.min[2]);
            let hi = bounds.max[2];
            let z = if lo < hi { rng.gen_range(lo..hi) } else { bounds.min[2] };
            (z, rw.course_rad())
        }
        None => {
            let lo = (airspace.pattern_altitude_m - 50.0).max(bounds.min[2]);
            let hi = (airspace.pattern_altitude_m + 50.0).min(bounds.max[2]);
            let z = if lo < hi { rng.gen_range(lo..hi) } else { bounds.min[2] };
            (z, rng.gen_range(-PI..PI))
        }
    };
    let start_state = AircraftState::new(x, y, z, chi);
    let (spec, spec_kind) = if airspace.runway(&goal_region).is_some() {
        (build_landing_spec(airspace, &goal_region)?, SpecKind::Landing)
    } else {
        (build_takeoff_spec(airspace, &goal_region)?, SpecKind::Takeoff)
    };
    Ok(Episode { start_region, goal_region, start_state, spec, spec_kind })
}

/// Fraction of mission stages a flown state sequence achieves, in [0, 1].
///
/// Landing counts how many of the three nested mission prefixes the trace
/// satisfies (robustness >= 0) and divides by three; takeoff is all or
/// nothing on the full spec.
pub fn stage_score(
    airspace: &Airspace,
    episode: &Episode,
    times: &[f64],
    states: &[AircraftState],
) -> Result<f64, ScenarioError> {
    match episode.spec_kind {
        SpecKind::Landing => {
            let stages = landing_stage_specs(airspace, &episode.goal_region)?;
            let signals = stages[2].signal_names();
            let set = ChannelSet::for_signals(airspace, &signals, &episode.goal_region)?;
            let trace = set.trace(times.to_vec(), states)?;
            let mut achieved = 0;
            for stage in &stages {
                if robustness_prefix(stage, &trace)? >= 0.0 {
                    achieved += 1;
                }
            }
            Ok(achieved as f64 / 3.0)
        }
        SpecKind::Takeoff => {
            let signals = episode.spec.signal_names();
            let set = ChannelSet::for_signals(airspace, &signals, &episode.goal_region)?;
            let trace = set.trace(times.to_vec(), states)?;
            Ok(if robustness_prefix(&episode.spec, &trace)? >= 0.0 { 1.0 } else { 0.0 })
        }
    }
}

/// Robustness of the episode spec over a flown state sequence.
pub fn final_robustness(
    airspace: &Airspace,
    episode: &Episode,
    times: &[f64],
    states: &[AircraftState],
) -> Result<f64, ScenarioError> {
    let signals = episode.spec.signal_names();
    let set = ChannelSet::for_signals(airspace, &signals, &episode.goal_region)?;
    let trace = set.trace(times.to_vec(), states)?;
    Ok(robustness_prefix(&episode.spec, &trace)?)
}

/// Piecewise-linear flight between waypoints, resampled roughly every
/// `step_m` metres, as an x/y/z trace for costmap construction.
fn polyline_trace(waypoints: &[[f64; 3]], step_m: f64) -> Trace {
    let mut xs = vec![waypoints[0][0]];
    let mut ys = vec![waypoints[0][1]];
    let mut zs = vec![waypoints[0][2]];
    for leg in waypoints.windows(2) {
        let (a, b) = (leg[0], leg[1]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt();
        let segments = (len / step_m).ceil().max(1.0) as usize;
        for k in 1..=segments {
            let f = k as f64 / segments as f64;
            xs.push(a[0] + f * (b[0] - a[0]));
            ys.push(a[1] + f * (b[1] - a[1]));
            zs.push(a[2] + f * (b[2] - a[2]));
        }
    }
    let times = (0..xs.len()).map(|i| i as f64).collect();
    Trace::new(times, vec![("x".into(), xs), ("y".into(), ys), ("z".into(), zs)])
        .expect("polyline trace is well-formed")
}

fn mirror(points: &[[f64; 3]]) -> Vec<[f64; 3]> {
    points.iter().map(|p| [-p[0], -p[1], p[2]]).collect()
}

/// Pattern waypoints for landing on a runway end: downwind entry, downwind,
/// base turn, final, threshold, rollout.
fn landing_waypoints(runway: &str) -> Vec<[f64; 3]> {
    let r08 = vec![
        [1100.0, 1300.0, 300.0],
        [-2100.0, 1300.0, 280.0],
        [-2700.0, 600.0, 250.0],
        [-2700.0, 0.0, 200.0],
        [-2100.0, 0.0, 180.0],
        [-1250.0, 0.0, 60.0],
        [-750.0, 0.0, 15.0],
    ];
    match runway {
        "R26" => mirror(&r08),
        _ => r08,
    }
}

/// Climb-out waypoints for departing a runway end toward open airspace.
fn takeoff_waypoints(runway: &str) -> Vec<[f64; 3]> {
    let r08 = vec![[-1000.0, 0.0, 35.0], [1500.0, 0.0, 100.0]];
    match runway {
        "R26" => mirror(&r08),
        _ => r08,
    }
}

/// Demonstration-style reference traces for one goal: landings fly the
/// pattern (joined from every compass box), takeoffs climb out from each
/// runway end and head for the goal.
pub fn reference_traces(airspace: &Airspace, goal: &str) -> Result<Vec<Trace>, ScenarioError> {
    let step = 100.0;
    let mut traces = Vec::new();
    if airspace.runway(goal).is_some() {
        let pattern = landing_waypoints(goal);
        for name in &airspace.goal_set {
            if airspace.runway(name).is_some() {
                continue;
            }
            let start = airspace.region(name)?.bounds.center();
            let mut waypoints = vec![[start[0], start[1], airspace.pattern_altitude_m]];
            waypoints.extend_from_slice(&pattern);
            traces.push(polyline_trace(&waypoints, step));
        }
    } else {
        let target = airspace.region(goal)?.bounds.center();
        for rw in &airspace.runways {
            let mut waypoints = takeoff_waypoints(&rw.name);
            waypoints.push(target);
            traces.push(polyline_trace(&waypoints, step));
        }
    }
    if traces.is_empty() {
        return Err(ScenarioError::BadGeometry(format!("no reference routes for goal {goal}")));
    }
    Ok(traces)
}

/// One frequency costmap per goal-set entry, built from the reference
/// traces on a 200 m x 200 m x 150 m grid over the bounding box.
pub fn default_costmaps(airspace: &Airspace) -> Result<CostmapSet, ScenarioError> {
    let bb = &airspace.bounding_box;
    let origin = bb.min;
    let resolution = [200.0, 200.0, 150.0];
    let dims = [
        ((bb.max[0] - bb.min[0]) / resolution[0]).ceil() as usize,
        ((bb.max[1] - bb.min[1]) / resolution[1]).ceil() as usize,
        ((bb.max[2] - bb.min[2]) / resolution[2]).ceil() as usize,
    ];
    let mut maps = Vec::with_capacity(airspace.goal_set.len());
    for goal in &airspace.goal_set {
        let traces = reference_traces(airspace, goal)?;
        maps.push(build_costmap_from_traces(&traces, origin, resolution, dims)?);
    }
    Ok(CostmapSet::PerGoal(maps))
}
