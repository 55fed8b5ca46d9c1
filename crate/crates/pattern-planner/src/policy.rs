//! Action priors and state values over the primitive library.
//!
//! The planner consumes two spatial signals: a prior distribution over
//! primitives, and a scalar state value. Both default to a frequency
//! costmap — a normalized 3-D visit-count grid built from demonstration
//! trajectories — behind the [`PolicyPrior`] seam where a learned model
//! could plug in. A uniform prior and a file-backed replay prior round out
//! the implementations.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{AircraftState, PrimitiveLibrary};
use stl_core::Trace;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("bad costmap values: {0}")]
    BadValues(String),
    #[error("traces must provide channel {0}")]
    MissingChannel(String),
    #[error("no traces given")]
    EmptyTraces,
    #[error("goal index {index} does not fit a {len}-goal set")]
    BadGoal { index: usize, len: usize },
    #[error("costmap set has {maps} maps but the goal set has {goals}")]
    GoalSetMismatch { maps: usize, goals: usize },
    #[error("target has {got} points, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("bad prior table: {0}")]
    BadPrior(String),
    #[error("dynamics: {0}")]
    Dynamics(#[from] crate::dynamics::DynamicsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which member of the goal set an episode is aiming for: a one-hot vector
/// stored as (index, set size).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalVector {
    pub index: usize,
    pub len: usize,
}

impl GoalVector {
    pub fn new(index: usize, len: usize) -> Result<Self, PolicyError> {
        if index >= len {
            return Err(PolicyError::BadGoal { index, len });
        }
        Ok(Self { index, len })
    }

    /// The explicit one-hot encoding.
    pub fn one_hot(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len];
        v[self.index] = 1.0;
        v
    }
}

/// Normalized 3-D visit-frequency grid. `values` is flat row-major with x
/// fastest: `values[ix + nx*(iy + ny*iz)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Costmap {
    pub origin: [f64; 3],
    pub resolution: [f64; 3],
    pub dims: [usize; 3],
    pub values: Vec<f64>,
}

impl Costmap {
    pub fn new(
        origin: [f64; 3],
        resolution: [f64; 3],
        dims: [usize; 3],
        values: Vec<f64>,
    ) -> Result<Self, PolicyError> {
        if dims.iter().any(|&d| d == 0) {
            return Err(PolicyError::BadGrid(format!("dims must all be >= 1, got {dims:?}")));
        }
        if resolution.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
            return Err(PolicyError::BadGrid(format!(
                "resolution must be positive, got {resolution:?}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(PolicyError::BadGrid(format!("origin must be finite, got {origin:?}")));
        }
        let cells = dims[0] * dims[1] * dims[2];
        if values.len() != cells {
            return Err(PolicyError::BadValues(format!(
                "expected {cells} values for dims {dims:?}, got {}",
                values.len()
            )));
        }
        let mut max = 0.0f64;
        for &v in &values {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(PolicyError::BadValues(format!("value {v} outside [0, 1]")));
            }
            max = max.max(v);
        }
        if max != 0.0 && (max - 1.0).abs() > 1e-9 {
            return Err(PolicyError::BadValues(format!(
                "a non-empty map must be normalized to max 1, got max {max}"
            )));
        }
        Ok(Self { origin, resolution, dims, values })
    }

    /// Value of the cell containing the point; cells are half-open on each
    /// axis (`floor((p - origin) / resolution)`), and anything outside the
    /// grid reads 0.
    pub fn lookup(&self, x: f64, y: f64, z: f64) -> f64 {
        let p = [x, y, z];
        let mut idx = [0usize; 3];
        for axis in 0..3 {
            let cell = ((p[axis] - self.origin[axis]) / self.resolution[axis]).floor();
            if cell < 0.0 || cell >= self.dims[axis] as f64 {
                return 0.0;
            }
            idx[axis] = cell as usize;
        }
        self.values[idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])]
    }

    pub fn lookup_state(&self, s: &AircraftState) -> f64 {
        self.lookup(s.x, s.y, s.z)
    }

    pub fn from_json_str(text: &str) -> Result<Self, PolicyError> {
        let raw: Costmap = serde_json::from_str(text)?;
        Self::new(raw.origin, raw.resolution, raw.dims, raw.values)
    }

    pub fn from_json_path(path: &Path) -> Result<Self, PolicyError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("costmap serializes")
    }
}

/// Count state visits per cell over `x`/`y`/`z` trace channels and divide by
/// the maximum count.
pub fn build_costmap_from_traces(
    traces: &[Trace],
    origin: [f64; 3],
    resolution: [f64; 3],
    dims: [usize; 3],
) -> Result<Costmap, PolicyError> {
    if traces.is_empty() {
        return Err(PolicyError::EmptyTraces);
    }
    // Validate the grid shape before counting.
    let mut counts = Costmap::new(origin, resolution, dims, vec![0.0; dims[0] * dims[1] * dims[2]])?;
    let mut raw = vec![0u64; counts.values.len()];
    for trace in traces {
        let xs = trace.channel("x").ok_or_else(|| PolicyError::MissingChannel("x".into()))?;
        let ys = trace.channel("y").ok_or_else(|| PolicyError::MissingChannel("y".into()))?;
        let zs = trace.channel("z").ok_or_else(|| PolicyError::MissingChannel("z".into()))?;
        for i in 0..trace.len() {
            let p = [xs[i], ys[i], zs[i]];
            let mut idx = [0usize; 3];
            let mut inside = true;
            for axis in 0..3 {
                let cell = ((p[axis] - origin[axis]) / resolution[axis]).floor();
                if cell < 0.0 || cell >= dims[axis] as f64 {
                    inside = false;
                    break;
                }
                idx[axis] = cell as usize;
            }
            if inside {
                raw[idx[0] + dims[0] * (idx[1] + dims[1] * idx[2])] += 1;
            }
        }
    }
    let max = raw.iter().copied().max().unwrap_or(0);
    if max > 0 {
        for (v, &c) in counts.values.iter_mut().zip(&raw) {
            *v = c as f64 / max as f64;
        }
    }
    Ok(counts)
}

/// One costmap shared by every goal, or one per goal-set entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CostmapSet {
    Shared(Costmap),
    PerGoal(Vec<Costmap>),
}

impl CostmapSet {
    pub fn for_goal(&self, goal: GoalVector) -> Result<&Costmap, PolicyError> {
        match self {
            CostmapSet::Shared(c) => Ok(c),
            CostmapSet::PerGoal(maps) => {
                if maps.len() != goal.len {
                    return Err(PolicyError::GoalSetMismatch { maps: maps.len(), goals: goal.len });
                }
                Ok(&maps[goal.index])
            }
        }
    }

    /// Check the set covers a goal set of the given size.
    pub fn validate_for(&self, goals: usize) -> Result<(), PolicyError> {
        match self {
            CostmapSet::Shared(_) => Ok(()),
            CostmapSet::PerGoal(maps) if maps.len() == goals => Ok(()),
            CostmapSet::PerGoal(maps) => {
                Err(PolicyError::GoalSetMismatch { maps: maps.len(), goals })
            }
        }
    }
}

/// Prior action distribution conditioned on the flown history and the goal.
///
/// The history slice carries the executed states up to and including the
/// current one (never empty); implementations may use as much or as little
/// of it as they need. The returned vector is a probability distribution
/// over the primitive library (non-negative, sums to 1 within 1e-9).
pub trait PolicyPrior: Send + Sync {
    fn action_probabilities(&self, history: &[AircraftState], goal: GoalVector) -> Vec<f64>;
}

/// Exponential weighting of scores: `p_i ∝ exp(score_i / temperature)`,
/// computed with max-subtraction so tiny temperatures saturate instead of
/// overflowing. Equal scores (including all-zero) come out uniform.
pub fn exponential_weights(scores: &[f64], temperature: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = scores.iter().map(|s| ((s - max) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// Scores each primitive by the mean costmap value along its integrated
/// segment from the current state, then applies exponential weighting.
pub struct CostmapPrior {
    library: PrimitiveLibrary,
    costmaps: CostmapSet,
    temperature: f64,
}

impl CostmapPrior {
    pub fn new(
        costmaps: CostmapSet,
        library: &PrimitiveLibrary,
        temperature: f64,
    ) -> Result<Self, PolicyError> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(PolicyError::BadPrior(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(Self { library: library.clone(), costmaps, temperature })
    }
}

/// Convenience constructor for a single shared costmap.
pub fn costmap_prior(
    costmap: Costmap,
    library: &PrimitiveLibrary,
    temperature: f64,
) -> Result<CostmapPrior, PolicyError> {
    CostmapPrior::new(CostmapSet::Shared(costmap), library, temperature)
}

impl PolicyPrior for CostmapPrior {
    fn action_probabilities(&self, history: &[AircraftState], goal: GoalVector) -> Vec<f64> {
        let start = history.last().expect("history is never empty");
        let map = match self.costmaps.for_goal(goal) {
            Ok(map) => map,
            // The goal/set pairing is validated up front by the planner;
            // degrade to uniform rather than panic inside the search.
            Err(_) => return vec![1.0 / self.library.len() as f64; self.library.len()],
        };
        let scores: Vec<f64> = (0..self.library.len())
            .map(|id| {
                let states = self.library.integrate(start, id).expect("id in range");
                let total: f64 = states.iter().map(|s| map.lookup_state(s)).sum();
                total / states.len() as f64
            })
            .collect();
        exponential_weights(&scores, self.temperature)
    }
}

/// `1/|A|` for every action, regardless of history and goal.
pub struct UniformPrior {
    actions: usize,
}

impl UniformPrior {
    pub fn new(library: &PrimitiveLibrary) -> Self {
        Self { actions: library.len() }
    }
}

/// Convenience constructor mirroring [`costmap_prior`].
pub fn uniform_prior(library: &PrimitiveLibrary) -> UniformPrior {
    UniformPrior::new(library)
}

impl PolicyPrior for UniformPrior {
    fn action_probabilities(&self, _history: &[AircraftState], _goal: GoalVector) -> Vec<f64> {
        vec![1.0 / self.actions as f64; self.actions]
    }
}

/// JSON form of a replay prior: a table from quantized (cell, course sector,
/// goal index) keys to explicit probability rows.
#[derive(Debug, Serialize, Deserialize)]
struct ReplayTable {
    origin: [f64; 3],
    resolution: [f64; 3],
    sectors: usize,
    actions: usize,
    table: HashMap<String, Vec<f64>>,
}

/// File-backed prior: looks up the quantized current state and goal in a
/// table of probability rows, falling back to uniform on a miss. Lets tests
/// and experiments inject arbitrary priors deterministically.
pub struct ReplayPrior {
    spec: ReplayTable,
}

impl ReplayPrior {
    pub fn from_json_str(text: &str) -> Result<Self, PolicyError> {
        let spec: ReplayTable = serde_json::from_str(text)?;
        if spec.sectors == 0 {
            return Err(PolicyError::BadPrior("sectors must be >= 1".into()));
        }
        if spec.actions == 0 {
            return Err(PolicyError::BadPrior("actions must be >= 1".into()));
        }
        if spec.resolution.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
            return Err(PolicyError::BadPrior(format!(
                "resolution must be positive, got {:?}",
                spec.resolution
            )));
        }
        for (key, row) in &spec.table {
            if row.len() != spec.actions {
                return Err(PolicyError::BadPrior(format!(
                    "row {key} has {} entries, expected {}",
                    row.len(),
                    spec.actions
                )));
            }
            if row.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
                return Err(PolicyError::BadPrior(format!("row {key} has negative entries")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(PolicyError::BadPrior(format!("row {key} sums to {sum}, not 1")));
            }
        }
        Ok(Self { spec })
    }

    pub fn from_json_path(path: &Path) -> Result<Self, PolicyError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    fn key_for(&self, s: &AircraftState, goal: GoalVector) -> String {
        let q = |p: f64, axis: usize| -> i64 {
            ((p - self.spec.origin[axis]) / self.spec.resolution[axis]).floor() as i64
        };
        let sector_width = std::f64::consts::TAU / self.spec.sectors as f64;
        let sector = (((s.chi + std::f64::consts::PI) / sector_width).floor() as usize)
            .min(self.spec.sectors - 1);
        format!("{},{},{},{},{}", q(s.x, 0), q(s.y, 1), q(s.z, 2), sector, goal.index)
    }
}

impl PolicyPrior for ReplayPrior {
    fn action_probabilities(&self, history: &[AircraftState], goal: GoalVector) -> Vec<f64> {
        let state = history.last().expect("history is never empty");
        match self.spec.table.get(&self.key_for(state, goal)) {
            Some(row) => row.clone(),
            None => vec![1.0 / self.spec.actions as f64; self.spec.actions],
        }
    }
}

/// Find the primitive whose segment from `start` best matches the target
/// points under a per-axis weighted squared-distance sum. Ties go to the
/// lowest id.
pub fn match_primitive(
    target: &[[f64; 3]],
    library: &PrimitiveLibrary,
    start: &AircraftState,
    weights: [f64; 3],
) -> Result<usize, PolicyError> {
    let expected = library.samples_per_segment() + 1;
    if target.len() != expected {
        return Err(PolicyError::LengthMismatch { expected, got: target.len() });
    }
    let mut best: Option<(f64, usize)> = None;
    for id in 0..library.len() {
        let states = library.integrate(start, id)?;
        let dist: f64 = states
            .iter()
            .zip(target)
            .map(|(s, t)| {
                weights[0] * (s.x - t[0]).powi(2)
                    + weights[1] * (s.y - t[1]).powi(2)
                    + weights[2] * (s.z - t[2]).powi(2)
            })
            .sum();
        if best.map_or(true, |(d, _)| dist < d) {
            best = Some((dist, id));
        }
    }
    Ok(best.expect("library is non-empty").1)
}
