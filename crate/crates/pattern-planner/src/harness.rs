//! Suite runner: fly episode batches across start/goal classes, aggregate
//! success and mission-stage metrics, and export plot-ready artifacts.
//!
//! Suites are deterministic under fixed simulation budgets: every episode
//! derives its own seed from the suite seed and episode index, so parallel
//! execution and re-runs reproduce identical reports. Wall-clock timings
//! are kept out of `report.json` (they go to `report.csv`) so the JSON
//! artifact is byte-stable.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{AircraftState, PrimitiveLibrary};
use crate::planner::{plan_episode, EpisodeResult, PlanError, PlannerConfig, PlannerDeps};
use crate::policy::{CostmapPrior, PolicyError, PolicyPrior, ReplayPrior, UniformPrior};
use crate::scenario::{
    default_airspace, default_costmaps, sample_episode, stage_score, Airspace, Episode,
    EpisodeConstraints, ScenarioError, SpecKind,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("bad suite config: {0}")]
    BadConfig(String),
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("policy: {0}")]
    Policy(#[from] PolicyError),
    #[error("planner: {0}")]
    Plan(#[from] PlanError),
    #[error("writing {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("trace: {0}")]
    Trace(#[from] stl_core::TraceError),
}

/// Which prior implementation a suite uses. The costmap state value v(s)
/// is always available to the planner; this only selects P(s, a).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSelection {
    Uniform,
    Costmap {
        #[serde(default = "default_temperature")]
        temperature: f64,
    },
    Replay { path: PathBuf },
}

fn default_temperature() -> f64 {
    0.25
}

impl Default for PriorSelection {
    fn default() -> Self {
        PriorSelection::Costmap { temperature: default_temperature() }
    }
}

fn default_stl_enabled() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Scenario JSON path; the stock synthetic airfield when absent.
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub prior: PriorSelection,
    /// When false the robustness heuristic weight c2 is forced to zero.
    #[serde(default = "default_stl_enabled")]
    pub stl_enabled: bool,
    /// Episodes per start/goal class; classes are {N,S,E,W} x
    /// {takeoff, landing}.
    pub episodes_per_class: usize,
    pub seed: u64,
    /// Where to write report and trajectory artifacts, if anywhere.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes_per_class == 0 {
            return Err(HarnessError::BadConfig("episodes_per_class must be at least 1".into()));
        }
        self.planner.validate()?;
        if let PriorSelection::Costmap { temperature } = self.prior {
            if !(temperature.is_finite() && temperature > 0.0) {
                return Err(HarnessError::BadConfig(format!(
                    "prior temperature must be positive, got {temperature}"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: SuiteConfig = serde_json::from_str(text)
            .map_err(|e| HarnessError::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })?;
        Self::from_json_str(&text)
    }
}

/// One episode's outcome in the report. Wall time is measured but never
/// serialized (and ignored by equality): it is the one nondeterministic
/// field, and `report.json` must be byte-stable across runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub index: usize,
    pub class: String,
    pub start: String,
    pub goal: String,
    pub steps: usize,
    pub success: bool,
    pub stl_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_robustness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_ms: f64,
}

impl PartialEq for EpisodeRow {
    fn eq(&self, other: &Self) -> bool {
        self.index == other.index
            && self.class == other.class
            && self.start == other.start
            && self.goal == other.goal
            && self.steps == other.steps
            && self.success == other.success
            && self.stl_score == other.stl_score
            && self.final_robustness == other.final_robustness
            && self.error == other.error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class: String,
    pub episodes: usize,
    pub success_rate: f64,
    pub stl_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub classes: Vec<ClassStats>,
    pub total_success_rate: f64,
    pub total_stl_score: f64,
    pub rows: Vec<EpisodeRow>,
}

/// Mission-stage score of a flown episode, recomputed from its trajectory.
pub fn stl_score(
    result: &EpisodeResult,
    episode: &Episode,
    airspace: &Airspace,
) -> Result<f64, HarnessError> {
    let trace = &result.trajectory;
    let states = trajectory_states(trace)?;
    Ok(stage_score(airspace, episode, trace.times(), &states)?)
}

fn trajectory_states(trace: &stl_core::Trace) -> Result<Vec<AircraftState>, HarnessError> {
    let get = |name: &str| {
        trace
            .channel(name)
            .ok_or_else(|| HarnessError::BadConfig(format!("trajectory lacks channel {name}")))
    };
    let (xs, ys, zs, chis) = (get("x")?, get("y")?, get("z")?, get("chi")?);
    Ok((0..trace.len())
        .map(|i| AircraftState { x: xs[i], y: ys[i], z: zs[i], chi: chis[i] })
        .collect())
}

/// One round of the splitmix64 mixing function.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

struct ClassSpec {
    direction: &'static str,
    kind: SpecKind,
}

const CLASSES: [ClassSpec; 8] = [
    ClassSpec { direction: "N", kind: SpecKind::Takeoff },
    ClassSpec { direction: "N", kind: SpecKind::Landing },
    ClassSpec { direction: "S", kind: SpecKind::Takeoff },
    ClassSpec { direction: "S", kind: SpecKind::Landing },
    ClassSpec { direction: "E", kind: SpecKind::Takeoff },
    ClassSpec { direction: "E", kind: SpecKind::Landing },
    ClassSpec { direction: "W", kind: SpecKind::Takeoff },
    ClassSpec { direction: "W", kind: SpecKind::Landing },
];

fn class_label(direction: &str, kind: SpecKind) -> String {
    match kind {
        SpecKind::Takeoff => format!("{direction}_takeoff"),
        SpecKind::Landing => format!("{direction}_landing"),
    }
}

/// Everything run_suite produced: the aggregate report plus the raw
/// per-episode results (in row order) for artifact export.
pub struct SuiteOutcome {
    pub report: SuiteReport,
    pub results: Vec<Option<EpisodeResult>>,
}

/// Run every episode of the configured suite (in parallel, each episode
/// fully determined by its derived seed), aggregate per-class and total
/// metrics, and write artifacts when an output directory is set.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome, HarnessError> {
    cfg.validate()?;
    let airspace = match &cfg.scenario {
        Some(path) => Airspace::from_json_path(path)?,
        None => default_airspace(),
    };
    let library = PrimitiveLibrary::default_library();
    let costmaps = default_costmaps(&airspace)?;
    costmaps.validate_for(airspace.goal_set.len())?;
    let prior: Box<dyn PolicyPrior> = match &cfg.prior {
        PriorSelection::Uniform => Box::new(UniformPrior::new(&library)),
        PriorSelection::Costmap { temperature } => {
            Box::new(CostmapPrior::new(costmaps.clone(), &library, *temperature)?)
        }
        PriorSelection::Replay { path } => Box::new(ReplayPrior::from_json_path(path)?),
    };
    let mut planner_cfg = cfg.planner.clone();
    if !cfg.stl_enabled {
        planner_cfg.c2 = 0.0;
    }
    planner_cfg.validate()?;

    let runway_names: Vec<String> = airspace.runways.iter().map(|r| r.name.clone()).collect();
    if runway_names.is_empty() {
        return Err(HarnessError::BadConfig("scenario defines no runways".into()));
    }
    for class in &CLASSES {
        airspace.region(class.direction)?;
    }

    struct Job {
        index: usize,
        class: String,
        direction: &'static str,
        kind: SpecKind,
    }
    let mut jobs = Vec::new();
    for class in &CLASSES {
        for _ in 0..cfg.episodes_per_class {
            jobs.push(Job {
                index: jobs.len(),
                class: class_label(class.direction, class.kind),
                direction: class.direction,
                kind: class.kind,
            });
        }
    }

    let outcomes: Vec<(EpisodeRow, Option<EpisodeResult>)> = jobs
        .par_iter()
        .map(|job| {
            let episode_seed = splitmix64(cfg.seed ^ (job.index as u64).wrapping_mul(0xA076_1D64_78BD_642F));
            let mut rng = ChaCha8Rng::seed_from_u64(episode_seed);
            let mut cfg_ep = planner_cfg.clone();
            cfg_ep.rng_seed = splitmix64(episode_seed);
            let runway = &runway_names[(episode_seed % runway_names.len() as u64) as usize];
            let constraints = match job.kind {
                SpecKind::Takeoff => EpisodeConstraints {
                    start: Some(runway.clone()),
                    goal: Some(job.direction.to_string()),
                },
                SpecKind::Landing => EpisodeConstraints {
                    start: Some(job.direction.to_string()),
                    goal: Some(runway.clone()),
                },
            };
            let started = Instant::now();
            let flown = sample_episode(&airspace, &mut rng, &constraints)
                .map_err(PlanError::from)
                .and_then(|episode| {
                    let deps = PlannerDeps {
                        airspace: &airspace,
                        library: &library,
                        prior: prior.as_ref(),
                        costmaps: &costmaps,
                    };
                    plan_episode(&episode, &cfg_ep, &deps).map(|r| (episode, r))
                });
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            match flown {
                Ok((episode, result)) => (
                    EpisodeRow {
                        index: job.index,
                        class: job.class.clone(),
                        start: episode.start_region,
                        goal: episode.goal_region,
                        steps: result.steps,
                        success: result.reached_goal,
                        stl_score: result.stl_score,
                        final_robustness: Some(result.final_robustness),
                        error: None,
                        wall_ms,
                    },
                    Some(result),
                ),
                Err(err) => (
                    EpisodeRow {
                        index: job.index,
                        class: job.class.clone(),
                        start: constraints.start.clone().unwrap_or_default(),
                        goal: constraints.goal.clone().unwrap_or_default(),
                        steps: 0,
                        success: false,
                        stl_score: 0.0,
                        final_robustness: None,
                        error: Some(err.to_string()),
                        wall_ms,
                    },
                    None,
                ),
            }
        })
        .collect();

    let (rows, results): (Vec<EpisodeRow>, Vec<Option<EpisodeResult>>) =
        outcomes.into_iter().unzip();
    let report = aggregate(rows);
    if let Some(dir) = &cfg.out_dir {
        export_artifacts(&report, &results, dir)?;
    }
    Ok(SuiteOutcome { report, results })
}

/// Fold episode rows into per-class and total means. Totals weight every
/// episode equally, so they are recomputable from the rows alone.
pub fn aggregate(rows: Vec<EpisodeRow>) -> SuiteReport {
    let mut classes: Vec<ClassStats> = Vec::new();
    for row in &rows {
        if !classes.iter().any(|c| c.class == row.class) {
            classes.push(ClassStats {
                class: row.class.clone(),
                episodes: 0,
                success_rate: 0.0,
                stl_score: 0.0,
            });
        }
    }
    for class in &mut classes {
        let members: Vec<&EpisodeRow> = rows.iter().filter(|r| r.class == class.class).collect();
        class.episodes = members.len();
        class.success_rate = members.iter().filter(|r| r.success).count() as f64
            / members.len() as f64;
        class.stl_score =
            members.iter().map(|r| r.stl_score).sum::<f64>() / members.len() as f64;
    }
    let n = rows.len().max(1) as f64;
    let total_success_rate = rows.iter().filter(|r| r.success).count() as f64 / n;
    let total_stl_score = rows.iter().map(|r| r.stl_score).sum::<f64>() / n;
    SuiteReport { classes, total_success_rate, total_stl_score, rows }
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents)
        .map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}

/// Write `report.json` (deterministic), `report.csv` (adds wall time),
/// per-episode `traj_<i>.csv`, and `trees_<i>.csv` where recorded.
pub fn export_artifacts(
    report: &SuiteReport,
    results: &[Option<EpisodeResult>],
    out_dir: &Path,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|source| HarnessError::Write { path: out_dir.to_path_buf(), source })?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(&out_dir.join("report.json"), &(json + "\n"))?;

    let mut csv = String::from(
        "index,class,start,goal,steps,success,stl_score,final_robustness,error,wall_ms\n",
    );
    for row in &report.rows {
        let rho = row.final_robustness.map_or(String::new(), |r| r.to_string());
        let error = row.error.clone().unwrap_or_default().replace(',', ";");
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{:.3}\n",
            row.index,
            row.class,
            row.start,
            row.goal,
            row.steps,
            row.success,
            row.stl_score,
            rho,
            error,
            row.wall_ms,
        ));
    }
    write_file(&out_dir.join("report.csv"), &csv)?;

    for (i, result) in results.iter().enumerate() {
        let Some(result) = result else { continue };
        let path = out_dir.join(format!("traj_{i}.csv"));
        let mut buffer = Vec::new();
        result.trajectory.to_csv(&mut buffer)?;
        let text = String::from_utf8(buffer).expect("csv is utf-8");
        write_file(&path, &text)?;
        if let Some(edges) = &result.tree_edges {
            let mut tree_csv = String::from("step,parent_x,parent_y,child_x,child_y,N\n");
            for e in edges {
                tree_csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    e.step, e.parent_x, e.parent_y, e.child_x, e.child_y, e.visits
                ));
            }
            write_file(&out_dir.join(format!("trees_{i}.csv")), &tree_csv)?;
        }
    }
    Ok(())
}
