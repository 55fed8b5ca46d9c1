//! Command-line front end: plan single episodes, run suites, evaluate
//! formulas on trace files, and bake costmaps from reference traces.
//!
//! Every failure path prints one machine-readable JSON line to stderr
//! (`{"error": "..."}`) and exits nonzero; successes print a JSON summary
//! (or a bare number for `eval-stl`) to stdout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use pattern_planner::dynamics::PrimitiveLibrary;
use pattern_planner::harness::{run_suite, SuiteConfig};
use pattern_planner::planner::{plan_episode, PlanBudget, PlannerConfig, PlannerDeps};
use pattern_planner::policy::{build_costmap_from_traces, CostmapPrior};
use pattern_planner::scenario::{
    default_airspace, default_costmaps, sample_episode, Airspace, EpisodeConstraints,
};
use stl_core::{parse_formula, robustness, Trace};

#[derive(Parser)]
#[command(name = "pattern-planner", version, about = "Traffic-pattern planning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a single episode and write its trajectory.
    Plan(PlanArgs),
    /// Run a full episode suite from a JSON config.
    Suite(SuiteArgs),
    /// Evaluate a formula's robustness on a trace CSV.
    EvalStl(EvalArgs),
    /// Build a normalized visit-count costmap from trace CSVs.
    MakeCostmap(CostmapArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Airspace JSON; the stock synthetic airfield when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Start region name (goal-set member); random when omitted.
    #[arg(long)]
    start: Option<String>,
    /// Goal region name (goal-set member); random when omitted.
    #[arg(long)]
    goal: Option<String>,
    /// "auto" derives the mission spec from the goal; otherwise a path to
    /// a formula file in the STL text syntax.
    #[arg(long, default_value = "auto")]
    spec: String,
    /// Exploration weight on the prior term.
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    /// Weight on the robustness heuristic term.
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    /// Simulations per plan step.
    #[arg(long, conflicts_with = "budget_ms")]
    budget_sims: Option<u32>,
    /// Wall-clock milliseconds per plan step (nondeterministic budgets).
    #[arg(long)]
    budget_ms: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for traj.csv and result.json; stdout-only when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    /// Suite JSON config.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Formula text, e.g. "F[0,30] (alt > 100)".
    #[arg(long)]
    formula: String,
    /// Trace CSV with a `t` column plus one column per signal.
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args)]
struct CostmapArgs {
    /// Directory of trace CSVs (each needs x, y, z columns).
    #[arg(long)]
    traces_dir: PathBuf,
    /// Grid as nine comma-separated numbers:
    /// ox,oy,oz,rx,ry,rz,nx,ny,nz (origin, cell size, cell counts).
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Output costmap JSON path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.command {
        Command::Plan(args) => cmd_plan(args),
        Command::Suite(args) => cmd_suite(args),
        Command::EvalStl(args) => cmd_eval(args),
        Command::MakeCostmap(args) => cmd_make_costmap(args),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("{}", json!({ "error": message }));
            ExitCode::FAILURE
        }
    }
}

fn load_airspace(path: &Option<PathBuf>) -> Result<Airspace, String> {
    match path {
        Some(p) => Airspace::from_json_path(p).map_err(|e| e.to_string()),
        None => Ok(default_airspace()),
    }
}

fn cmd_plan(args: PlanArgs) -> Result<(), String> {
    let airspace = load_airspace(&args.scenario)?;
    let constraints = EpisodeConstraints { start: args.start, goal: args.goal };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut episode =
        sample_episode(&airspace, &mut rng, &constraints).map_err(|e| e.to_string())?;
    if args.spec != "auto" {
        let text = std::fs::read_to_string(&args.spec)
            .map_err(|e| format!("reading {}: {e}", args.spec))?;
        episode.spec = parse_formula(text.trim()).map_err(|e| e.to_string())?;
    }

    let budget = match (args.budget_sims, args.budget_ms) {
        (None, Some(ms)) => PlanBudget::WallClockMs(ms),
        (sims, None) => PlanBudget::Simulations(sims.unwrap_or(2000)),
        (Some(_), Some(_)) => unreachable!("clap rejects conflicting budgets"),
    };
    let cfg = PlannerConfig {
        c1: args.c1,
        c2: args.c2,
        plan_budget: budget,
        rng_seed: args.seed,
        ..PlannerConfig::default()
    };
    let library = PrimitiveLibrary::default_library();
    let costmaps = default_costmaps(&airspace).map_err(|e| e.to_string())?;
    let prior =
        CostmapPrior::new(costmaps.clone(), &library, 0.25).map_err(|e| e.to_string())?;
    let deps = PlannerDeps { airspace: &airspace, library: &library, prior: &prior, costmaps: &costmaps };
    let result = plan_episode(&episode, &cfg, &deps).map_err(|e| e.to_string())?;

    let summary = json!({
        "start": episode.start_region,
        "goal": episode.goal_region,
        "steps": result.steps,
        "success": result.reached_goal,
        "stl_score": result.stl_score,
        "final_robustness": result.final_robustness,
    });
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
        let traj_path = dir.join("traj.csv");
        let mut buffer = Vec::new();
        result.trajectory.to_csv(&mut buffer).map_err(|e| e.to_string())?;
        std::fs::write(&traj_path, buffer)
            .map_err(|e| format!("writing {}: {e}", traj_path.display()))?;
        let result_path = dir.join("result.json");
        std::fs::write(&result_path, format!("{summary:#}\n"))
            .map_err(|e| format!("writing {}: {e}", result_path.display()))?;
    }
    println!("{summary}");
    Ok(())
}

fn cmd_suite(args: SuiteArgs) -> Result<(), String> {
    let cfg = SuiteConfig::from_json_path(&args.config).map_err(|e| e.to_string())?;
    let outcome = run_suite(&cfg).map_err(|e| e.to_string())?;
    let report = &outcome.report;
    println!(
        "{}",
        json!({
            "episodes": report.rows.len(),
            "total_success_rate": report.total_success_rate,
            "total_stl_score": report.total_stl_score,
            "out_dir": cfg.out_dir,
        })
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), String> {
    let formula = parse_formula(&args.formula).map_err(|e| e.to_string())?;
    let trace = Trace::from_csv_path(&args.trace).map_err(|e| e.to_string())?;
    let rho = robustness(&formula, &trace, 0).map_err(|e| e.to_string())?;
    println!("{rho}");
    Ok(())
}

fn parse_grid(text: &str) -> Result<([f64; 3], [f64; 3], [usize; 3]), String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 9 {
        return Err(format!("grid needs 9 comma-separated values, got {}", parts.len()));
    }
    let num = |i: usize| -> Result<f64, String> {
        parts[i].parse::<f64>().map_err(|e| format!("grid field {}: {e}", i + 1))
    };
    let origin = [num(0)?, num(1)?, num(2)?];
    let resolution = [num(3)?, num(4)?, num(5)?];
    let mut dims = [0usize; 3];
    for (k, slot) in dims.iter_mut().enumerate() {
        *slot = parts[6 + k]
            .parse::<usize>()
            .map_err(|e| format!("grid field {}: {e}", 7 + k))?;
    }
    Ok((origin, resolution, dims))
}

fn cmd_make_costmap(args: CostmapArgs) -> Result<(), String> {
    let (origin, resolution, dims) = parse_grid(&args.grid)?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.traces_dir)
        .map_err(|e| format!("reading {}: {e}", args.traces_dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    paths.sort();
    let traces: Vec<Trace> = paths
        .iter()
        .map(|p| {
            Trace::from_csv_path(p).map_err(|e| format!("reading {}: {e}", p.display()))
        })
        .collect::<Result<_, _>>()?;
    let map = build_costmap_from_traces(&traces, origin, resolution, dims)
        .map_err(|e| e.to_string())?;
    write_json(&args.out, &serde_json::to_string_pretty(&map).expect("map serializes"))?;
    println!(
        "{}",
        json!({ "out": args.out, "traces": traces.len(), "cells": dims[0] * dims[1] * dims[2] })
    );
    Ok(())
}

fn write_json(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, format!("{text}\n"))
        .map_err(|e| format!("writing {}: {e}", path.display()))
}
