use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use lexplan::baselines::{expanded_graph_search, weighted_sum_search, BaselineError, EgsParams, WeightedSumParams};
use lexplan::bench::{parse_configuration, run_experiment, write_outputs, BenchError, ExperimentConfig};
use lexplan::costfield::{CriterionKind, Scenario, ScenarioError, DEFAULT_TIE_EPS};
use lexplan::geometry::{Configuration, Point2};
use lexplan::lexsearch::{
    brute_force_lex_optimum, extract_path, lexicographic_search, PathResult, QueueDiscipline, SearchError,
    BRUTE_FORCE_MAX_NODES,
};
use lexplan::roadmap::{build_roadmap, insert_endpoint, nearest_node, BuildParams, Connection, Roadmap, RoadmapError};

const POLYLINE_STEP: f64 = 0.25;

#[derive(Parser)]
#[command(name = "lexplan", version, about = "Lexicographic multi-criteria roadmap planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Ls,
    Ws,
    Egs,
}

#[derive(Subcommand)]
enum Command {
    /// Sample and connect a roadmap over a scenario.
    Build {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        seed: u64,
        /// Fixed neighbour count instead of the PRM* default.
        #[arg(long, conflicts_with = "radius")]
        k: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer one start/goal query on a saved roadmap.
    Plan {
        #[arg(long)]
        roadmap: PathBuf,
        #[arg(long, value_parser = parse_config_arg, allow_hyphen_values = true)]
        start: Configuration,
        #[arg(long, value_parser = parse_config_arg, allow_hyphen_values = true)]
        goal: Configuration,
        #[arg(long, value_enum, default_value = "ls")]
        algo: Algo,
        #[arg(long, default_value = "heap")]
        discipline: QueueDiscipline,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        layers: Option<usize>,
        /// Comma-separated hierarchy drawn from the roadmap's criteria.
        #[arg(long, value_delimiter = ',', value_parser = parse_criterion)]
        criteria: Option<Vec<CriterionKind>>,
        /// Use the nearest existing nodes instead of inserting the endpoints.
        #[arg(long)]
        snap: bool,
        #[arg(long, default_value_t = DEFAULT_TIE_EPS)]
        tie_eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment grid and write per-run records as CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write grouped statistics as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        parallel: bool,
    },
    /// Cross-check the lexicographic search against exhaustive enumeration.
    Oracle {
        #[arg(long)]
        roadmap: PathBuf,
        #[arg(long, value_parser = parse_config_arg, allow_hyphen_values = true)]
        start: Configuration,
        #[arg(long, value_parser = parse_config_arg, allow_hyphen_values = true)]
        goal: Configuration,
        #[arg(long, default_value_t = DEFAULT_TIE_EPS)]
        tie_eps: f64,
    },
}

fn parse_config_arg(s: &str) -> Result<Configuration, String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    parse_configuration(&values).ok_or_else(|| "expected x,y or x,y,heading".to_string())
}

fn parse_criterion(s: &str) -> Result<CriterionKind, String> {
    CriterionKind::parse(s).ok_or_else(|| format!("unknown criterion `{s}`"))
}

enum Failure {
    Invalid(String),
    NoPath(String),
    Mismatch(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::NoPath(_) => 3,
            Failure::Mismatch(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::NoPath(m) | Failure::Mismatch(m) | Failure::Other(m) => m,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => Failure::Other(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<RoadmapError> for Failure {
    fn from(e: RoadmapError) -> Self {
        match e {
            RoadmapError::Io(_) => Failure::Other(e.to_string()),
            RoadmapError::Scenario(s) => s.into(),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::NoPath(_) => Failure::NoPath(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<BaselineError> for Failure {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::Search(s) => s.into(),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Io { .. } | BenchError::Csv(_) => Failure::Other(e.to_string()),
            BenchError::Scenario(s) => s.into(),
            BenchError::Roadmap(r) => r.into(),
            BenchError::Search(s) => s.into(),
            BenchError::Baseline(b) => b.into(),
            BenchError::Config { .. } | BenchError::Parse(_) => Failure::Invalid(e.to_string()),
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Other(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Failure::Other(format!("writing {}: {e}", path.display())))
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Attaches start and goal to the roadmap, returning their indices.
fn attach(roadmap: Roadmap, start: Configuration, goal: Configuration, snap: bool) -> Result<(Roadmap, usize, usize), Failure> {
    if snap {
        let s = nearest_node(&roadmap, start)?;
        let g = nearest_node(&roadmap, goal)?;
        return Ok((roadmap, s, g));
    }
    let (roadmap, s) = insert_endpoint(&roadmap, start)?;
    let (roadmap, g) = insert_endpoint(&roadmap, goal)?;
    Ok((roadmap, s, g))
}

fn cmd_build(
    scenario: &Path,
    nodes: usize,
    seed: u64,
    k: Option<usize>,
    radius: Option<f64>,
    out: &Path,
) -> Result<(), Failure> {
    let scenario = Scenario::load(scenario)?;
    let mut params = BuildParams::new(nodes, seed);
    if let Some(r) = radius {
        params.connection = Connection::Radius { r };
    } else if k.is_some() {
        params.connection = Connection::KNearest { k };
    }
    let t = Instant::now();
    let roadmap = build_roadmap(&scenario, &params)?;
    log::info!("built {} nodes, {} edges in {:.1} ms", roadmap.len(), roadmap.edge_count(), ms_since(t));
    roadmap.save(out)?;
    Ok(())
}

fn path_json(p: &PathResult) -> serde_json::Value {
    let polyline: Vec<Point2> = p.polyline(POLYLINE_STEP);
    json!({ "nodes": p.nodes, "polyline": polyline, "cost": p.cost })
}

struct PlanArgs {
    roadmap: PathBuf,
    start: Configuration,
    goal: Configuration,
    algo: Algo,
    discipline: QueueDiscipline,
    alpha: Option<f64>,
    budget: Option<f64>,
    layers: Option<usize>,
    criteria: Option<Vec<CriterionKind>>,
    snap: bool,
    tie_eps: f64,
    out: PathBuf,
}

fn cmd_plan(a: PlanArgs) -> Result<(), Failure> {
    let mut roadmap = Roadmap::load(&a.roadmap)?;
    if let Some(c) = &a.criteria {
        roadmap = roadmap.with_criteria(c)?;
    }
    let t = Instant::now();
    let (roadmap, s, g) = attach(roadmap, a.start, a.goal, a.snap)?;
    let attach_ms = ms_since(t);
    let criteria: Vec<&str> = roadmap.criteria().iter().map(|c| c.name()).collect();
    let t = Instant::now();
    let mut doc = match a.algo {
        Algo::Ls => {
            let tree = lexicographic_search(&roadmap, s, a.discipline, a.tie_eps)?;
            let path = extract_path(&roadmap, &tree, g)?;
            let mut v = path_json(&path);
            v["algo"] = json!("ls");
            v["params"] = json!({ "discipline": a.discipline, "tie_eps": a.tie_eps });
            v
        }
        Algo::Ws => {
            let alpha = a.alpha.ok_or_else(|| Failure::Invalid("--algo ws needs --alpha".into()))?;
            let path = weighted_sum_search(&roadmap, s, g, WeightedSumParams::new(alpha)?)?;
            let mut v = path_json(&path);
            v["algo"] = json!("ws");
            v["params"] = json!({ "alpha": alpha });
            v
        }
        Algo::Egs => {
            let (Some(budget), Some(layers)) = (a.budget, a.layers) else {
                return Err(Failure::Invalid("--algo egs needs --budget and --layers".into()));
            };
            let frontier = expanded_graph_search(&roadmap, s, g, EgsParams::new(budget, layers)?)?;
            let sel = frontier
                .selected()
                .ok_or_else(|| Failure::NoPath(format!("no path within budget {budget}")))?;
            let mut v = path_json(sel.path.as_ref().expect("selected layer is feasible"));
            v["algo"] = json!("egs");
            v["params"] = json!({ "budget": budget, "layers": layers, "selected_layer": sel.layer });
            v["frontier"] = serde_json::to_value(
                frontier
                    .layers
                    .iter()
                    .map(|l| json!({ "layer": l.layer, "bound": l.bound, "cost": l.path.as_ref().map(|p| &p.cost) }))
                    .collect::<Vec<_>>(),
            )
            .expect("plain JSON");
            v
        }
    };
    doc["criteria"] = json!(criteria);
    doc["timings"] = json!({ "attach_ms": attach_ms, "search_ms": ms_since(t) });
    write_json(&a.out, &doc)
}

fn cmd_bench(config: &Path, out: Option<PathBuf>, summary: Option<PathBuf>, parallel: bool) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.parallel |= parallel;
    let csv_path = out
        .or_else(|| cfg.output.records.clone())
        .ok_or_else(|| Failure::Invalid("no output path: pass --out or set output.records".into()))?;
    let summary = summary.or_else(|| cfg.output.summary.clone());
    let result = run_experiment(&cfg)?;
    write_outputs(&result.records, &csv_path, summary.as_deref())?;
    log::info!("wrote {} records to {}", result.records.len(), csv_path.display());
    Ok(())
}

fn cmd_oracle(roadmap: &Path, start: Configuration, goal: Configuration, tie_eps: f64) -> Result<(), Failure> {
    let roadmap = Roadmap::load(roadmap)?;
    let (roadmap, s, g) = attach(roadmap, start, goal, false)?;
    if roadmap.len() > BRUTE_FORCE_MAX_NODES {
        return Err(Failure::Invalid(format!(
            "oracle enumerates paths exhaustively; roadmap has {} nodes with endpoints, limit is {BRUTE_FORCE_MAX_NODES}",
            roadmap.len()
        )));
    }
    let expected = match brute_force_lex_optimum(&roadmap, s, g, tie_eps) {
        Ok(p) => Some(p.cost),
        Err(SearchError::NoPath(_)) => None,
        Err(e) => return Err(e.into()),
    };
    for discipline in [QueueDiscipline::LinearScan, QueueDiscipline::LexHeap] {
        let tree = lexicographic_search(&roadmap, s, discipline, tie_eps)?;
        let got = tree.label(g);
        match (got, &expected) {
            (None, None) => {}
            (Some(l), Some(e)) if l.iter().zip(e.iter()).all(|(a, b)| (a - b).abs() <= 1e-9) => {}
            _ => {
                return Err(Failure::Mismatch(format!(
                    "{discipline} search label {got:?} disagrees with exhaustive optimum {expected:?}"
                )))
            }
        }
    }
    match expected {
        Some(c) => {
            println!("ok: lexicographic optimum {c}");
            Ok(())
        }
        None => Err(Failure::NoPath(format!("no path reaches node {g}; both methods agree"))),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build {
            scenario,
            nodes,
            seed,
            k,
            radius,
            out,
        } => cmd_build(&scenario, nodes, seed, k, radius, &out),
        Command::Plan {
            roadmap,
            start,
            goal,
            algo,
            discipline,
            alpha,
            budget,
            layers,
            criteria,
            snap,
            tie_eps,
            out,
        } => cmd_plan(PlanArgs {
            roadmap,
            start,
            goal,
            algo,
            discipline,
            alpha,
            budget,
            layers,
            criteria,
            snap,
            tie_eps,
            out,
        }),
        Command::Bench {
            config,
            out,
            summary,
            parallel,
        } => cmd_bench(&config, out, summary, parallel),
        Command::Oracle {
            roadmap,
            start,
            goal,
            tie_eps,
        } => cmd_oracle(&roadmap, start, goal, tie_eps),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
