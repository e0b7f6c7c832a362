//! Experiment harness: builds one roadmap per (node count, trial), runs every
//! configured planner on it, and records timings and path costs.

mod record;
mod summary;

use std::borrow::Cow;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{
    expanded_graph_search_with, weighted_sum_search, BaselineError, EgsParams, EgsVariant, WeightedSumParams,
};
use crate::costfield::{CriterionKind, Scenario, ScenarioError, DEFAULT_TIE_EPS};
use crate::geometry::Configuration;
use crate::lexsearch::{extract_path, lexicographic_search, PathResult, QueueDiscipline, SearchError};
use crate::roadmap::{build_roadmap, insert_endpoint, BuildParams, Connection, Roadmap, RoadmapError};

pub use record::{read_records, write_records, TrialRecord, FIXED_COLUMNS};
pub use summary::{nearest_rank, summarize, SummaryRow};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment config: `{field}` {reason}")]
    Config { field: String, reason: String },
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed experiment config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("records CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Roadmap(#[from] RoadmapError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Csv(e.to_string())
    }
}

fn config_err(field: impl Into<String>, reason: impl Into<String>) -> BenchError {
    BenchError::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

/// A planner run on every roadmap of the experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    LsLinear,
    LsHeap,
    /// One run per α; with `sweep`, also the run whose own composite cost is
    /// smallest, timed as the sum over the grid.
    Ws {
        alpha: Vec<f64>,
        #[serde(default)]
        sweep: bool,
    },
    /// One run per layer count. The budget is either absolute or a multiple
    /// of the lexicographic optimum's primary cost on the same roadmap.
    Egs {
        #[serde(default)]
        budget_max: Option<f64>,
        #[serde(default)]
        budget_factor: Option<f64>,
        layers: Vec<usize>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub records: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Scenario file; relative paths resolve against the config's directory.
    pub scenario: PathBuf,
    pub nodes: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub seed_base: u64,
    pub algorithms: Vec<AlgorithmSpec>,
    /// Hierarchies to compare; empty means the scenario's own.
    #[serde(default)]
    pub criteria: Vec<Vec<CriterionKind>>,
    /// `[x, y]` or `[x, y, θ]`.
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    #[serde(default)]
    pub connection: Option<Connection>,
    #[serde(default)]
    pub tie_eps: Option<f64>,
    #[serde(default)]
    pub parallel: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

pub fn parse_configuration(v: &[f64]) -> Option<Configuration> {
    if !v.iter().all(|x| x.is_finite()) {
        return None;
    }
    match *v {
        [x, y] => Some(Configuration::planar(x, y)),
        [x, y, theta] => Some(Configuration::oriented(x, y, theta)),
        _ => None,
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config and resolves its relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.scenario);
        if let Some(p) = cfg.output.records.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.output.summary.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    fn tie_eps(&self) -> f64 {
        self.tie_eps.unwrap_or(DEFAULT_TIE_EPS)
    }

    /// Checks everything that does not need the scenario file.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.trials == 0 {
            return Err(config_err("trials", "must be at least 1"));
        }
        if self.nodes.is_empty() {
            return Err(config_err("nodes", "must list at least one node count"));
        }
        if self.nodes.contains(&0) || self.nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("nodes", "must be positive and strictly ascending"));
        }
        if self.algorithms.is_empty() {
            return Err(config_err("algorithms", "must not be empty"));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            let field = format!("algorithms[{i}]");
            match a {
                AlgorithmSpec::LsLinear | AlgorithmSpec::LsHeap => {}
                AlgorithmSpec::Ws { alpha, .. } => {
                    if alpha.is_empty() {
                        return Err(config_err(format!("{field}.alpha"), "must not be empty"));
                    }
                    for &a in alpha {
                        WeightedSumParams::new(a)
                            .map_err(|_| config_err(format!("{field}.alpha"), format!("{a} is outside (0, 1]")))?;
                    }
                }
                AlgorithmSpec::Egs {
                    budget_max,
                    budget_factor,
                    layers,
                } => {
                    let budget = match (budget_max, budget_factor) {
                        (Some(b), None) | (None, Some(b)) => *b,
                        _ => {
                            return Err(config_err(
                                field,
                                "needs exactly one of `budget_max` and `budget_factor`",
                            ))
                        }
                    };
                    if !(budget.is_finite() && budget > 0.0) {
                        return Err(config_err(format!("{field}.budget"), "must be finite and positive"));
                    }
                    if layers.is_empty() || layers.contains(&0) {
                        return Err(config_err(format!("{field}.layers"), "must list positive layer counts"));
                    }
                }
            }
        }
        for (name, v) in [("start", &self.start), ("goal", &self.goal)] {
            if parse_configuration(v).is_none() {
                return Err(config_err(name, "must be [x, y] or [x, y, heading] with finite values"));
            }
        }
        if !(self.tie_eps().is_finite() && self.tie_eps() >= 0.0) {
            return Err(config_err("tie_eps", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Records of one experiment, with the fingerprint of the roadmap each
/// record was computed on (same index).
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub roadmap_hashes: Vec<String>,
}

struct Hierarchy {
    criteria: Vec<CriterionKind>,
    label: String,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs the whole grid. Deterministic except for the timing columns.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, BenchError> {
    cfg.validate()?;
    let scenario = Scenario::load(&cfg.scenario)?;
    let hierarchies: Vec<Hierarchy> = if cfg.criteria.is_empty() {
        vec![scenario.criteria().to_vec()]
    } else {
        cfg.criteria.clone()
    }
    .into_iter()
    .enumerate()
    .map(|(i, criteria)| {
        for c in &criteria {
            if !scenario.criteria().contains(c) {
                return Err(config_err(format!("criteria[{i}]"), format!("`{c}` is not a scenario criterion")));
            }
        }
        scenario
            .with_criteria(criteria.clone())
            .map_err(|e| config_err(format!("criteria[{i}]"), e.to_string()))?;
        let label = criteria.iter().map(|c| c.name()).collect::<Vec<_>>().join("-");
        Ok(Hierarchy { criteria, label })
    })
    .collect::<Result<_, _>>()?;
    let needs_pair = cfg
        .algorithms
        .iter()
        .any(|a| matches!(a, AlgorithmSpec::Ws { .. } | AlgorithmSpec::Egs { .. }));
    if needs_pair && hierarchies.iter().all(|h| h.criteria.len() != 2) {
        return Err(config_err("criteria", "ws and egs need a two-criterion hierarchy"));
    }
    let start = parse_configuration(&cfg.start).expect("validated");
    let goal = parse_configuration(&cfg.goal).expect("validated");
    for (name, q) in [("start", start), ("goal", goal)] {
        let dubins = matches!(scenario.robot_model(), crate::costfield::RobotModel::Dubins { .. });
        if dubins != q.heading.is_some() {
            return Err(config_err(name, "heading must be given exactly for Dubins robots"));
        }
        if !scenario.is_free(q.position) {
            return Err(config_err(name, "lies outside the bounds or inside an obstacle"));
        }
    }

    let cells: Vec<(usize, usize)> = cfg
        .nodes
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let run = |&(nodes, trial): &(usize, usize)| run_cell(cfg, &scenario, &hierarchies, start, goal, nodes, trial);
    let per_cell: Vec<Result<(Vec<TrialRecord>, String), BenchError>> = if cfg.parallel {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    };
    let mut out = ExperimentOutput {
        records: Vec::new(),
        roadmap_hashes: Vec::new(),
    };
    for cell in per_cell {
        let (records, hash) = cell?;
        out.roadmap_hashes.extend(std::iter::repeat_n(hash, records.len()));
        out.records.extend(records);
    }
    Ok(out)
}

fn run_cell(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    hierarchies: &[Hierarchy],
    start: Configuration,
    goal: Configuration,
    nodes: usize,
    trial: usize,
) -> Result<(Vec<TrialRecord>, String), BenchError> {
    let seed = cfg.seed_base ^ trial as u64;
    let mut params = BuildParams::new(nodes, seed);
    if let Some(c) = cfg.connection {
        params.connection = c;
    }
    let t = Instant::now();
    let roadmap = build_roadmap(scenario, &params)?;
    let (roadmap, s) = insert_endpoint(&roadmap, start)?;
    let (roadmap, g) = insert_endpoint(&roadmap, goal)?;
    let build_ms = ms_since(t);
    let hash = roadmap.fingerprint();
    log::info!("nodes={nodes} trial={trial} seed={seed}: {} edges, {build_ms:.1} ms", roadmap.edge_count());

    let mut records = Vec::new();
    let tie_eps = cfg.tie_eps();
    for h in hierarchies {
        let rm: Cow<Roadmap> = if h.criteria == roadmap.criteria() {
            Cow::Borrowed(&roadmap)
        } else {
            Cow::Owned(roadmap.with_criteria(&h.criteria)?)
        };
        let base = |algo: &str, params: String| TrialRecord {
            trial,
            seed,
            nodes,
            algo: algo.to_string(),
            params,
            build_ms,
            search_ms: 0.0,
            feasible: false,
            cost: Vec::new(),
        };
        let finish = |mut r: TrialRecord, ms: f64, path: Option<&PathResult>| {
            r.search_ms = ms;
            if let Some(p) = path {
                r.feasible = true;
                r.cost = p.cost.to_vec();
            }
            r
        };
        let crit = format!("criteria={}", h.label);
        for spec in &cfg.algorithms {
            match spec {
                AlgorithmSpec::LsLinear | AlgorithmSpec::LsHeap => {
                    let (algo, disc) = match spec {
                        AlgorithmSpec::LsLinear => ("ls-linear", QueueDiscipline::LinearScan),
                        _ => ("ls-heap", QueueDiscipline::LexHeap),
                    };
                    let t = Instant::now();
                    let path = ls_path(&rm, s, g, disc, tie_eps)?;
                    records.push(finish(base(algo, crit.clone()), ms_since(t), path.as_ref()));
                }
                AlgorithmSpec::Ws { alpha, sweep } => {
                    if h.criteria.len() != 2 {
                        log::warn!("skipping ws on {}-criterion hierarchy {}", h.criteria.len(), h.label);
                        continue;
                    }
                    let mut total_ms = 0.0;
                    let mut best: Option<(f64, f64, PathResult)> = None;
                    for &a in alpha {
                        let p = WeightedSumParams::new(a)?;
                        let t = Instant::now();
                        let path = no_path_as_none(weighted_sum_search(&*rm, s, g, p))?;
                        let ms = ms_since(t);
                        total_ms += ms;
                        if let Some(path) = &path {
                            let c = p.composite(&path.cost);
                            if best.as_ref().is_none_or(|(bc, _, _)| c < *bc) {
                                best = Some((c, a, path.clone()));
                            }
                        }
                        records.push(finish(base("ws", format!("{crit};alpha={a}")), ms, path.as_ref()));
                    }
                    if *sweep {
                        let picked = best.as_ref().map(|(_, a, _)| format!(";alpha={a}")).unwrap_or_default();
                        let r = base("ws-sweep", format!("{crit}{picked}"));
                        records.push(finish(r, total_ms, best.as_ref().map(|(_, _, p)| p)));
                    }
                }
                AlgorithmSpec::Egs {
                    budget_max,
                    budget_factor,
                    layers,
                } => {
                    if h.criteria.len() != 2 {
                        log::warn!("skipping egs on {}-criterion hierarchy {}", h.criteria.len(), h.label);
                        continue;
                    }
                    let budget = match (budget_max, budget_factor) {
                        (Some(b), _) => Some(*b),
                        (None, Some(f)) => ls_path(&rm, s, g, QueueDiscipline::LexHeap, tie_eps)?
                            .map(|p| f * p.cost[0])
                            .filter(|b| *b > 0.0),
                        (None, None) => unreachable!("validated"),
                    };
                    for &l in layers {
                        let Some(budget) = budget else {
                            // no lexicographic path, or zero optimal risk with a relative budget
                            records.push(base("egs", format!("{crit};budget=none;layers={l}")));
                            continue;
                        };
                        let p = EgsParams::new(budget, l)?;
                        let t = Instant::now();
                        let frontier = expanded_graph_search_with(&*rm, s, g, p, EgsVariant::LayerByLayer)?;
                        let ms = ms_since(t);
                        let path = frontier.selected().and_then(|sel| sel.path.as_ref());
                        records.push(finish(base("egs", format!("{crit};budget={budget};layers={l}")), ms, path));
                    }
                }
            }
        }
    }
    Ok((records, hash))
}

fn ls_path(
    rm: &Roadmap,
    s: usize,
    g: usize,
    discipline: QueueDiscipline,
    tie_eps: f64,
) -> Result<Option<PathResult>, BenchError> {
    let tree = lexicographic_search(rm, s, discipline, tie_eps)?;
    match extract_path(rm, &tree, g) {
        Ok(p) => Ok(Some(p)),
        Err(SearchError::NoPath(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn no_path_as_none(r: Result<PathResult, BaselineError>) -> Result<Option<PathResult>, BenchError> {
    match r {
        Ok(p) => Ok(Some(p)),
        Err(BaselineError::Search(SearchError::NoPath(_))) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Writes records (and optionally a JSON summary) to the given paths.
pub fn write_outputs(records: &[TrialRecord], csv_path: &Path, summary_path: Option<&Path>) -> Result<(), BenchError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BenchError::Io { path, source }
    };
    let file = fs::File::create(csv_path).map_err(io(csv_path))?;
    write_records(std::io::BufWriter::new(file), records)?;
    if let Some(p) = summary_path {
        let text = serde_json::to_string_pretty(&summarize(records))?;
        fs::write(p, text).map_err(io(p))?;
    }
    Ok(())
}
