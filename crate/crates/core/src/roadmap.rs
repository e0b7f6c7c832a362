//! PRM*-style roadmap construction over a [`Scenario`].
//!
//! Nodes are drawn uniformly over the workspace bounds by rejection sampling.
//! Node `i` draws from its own ChaCha stream (`seed`, stream `i`), so a node's
//! sample never depends on how many draws another node needed. Each node is
//! joined to its k nearest neighbours by collision-checked, cost-annotated
//! edges in both directions.

use std::collections::BTreeSet;
use std::f64::consts::{E, TAU};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::costfield::{evaluate_edge, CostVector, CriterionKind, RobotModel, Scenario, ScenarioError};
use crate::geometry::{dubins_shortest_path, Configuration, EdgeGeometry, GEOM_EPS};

#[derive(Debug, Error)]
pub enum RoadmapError {
    #[error("sampling gave up after {0} consecutive rejections; the scenario is over-constrained")]
    OverConstrained(usize),
    #[error("roadmap is empty")]
    Empty,
    #[error("configuration ({x}, {y}) is outside the bounds or in collision")]
    InCollision { x: f64, y: f64 },
    #[error("configuration heading does not match the robot model")]
    HeadingMismatch,
    #[error("invalid build parameter: {0}")]
    InvalidParams(String),
    #[error("invalid roadmap document: {0}")]
    Invalid(String),
    #[error("roadmap has no criterion `{0}`")]
    MissingCriterion(CriterionKind),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("roadmap I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed roadmap JSON: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Neighbourhood rule used when connecting nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Connection {
    /// `k` nearest neighbours; `None` means `⌈2e·ln(n+2)⌉`.
    KNearest { k: Option<usize> },
    Radius { r: f64 },
}

impl Default for Connection {
    fn default() -> Self {
        Connection::KNearest { k: None }
    }
}

/// PRM* neighbour count for a roadmap of `n` nodes.
pub fn prm_star_k(n: usize) -> usize {
    (2.0 * E * ((n + 2) as f64).ln()).ceil() as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    pub nodes: usize,
    pub seed: u64,
    #[serde(default)]
    pub connection: Connection,
    /// Resolution for curve collision checks, meters.
    #[serde(default = "default_collision_step")]
    pub step: f64,
}

fn default_collision_step() -> f64 {
    0.1
}

impl BuildParams {
    pub fn new(nodes: usize, seed: u64) -> Self {
        Self {
            nodes,
            seed,
            connection: Connection::default(),
            step: default_collision_step(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadmapMeta {
    pub seed: u64,
    pub sampled_nodes: usize,
    /// Connection rule with `k` resolved.
    pub connection: Connection,
    pub step: f64,
    pub scenario: Scenario,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadmapEdge {
    pub target: usize,
    pub geometry: EdgeGeometry,
    pub cost: CostVector,
}

/// Directed roadmap with per-edge geometry and cost vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Roadmap {
    nodes: Vec<Configuration>,
    adjacency: Vec<Vec<RoadmapEdge>>,
    meta: RoadmapMeta,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    from: usize,
    to: usize,
    geometry: EdgeGeometry,
    cost: CostVector,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoadmapDocument {
    meta: RoadmapMeta,
    nodes: Vec<Configuration>,
    edges: Vec<EdgeRecord>,
}

fn sample_node(scenario: &Scenario, seed: u64, index: usize, budget: usize) -> Result<Configuration, RoadmapError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let b = scenario.bounds();
    let dubins = matches!(scenario.robot_model(), RobotModel::Dubins { .. });
    for _ in 0..budget {
        let x = rng.random_range(b.xmin..=b.xmax);
        let y = rng.random_range(b.ymin..=b.ymax);
        let q = if dubins {
            Configuration::oriented(x, y, rng.random_range(0.0..TAU))
        } else {
            Configuration::planar(x, y)
        };
        if scenario.is_free(q.position) {
            return Ok(q);
        }
    }
    Err(RoadmapError::OverConstrained(budget))
}

/// Indices of the `k` nearest nodes to `q` (by position), closest first,
/// equal distances ordered by index. `skip` excludes one index.
fn k_nearest(nodes: &[Configuration], q: Configuration, k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut cand: Vec<(f64, usize)> = nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, n)| {
            let dx = n.position.x - q.position.x;
            let dy = n.position.y - q.position.y;
            (dx * dx + dy * dy, i)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k, cmp);
        cand.truncate(k);
    }
    cand.sort_by(cmp);
    cand.into_iter().map(|(_, i)| i).collect()
}

fn within_radius(nodes: &[Configuration], q: Configuration, r: f64, skip: Option<usize>) -> Vec<usize> {
    nodes
        .iter()
        .enumerate()
        .filter(|(i, n)| Some(*i) != skip && n.position.distance(q.position) <= r)
        .map(|(i, _)| i)
        .collect()
}

/// Connects `a` to `b` if the curve is collision-free and stays in bounds.
fn connect(scenario: &Scenario, a: Configuration, b: Configuration, step: f64) -> Option<(EdgeGeometry, CostVector)> {
    let geometry = match scenario.robot_model() {
        RobotModel::Holonomic2d => EdgeGeometry::straight(a, b),
        RobotModel::Dubins { rho } => dubins_shortest_path(a, b, rho),
    };
    if geometry.length() <= GEOM_EPS || geometry.collides(scenario.obstacles(), step) {
        return None;
    }
    if geometry.word().is_some() {
        let bounds = scenario.bounds();
        if !geometry.partition_points(step).into_iter().all(|p| bounds.contains(p)) {
            return None;
        }
    }
    let cost = evaluate_edge(&geometry, scenario);
    Some((geometry, cost))
}

type CostedEdge = (EdgeGeometry, CostVector);

/// Both directed edges for an unordered pair. Straight segments share one
/// collision verdict so the holonomic edge set stays symmetric.
fn connect_pair(
    scenario: &Scenario,
    a: Configuration,
    b: Configuration,
    step: f64,
) -> (Option<CostedEdge>, Option<CostedEdge>) {
    match scenario.robot_model() {
        RobotModel::Holonomic2d => match connect(scenario, a, b, step) {
            Some(fwd) => {
                let back = EdgeGeometry::straight(b, a);
                let cost = evaluate_edge(&back, scenario);
                (Some(fwd), Some((back, cost)))
            }
            None => (None, None),
        },
        RobotModel::Dubins { .. } => (connect(scenario, a, b, step), connect(scenario, b, a, step)),
    }
}

fn validate_params(params: &BuildParams) -> Result<(), RoadmapError> {
    if !(params.step.is_finite() && params.step > 0.0) {
        return Err(RoadmapError::InvalidParams(format!("step must be positive, got {}", params.step)));
    }
    if let Connection::Radius { r } = params.connection {
        if !(r.is_finite() && r > 0.0) {
            return Err(RoadmapError::InvalidParams(format!("radius must be positive, got {r}")));
        }
    }
    Ok(())
}

/// Samples and connects a roadmap. Identical inputs give an identical roadmap.
pub fn build_roadmap(scenario: &Scenario, params: &BuildParams) -> Result<Roadmap, RoadmapError> {
    validate_params(params)?;
    let n = params.nodes;
    let budget = 1000 * n.max(1);
    let nodes = (0..n)
        .into_par_iter()
        .map(|i| sample_node(scenario, params.seed, i, budget))
        .collect::<Result<Vec<_>, _>>()?;

    let connection = match params.connection {
        Connection::KNearest { k } => Connection::KNearest {
            k: Some(k.unwrap_or_else(|| prm_star_k(n))),
        },
        radius => radius,
    };
    let neighbours: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| match connection {
            Connection::KNearest { k } => k_nearest(&nodes, nodes[i], k.unwrap_or(0), Some(i)),
            Connection::Radius { r } => within_radius(&nodes, nodes[i], r, Some(i)),
        })
        .collect();
    let pairs: Vec<(usize, usize)> = neighbours
        .iter()
        .enumerate()
        .flat_map(|(i, ns)| ns.iter().map(move |&j| (i.min(j), i.max(j))))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let connected: Vec<_> = pairs
        .par_iter()
        .map(|&(i, j)| connect_pair(scenario, nodes[i], nodes[j], params.step))
        .collect();

    let mut adjacency: Vec<Vec<RoadmapEdge>> = vec![Vec::new(); n];
    for (&(i, j), (fwd, back)) in pairs.iter().zip(connected) {
        if let Some((geometry, cost)) = fwd {
            adjacency[i].push(RoadmapEdge { target: j, geometry, cost });
        }
        if let Some((geometry, cost)) = back {
            adjacency[j].push(RoadmapEdge { target: i, geometry, cost });
        }
    }
    for list in &mut adjacency {
        list.sort_by_key(|e| e.target);
    }
    Ok(Roadmap {
        nodes,
        adjacency,
        meta: RoadmapMeta {
            seed: params.seed,
            sampled_nodes: n,
            connection,
            step: params.step,
            scenario: scenario.clone(),
        },
    })
}

/// Index of the node closest to `q`; ties go to the lowest index.
pub fn nearest_node(roadmap: &Roadmap, q: Configuration) -> Result<usize, RoadmapError> {
    let mut best: Option<(f64, usize)> = None;
    for (i, n) in roadmap.nodes.iter().enumerate() {
        let d = n.position.distance(q.position);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i).ok_or(RoadmapError::Empty)
}

/// Adds `q` as a new node wired to its neighbours in both directions.
pub fn insert_endpoint(roadmap: &Roadmap, q: Configuration) -> Result<(Roadmap, usize), RoadmapError> {
    let scenario = &roadmap.meta.scenario;
    let dubins = matches!(scenario.robot_model(), RobotModel::Dubins { .. });
    if dubins != q.heading.is_some() {
        return Err(RoadmapError::HeadingMismatch);
    }
    if !q.position.is_finite() || !scenario.is_free(q.position) {
        return Err(RoadmapError::InCollision {
            x: q.position.x,
            y: q.position.y,
        });
    }
    let q = match q.heading {
        Some(h) => Configuration::oriented(q.position.x, q.position.y, h),
        None => q,
    };
    let mut out = roadmap.clone();
    let neighbours = match roadmap.meta.connection {
        Connection::KNearest { k } => k_nearest(&roadmap.nodes, q, k.unwrap_or(0), None),
        Connection::Radius { r } => within_radius(&roadmap.nodes, q, r, None),
    };
    let new_index = out.nodes.len();
    let wired: Vec<_> = neighbours
        .par_iter()
        .map(|&j| connect_pair(scenario, q, roadmap.nodes[j], roadmap.meta.step))
        .collect();
    out.nodes.push(q);
    out.adjacency.push(Vec::new());
    for (&j, (fwd, back)) in neighbours.iter().zip(wired) {
        if let Some((geometry, cost)) = fwd {
            out.adjacency[new_index].push(RoadmapEdge { target: j, geometry, cost });
        }
        if let Some((geometry, cost)) = back {
            out.adjacency[j].push(RoadmapEdge {
                target: new_index,
                geometry,
                cost,
            });
        }
    }
    out.adjacency[new_index].sort_by_key(|e| e.target);
    Ok((out, new_index))
}

impl Roadmap {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Configuration] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Configuration {
        self.nodes[i]
    }

    pub fn out_edges(&self, i: usize) -> &[RoadmapEdge] {
        &self.adjacency[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, &RoadmapEdge)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |e| (i, e)))
    }

    pub fn meta(&self) -> &RoadmapMeta {
        &self.meta
    }

    pub fn scenario(&self) -> &Scenario {
        &self.meta.scenario
    }

    pub fn criteria(&self) -> &[CriterionKind] {
        self.meta.scenario.criteria()
    }

    /// The same graph re-costed under a different hierarchy drawn from the
    /// current criteria. Costs are copied component by component.
    pub fn with_criteria(&self, criteria: &[CriterionKind]) -> Result<Roadmap, RoadmapError> {
        let current = self.criteria();
        let indices = criteria
            .iter()
            .map(|c| {
                current
                    .iter()
                    .position(|x| x == c)
                    .ok_or(RoadmapError::MissingCriterion(*c))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let scenario = self.meta.scenario.with_criteria(criteria.to_vec())?;
        let adjacency = self
            .adjacency
            .iter()
            .map(|list| {
                list.iter()
                    .map(|e| RoadmapEdge {
                        target: e.target,
                        geometry: e.geometry.clone(),
                        cost: e.cost.select(&indices),
                    })
                    .collect()
            })
            .collect();
        Ok(Roadmap {
            nodes: self.nodes.clone(),
            adjacency,
            meta: RoadmapMeta {
                scenario,
                ..self.meta.clone()
            },
        })
    }

    pub fn to_json(&self) -> String {
        let doc = RoadmapDocument {
            meta: self.meta.clone(),
            nodes: self.nodes.clone(),
            edges: self
                .edges()
                .map(|(from, e)| EdgeRecord {
                    from,
                    to: e.target,
                    geometry: e.geometry.clone(),
                    cost: e.cost.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("roadmap serializes")
    }

    pub fn from_json(text: &str) -> Result<Roadmap, RoadmapError> {
        let doc: RoadmapDocument = serde_json::from_str(text)?;
        let n = doc.nodes.len();
        let k = doc.meta.scenario.criteria().len();
        let mut adjacency: Vec<Vec<RoadmapEdge>> = vec![Vec::new(); n];
        for (idx, e) in doc.edges.into_iter().enumerate() {
            if e.from >= n || e.to >= n {
                return Err(RoadmapError::Invalid(format!("edge {idx} references a missing node")));
            }
            if e.cost.len() != k {
                return Err(RoadmapError::Invalid(format!(
                    "edge {idx} has {} cost components, expected {k}",
                    e.cost.len()
                )));
            }
            if !e.cost.is_admissible() {
                return Err(RoadmapError::Invalid(format!(
                    "edge {idx} has a negative or non-finite cost component"
                )));
            }
            let g = &e.geometry;
            if (g.length() - g.analytic_length()).abs() > 1e-9 * g.length().max(1.0) {
                return Err(RoadmapError::Invalid(format!("edge {idx} length disagrees with its shape")));
            }
            adjacency[e.from].push(RoadmapEdge {
                target: e.to,
                geometry: e.geometry,
                cost: e.cost,
            });
        }
        for list in &mut adjacency {
            list.sort_by_key(|e| e.target);
        }
        Ok(Roadmap {
            nodes: doc.nodes,
            adjacency,
            meta: doc.meta,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RoadmapError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Roadmap, RoadmapError> {
        Roadmap::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the serialized roadmap, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}
