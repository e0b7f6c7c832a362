//! Single-source lexicographic shortest paths.
//!
//! Every node carries K cost-to-come labels. The next node to settle is found
//! by narrowing the open set one priority level at a time; an out-edge
//! improves a neighbour when it is strictly better at some level `k` while
//! tied (within `tie_eps`) at every level before it, in which case labels
//! `k..K` and the parent are overwritten.

mod brute;
mod graph;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::costfield::CostVector;
use crate::geometry::{EdgeGeometry, Point2};

pub use brute::{brute_force_lex_optimum, BRUTE_FORCE_MAX_NODES};
pub use graph::{CostDigraph, CostGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("node {0} is not in the graph")]
    InvalidNode(usize),
    #[error("edge {from}->{to} has a negative or non-finite cost component")]
    NegativeCost { from: usize, to: usize },
    #[error("expected {expected} cost components, got {got}")]
    CriteriaMismatch { expected: usize, got: usize },
    #[error("no path reaches node {0}")]
    NoPath(usize),
    #[error("brute-force enumeration refuses graphs over {max} nodes (got {nodes})")]
    TooLarge { nodes: usize, max: usize },
    #[error("tie tolerance must be finite and non-negative")]
    BadTolerance,
}

/// How the open set is scanned for the next node to settle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueueDiscipline {
    /// Level-by-level narrowing over the whole open set, O(K|V|²).
    LinearScan,
    /// Binary heap keyed by the full label, with lazy deletion.
    LexHeap,
}

impl fmt::Display for QueueDiscipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueueDiscipline::LinearScan => "linear",
            QueueDiscipline::LexHeap => "heap",
        })
    }
}

impl FromStr for QueueDiscipline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" | "linear-scan" => Ok(QueueDiscipline::LinearScan),
            "heap" | "lex-heap" => Ok(QueueDiscipline::LexHeap),
            other => Err(format!("unknown queue discipline `{other}`")),
        }
    }
}

/// Counters gathered during one search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub settled: usize,
    pub relaxations: usize,
    pub label_updates: usize,
    /// Label updates that hit an already-settled node. Always zero for
    /// admissible costs.
    pub settled_updates: usize,
    pub stale_pops: usize,
}

/// Labels and parent links produced by one search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchTree {
    criteria: usize,
    source: usize,
    tie_eps: f64,
    labels: Vec<f64>,
    reached: Vec<bool>,
    parent: Vec<Option<(usize, usize)>>,
    settled: Vec<bool>,
    stats: SearchStats,
}

impl SearchTree {
    fn new(n: usize, criteria: usize, source: usize, tie_eps: f64) -> Self {
        let mut tree = Self {
            criteria,
            source,
            tie_eps,
            labels: vec![0.0; n * criteria],
            reached: vec![false; n],
            parent: vec![None; n],
            settled: vec![false; n],
            stats: SearchStats::default(),
        };
        tree.reached[source] = true;
        tree
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn node_count(&self) -> usize {
        self.reached.len()
    }

    pub fn criteria_count(&self) -> usize {
        self.criteria
    }

    pub fn tie_eps(&self) -> f64 {
        self.tie_eps
    }

    /// Cost-to-come of `node`, or `None` if it was never reached.
    pub fn label(&self, node: usize) -> Option<&[f64]> {
        self.reached[node].then(|| self.slot(node))
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node].map(|(p, _)| p)
    }

    pub fn is_settled(&self, node: usize) -> bool {
        self.settled[node]
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    fn slot(&self, node: usize) -> &[f64] {
        &self.labels[node * self.criteria..(node + 1) * self.criteria]
    }

    /// Relaxes every out-edge of `from`. Returns the nodes whose labels changed.
    fn relax_from<G: CostGraph + ?Sized>(&mut self, graph: &G, from: usize, changed: &mut Vec<usize>) {
        let k_total = self.criteria;
        for slot in 0..graph.out_degree(from) {
            let (to, cost) = graph.edge(from, slot);
            self.stats.relaxations += 1;
            let first_update = if !self.reached[to] {
                Some(0)
            } else {
                let mut decision = None;
                for (k, &c) in cost.iter().enumerate() {
                    let via = self.labels[from * k_total + k] + c;
                    let current = self.labels[to * k_total + k];
                    if current > via + self.tie_eps {
                        decision = Some(k);
                        break;
                    } else if (current - via).abs() <= self.tie_eps {
                        continue;
                    } else {
                        break;
                    }
                }
                decision
            };
            if let Some(k0) = first_update {
                for (k, &c) in cost.iter().enumerate().skip(k0) {
                    self.labels[to * k_total + k] = self.labels[from * k_total + k] + c;
                }
                self.reached[to] = true;
                self.parent[to] = Some((from, slot));
                self.stats.label_updates += 1;
                if self.settled[to] {
                    self.stats.settled_updates += 1;
                }
                changed.push(to);
            }
        }
    }
}

fn check_inputs<G: CostGraph + ?Sized>(graph: &G, source: usize, tie_eps: f64) -> Result<(), SearchError> {
    if source >= graph.node_count() {
        return Err(SearchError::InvalidNode(source));
    }
    if !(tie_eps.is_finite() && tie_eps >= 0.0) {
        return Err(SearchError::BadTolerance);
    }
    Ok(())
}

/// Lexicographic single-source search from `source`.
pub fn lexicographic_search<G: CostGraph + ?Sized>(
    graph: &G,
    source: usize,
    discipline: QueueDiscipline,
    tie_eps: f64,
) -> Result<SearchTree, SearchError> {
    check_inputs(graph, source, tie_eps)?;
    let tree = SearchTree::new(graph.node_count(), graph.criteria_count(), source, tie_eps);
    Ok(match discipline {
        QueueDiscipline::LinearScan => linear_scan(graph, tree),
        QueueDiscipline::LexHeap => lex_heap(graph, tree),
    })
}

fn linear_scan<G: CostGraph + ?Sized>(graph: &G, mut tree: SearchTree) -> SearchTree {
    let k_total = tree.criteria;
    let eps = tree.tie_eps;
    let mut open: Vec<usize> = (0..graph.node_count()).collect();
    let mut candidates: Vec<usize> = Vec::with_capacity(open.len());
    let mut changed = Vec::new();
    while !open.is_empty() {
        // Unreached nodes have infinite labels; once only those remain the
        // loop cannot change anything.
        candidates.clear();
        candidates.extend(open.iter().copied().filter(|&v| tree.reached[v]));
        if candidates.is_empty() {
            break;
        }
        for k in 0..k_total {
            if candidates.len() == 1 {
                break;
            }
            let min = candidates
                .iter()
                .map(|&v| tree.labels[v * k_total + k])
                .fold(f64::INFINITY, f64::min);
            candidates.retain(|&v| tree.labels[v * k_total + k] <= min + eps);
        }
        let chosen = *candidates.iter().min().expect("non-empty candidate set");
        let pos = open.iter().position(|&v| v == chosen).expect("chosen node is open");
        open.swap_remove(pos);
        tree.settled[chosen] = true;
        tree.stats.settled += 1;
        changed.clear();
        tree.relax_from(graph, chosen, &mut changed);
    }
    tree
}

type HeapKey = SmallVec<[f64; 4]>;

#[derive(Debug)]
struct HeapEntry {
    key: HeapKey,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.key.iter().zip(&other.key) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.node.cmp(&other.node)
    }
}

fn lex_heap<G: CostGraph + ?Sized>(graph: &G, mut tree: SearchTree) -> SearchTree {
    let mut heap: BinaryHeap<Reverse<HeapEntry>> = BinaryHeap::new();
    let mut changed = Vec::new();
    heap.push(Reverse(HeapEntry {
        key: SmallVec::from_slice(tree.slot(tree.source)),
        node: tree.source,
    }));
    while let Some(Reverse(HeapEntry { key, node })) = heap.pop() {
        if tree.settled[node] || key.as_slice() != tree.slot(node) {
            tree.stats.stale_pops += 1;
            continue;
        }
        tree.settled[node] = true;
        tree.stats.settled += 1;
        changed.clear();
        tree.relax_from(graph, node, &mut changed);
        for &v in &changed {
            if !tree.settled[v] {
                heap.push(Reverse(HeapEntry {
                    key: SmallVec::from_slice(tree.slot(v)),
                    node: v,
                }));
            }
        }
    }
    tree
}

/// A source-to-goal path with its accumulated cost vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub nodes: Vec<usize>,
    /// Per-edge geometry; empty for graphs without geometry.
    pub edges: Vec<EdgeGeometry>,
    pub cost: CostVector,
}

impl PathResult {
    /// Sums edge costs along `hops` (each hop is `(node, out-edge slot)`).
    pub(crate) fn from_hops<G: CostGraph + ?Sized>(graph: &G, start: usize, hops: &[(usize, usize)]) -> Self {
        let mut nodes = vec![start];
        let mut edges = Vec::new();
        let mut cost = CostVector::zeros(graph.criteria_count());
        for &(from, slot) in hops {
            let (to, c) = graph.edge(from, slot);
            cost += &CostVector::from(c.to_vec());
            nodes.push(to);
            if let Some(g) = graph.edge_geometry(from, slot) {
                edges.push(g.clone());
            }
        }
        Self { nodes, edges, cost }
    }

    /// Points along the traversed curves at spacing at most `step`.
    pub fn polyline(&self, step: f64) -> Vec<Point2> {
        let mut pts: Vec<Point2> = Vec::new();
        for g in &self.edges {
            let seg = g.partition_points(step);
            let skip = usize::from(!pts.is_empty());
            pts.extend(seg.into_iter().skip(skip));
        }
        pts
    }
}

/// Walks parent links back from `goal`.
pub fn extract_path<G: CostGraph + ?Sized>(
    graph: &G,
    tree: &SearchTree,
    goal: usize,
) -> Result<PathResult, SearchError> {
    if goal >= tree.node_count() {
        return Err(SearchError::InvalidNode(goal));
    }
    if !tree.reached[goal] {
        return Err(SearchError::NoPath(goal));
    }
    let mut hops = Vec::new();
    let mut v = goal;
    while v != tree.source {
        let (p, slot) = tree.parent[v].expect("reached node has a parent chain");
        hops.push((p, slot));
        v = p;
        assert!(hops.len() <= tree.node_count(), "parent links form a cycle");
    }
    hops.reverse();
    Ok(PathResult::from_hops(graph, tree.source, &hops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costfield::{lex_compare, DEFAULT_TIE_EPS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const DISCIPLINES: [QueueDiscipline; 2] = [QueueDiscipline::LinearScan, QueueDiscipline::LexHeap];

    /// Nodes 1..6 of the six-node instance map to indices 0..5.
    fn fig1() -> CostDigraph {
        let mut g = CostDigraph::new(6, 2);
        for (a, b, risk, dist) in [
            (1, 2, 2.0, 4.0),
            (1, 6, 9.0, 6.0),
            (5, 6, 2.0, 3.0),
            (2, 3, 0.0, 5.0),
            (3, 5, 0.0, 5.0),
            (2, 4, 0.0, 3.5),
            (4, 5, 0.0, 3.5),
        ] {
            g.add_undirected(a - 1, b - 1, [risk, dist]).unwrap();
        }
        g
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, k: usize, zero_frac: f64) -> CostDigraph {
        let mut g = CostDigraph::new(n, k);
        for a in 0..n {
            for b in 0..n {
                if a != b && rng.random_bool(0.35) {
                    let cost: Vec<f64> = (0..k)
                        .map(|lvl| {
                            if lvl + 1 < k && rng.random_bool(zero_frac) {
                                0.0
                            } else {
                                // coarse values make exact ties common
                                rng.random_range(1..=6) as f64 * 0.5
                            }
                        })
                        .collect();
                    g.add_edge(a, b, cost).unwrap();
                }
            }
        }
        g
    }

    /// Textbook scalar Dijkstra, used as an oracle for K = 1.
    fn dijkstra(g: &CostDigraph, source: usize) -> Vec<Option<f64>> {
        let n = g.node_count();
        let mut dist: Vec<Option<f64>> = vec![None; n];
        let mut done = vec![false; n];
        dist[source] = Some(0.0);
        loop {
            let next = (0..n)
                .filter(|&v| !done[v] && dist[v].is_some())
                .min_by(|&a, &b| dist[a].unwrap().total_cmp(&dist[b].unwrap()));
            let Some(u) = next else { break };
            done[u] = true;
            for slot in 0..g.out_degree(u) {
                let (v, c) = g.edge(u, slot);
                let nd = dist[u].unwrap() + c[0];
                if dist[v].is_none_or(|d| nd < d) {
                    dist[v] = Some(nd);
                }
            }
        }
        dist
    }

    #[test]
    fn single_node_graph() {
        let g = CostDigraph::new(1, 3);
        for d in DISCIPLINES {
            let t = lexicographic_search(&g, 0, d, DEFAULT_TIE_EPS).unwrap();
            assert_eq!(t.label(0).unwrap(), &[0.0, 0.0, 0.0]);
            assert_eq!(t.parent(0), None);
            let p = extract_path(&g, &t, 0).unwrap();
            assert_eq!(p.nodes, vec![0]);
            assert_eq!(p.cost.as_slice(), &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn six_node_instance() {
        let g = fig1();
        for d in DISCIPLINES {
            let t = lexicographic_search(&g, 0, d, DEFAULT_TIE_EPS).unwrap();
            assert_eq!(t.label(5).unwrap(), &[4.0, 14.0]);
            let p = extract_path(&g, &t, 5).unwrap();
            let ids: Vec<usize> = p.nodes.iter().map(|v| v + 1).collect();
            assert_eq!(ids, vec![1, 2, 4, 5, 6]);
            assert_eq!(p.cost.as_slice(), &[4.0, 14.0]);
            assert_eq!(t.stats().settled_updates, 0);
        }
    }

    #[test]
    fn unreachable_goal_is_no_path() {
        let mut g = CostDigraph::new(3, 2);
        g.add_edge(0, 1, [0.0, 1.0]).unwrap();
        for d in DISCIPLINES {
            let t = lexicographic_search(&g, 0, d, DEFAULT_TIE_EPS).unwrap();
            assert_eq!(t.label(2), None);
            assert_eq!(extract_path(&g, &t, 2), Err(SearchError::NoPath(2)));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = fig1();
        assert_eq!(
            lexicographic_search(&g, 9, QueueDiscipline::LexHeap, 1e-9).unwrap_err(),
            SearchError::InvalidNode(9)
        );
        assert_eq!(
            lexicographic_search(&g, 0, QueueDiscipline::LexHeap, f64::NAN).unwrap_err(),
            SearchError::BadTolerance
        );
        let mut h = CostDigraph::new(2, 2);
        assert_eq!(
            h.add_edge(0, 1, [-1.0, 1.0]),
            Err(SearchError::NegativeCost { from: 0, to: 1 })
        );
    }

    #[test]
    fn single_criterion_matches_dijkstra() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.random_range(2..25);
            let g = random_graph(&mut rng, n, 1, 0.0);
            let oracle = dijkstra(&g, 0);
            for d in DISCIPLINES {
                let t = lexicographic_search(&g, 0, d, DEFAULT_TIE_EPS).unwrap();
                for (v, &o) in oracle.iter().enumerate() {
                    match (t.label(v), o) {
                        (Some(l), Some(o)) => assert!((l[0] - o).abs() <= 1e-9),
                        (None, None) => {}
                        other => panic!("reachability differs at {v}: {other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn disciplines_agree_and_labels_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let n = rng.random_range(2..30);
            let k = rng.random_range(1..=4);
            let g = random_graph(&mut rng, n, k, 0.4);
            let a = lexicographic_search(&g, 0, QueueDiscipline::LinearScan, DEFAULT_TIE_EPS).unwrap();
            let b = lexicographic_search(&g, 0, QueueDiscipline::LexHeap, DEFAULT_TIE_EPS).unwrap();
            for v in 0..n {
                match (a.label(v), b.label(v)) {
                    (Some(x), Some(y)) => {
                        assert_eq!(lex_compare(x, y, DEFAULT_TIE_EPS), Ok(Ordering::Equal));
                        for (p, q) in x.iter().zip(y) {
                            assert!((p - q).abs() <= DEFAULT_TIE_EPS);
                        }
                    }
                    (None, None) => {}
                    other => panic!("reachability differs: {other:?}"),
                }
                for t in [&a, &b] {
                    if let Some(p) = t.parent(v) {
                        let (lp, lv) = (t.label(p).unwrap(), t.label(v).unwrap());
                        assert!(lp.iter().zip(lv).all(|(x, y)| x <= y));
                    }
                    if t.label(v).is_some() {
                        let path = extract_path(&g, t, v).unwrap();
                        for (x, y) in path.cost.iter().zip(t.label(v).unwrap()) {
                            assert!((x - y).abs() <= 1e-9);
                        }
                    }
                }
            }
            assert_eq!(a.stats().settled_updates, 0);
            assert_eq!(b.stats().settled_updates, 0);
        }
    }

    #[test]
    fn primary_label_ignores_lower_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let n = rng.random_range(2..20);
            let g = random_graph(&mut rng, n, 3, 0.4);
            let mut primary = CostDigraph::new(n, 1);
            for u in 0..n {
                for slot in 0..g.out_degree(u) {
                    let (v, c) = g.edge(u, slot);
                    primary.add_edge(u, v, [c[0]]).unwrap();
                }
            }
            let full = lexicographic_search(&g, 0, QueueDiscipline::LexHeap, DEFAULT_TIE_EPS).unwrap();
            let single = lexicographic_search(&primary, 0, QueueDiscipline::LexHeap, DEFAULT_TIE_EPS).unwrap();
            for v in 0..n {
                match (full.label(v), single.label(v)) {
                    (Some(a), Some(b)) => assert!((a[0] - b[0]).abs() <= DEFAULT_TIE_EPS),
                    (None, None) => {}
                    other => panic!("{other:?}"),
                }
            }
        }
    }

    #[test]
    fn equal_labels_keep_first_parent() {
        // Two routes to node 3 with identical cost vectors.
        let mut g = CostDigraph::new(4, 2);
        g.add_edge(0, 1, [0.0, 1.0]).unwrap();
        g.add_edge(0, 2, [0.0, 1.0]).unwrap();
        g.add_edge(1, 3, [0.0, 1.0]).unwrap();
        g.add_edge(2, 3, [0.0, 1.0]).unwrap();
        for d in DISCIPLINES {
            let t = lexicographic_search(&g, 0, d, DEFAULT_TIE_EPS).unwrap();
            // node 1 settles first (lowest index among ties) and claims node 3
            assert_eq!(t.parent(3), Some(1));
        }
    }

    #[test]
    fn discipline_parsing() {
        assert_eq!("linear".parse(), Ok(QueueDiscipline::LinearScan));
        assert_eq!("heap".parse(), Ok(QueueDiscipline::LexHeap));
        assert!("fib".parse::<QueueDiscipline>().is_err());
    }
}
