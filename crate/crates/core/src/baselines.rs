//! Comparison planners for bi-criteria (risk, distance) roadmaps: a
//! weighted-sum scalarization and a budget-layered expanded graph search.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexsearch::{CostGraph, PathResult, SearchError};

/// Slack used when mapping accumulated risk onto budget layers, so that a
/// sum landing a rounding error above `ℓ·Δ` still counts as layer `ℓ`.
pub const LAYER_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("baselines need exactly 2 criteria, roadmap has {0}")]
    NotBiCriteria(usize),
    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),
    #[error("budget must be finite and positive, got {0}")]
    BadBudget(f64),
    #[error("layer count must be at least 1")]
    BadLayers,
    #[error(transparent)]
    Search(#[from] SearchError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSumParams {
    pub alpha: f64,
}

impl WeightedSumParams {
    pub fn new(alpha: f64) -> Result<Self, BaselineError> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self { alpha })
        } else {
            Err(BaselineError::BadAlpha(alpha))
        }
    }

    pub fn composite(&self, cost: &[f64]) -> f64 {
        self.alpha * cost[0] + (1.0 - self.alpha) * cost[1]
    }
}

fn check_common<G: CostGraph + ?Sized>(graph: &G, source: usize, goal: usize) -> Result<(), BaselineError> {
    if graph.criteria_count() != 2 {
        return Err(BaselineError::NotBiCriteria(graph.criteria_count()));
    }
    for v in [source, goal] {
        if v >= graph.node_count() {
            return Err(SearchError::InvalidNode(v).into());
        }
    }
    Ok(())
}

#[derive(Debug, PartialEq)]
struct Keyed(f64, usize);

impl Eq for Keyed {}

impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Keyed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Scalar Dijkstra on `α·risk + (1−α)·dist`. The returned cost is the path's
/// true two-component vector, not the composite.
pub fn weighted_sum_search<G: CostGraph + ?Sized>(
    graph: &G,
    source: usize,
    goal: usize,
    params: WeightedSumParams,
) -> Result<PathResult, BaselineError> {
    check_common(graph, source, goal)?;
    WeightedSumParams::new(params.alpha)?;
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse(Keyed(0.0, source)));
    while let Some(Reverse(Keyed(d, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == goal {
            break;
        }
        for slot in 0..graph.out_degree(u) {
            let (v, c) = graph.edge(u, slot);
            let nd = d + params.composite(c);
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = Some((u, slot));
                heap.push(Reverse(Keyed(nd, v)));
            }
        }
    }
    if !done[goal] {
        return Err(SearchError::NoPath(goal).into());
    }
    let mut hops = Vec::new();
    let mut v = goal;
    while let Some((p, slot)) = parent[v] {
        hops.push((p, slot));
        v = p;
    }
    hops.reverse();
    Ok(PathResult::from_hops(graph, source, &hops))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgsParams {
    pub budget_max: f64,
    pub layers: usize,
}

impl EgsParams {
    pub fn new(budget_max: f64, layers: usize) -> Result<Self, BaselineError> {
        if !(budget_max.is_finite() && budget_max > 0.0) {
            return Err(BaselineError::BadBudget(budget_max));
        }
        if layers == 0 {
            return Err(BaselineError::BadLayers);
        }
        Ok(Self { budget_max, layers })
    }

    pub fn delta(&self) -> f64 {
        self.budget_max / self.layers as f64
    }

    /// Budget layer holding an exact accumulated risk `b`; layer 0 is `b = 0`.
    pub fn layer_of(&self, b: f64) -> usize {
        ((b - LAYER_EPS) / self.delta()).ceil().max(0.0) as usize
    }

    pub fn bound(&self, layer: usize) -> f64 {
        layer as f64 * self.delta()
    }
}

/// How the expanded graph is traversed. Both produce identical frontiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EgsVariant {
    /// One Dijkstra pass over all `(node, layer)` states.
    SinglePass,
    /// One restricted search per layer, in increasing layer order.
    LayerByLayer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgsLayer {
    pub layer: usize,
    pub bound: f64,
    /// Distance-shortest path with accumulated risk within `bound`, if any.
    pub path: Option<PathResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgsFrontier {
    pub params: EgsParams,
    pub layers: Vec<EgsLayer>,
}

impl EgsFrontier {
    /// The smallest feasible budget layer.
    pub fn selected(&self) -> Option<&EgsLayer> {
        self.layers.iter().find(|l| l.path.is_some())
    }

    pub fn is_feasible(&self) -> bool {
        self.selected().is_some()
    }
}

/// Runs the layer-by-layer variant.
pub fn expanded_graph_search<G: CostGraph + ?Sized>(
    graph: &G,
    source: usize,
    goal: usize,
    params: EgsParams,
) -> Result<EgsFrontier, BaselineError> {
    expanded_graph_search_with(graph, source, goal, params, EgsVariant::LayerByLayer)
}

pub fn expanded_graph_search_with<G: CostGraph + ?Sized>(
    graph: &G,
    source: usize,
    goal: usize,
    params: EgsParams,
    variant: EgsVariant,
) -> Result<EgsFrontier, BaselineError> {
    check_common(graph, source, goal)?;
    let params = EgsParams::new(params.budget_max, params.layers)?;
    let mut states = Expanded::new(graph, params);
    states.seed(source);
    match variant {
        EgsVariant::SinglePass => states.run(None),
        EgsVariant::LayerByLayer => {
            for layer in 0..=params.layers {
                states.run(Some(layer));
            }
        }
    }
    Ok(states.frontier(source, goal))
}

const NONE: usize = usize::MAX;

/// Label of an expanded state. Ordered by distance, then accumulated risk,
/// then parent state and slot, so the winner never depends on visit order.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Label {
    dist: f64,
    risk: f64,
    parent: usize,
    slot: usize,
}

impl Label {
    fn key_cmp(&self, other: &Label) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.risk.total_cmp(&other.risk))
            .then(self.parent.cmp(&other.parent))
            .then(self.slot.cmp(&other.slot))
    }
}

#[derive(Debug, PartialEq)]
struct Entry {
    dist: f64,
    risk: f64,
    state: usize,
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.risk.total_cmp(&other.risk))
            .then(self.state.cmp(&other.state))
    }
}

/// `(node, layer)` states stored densely at `layer * n + node`.
struct Expanded<'g, G: ?Sized> {
    graph: &'g G,
    params: EgsParams,
    n: usize,
    labels: Vec<Option<Label>>,
    settled: Vec<bool>,
    heap: BinaryHeap<Reverse<Entry>>,
}

impl<'g, G: CostGraph + ?Sized> Expanded<'g, G> {
    fn new(graph: &'g G, params: EgsParams) -> Self {
        let n = graph.node_count();
        let total = n * (params.layers + 1);
        Self {
            graph,
            params,
            n,
            labels: vec![None; total],
            settled: vec![false; total],
            heap: BinaryHeap::new(),
        }
    }

    fn seed(&mut self, source: usize) {
        self.labels[source] = Some(Label {
            dist: 0.0,
            risk: 0.0,
            parent: NONE,
            slot: NONE,
        });
    }

    /// Settles states; with `only = Some(ℓ)` the search is confined to layer
    /// `ℓ`, and edges climbing to higher layers only leave tentative labels.
    fn run(&mut self, only: Option<usize>) {
        let n = self.n;
        let range = match only {
            Some(l) => l * n..(l + 1) * n,
            None => 0..self.labels.len(),
        };
        for s in range {
            if let Some(l) = self.labels[s] {
                self.heap.push(Reverse(Entry {
                    dist: l.dist,
                    risk: l.risk,
                    state: s,
                }));
            }
        }
        while let Some(Reverse(Entry { dist, risk, state })) = self.heap.pop() {
            let current = self.labels[state].expect("queued state has a label");
            if self.settled[state] || current.dist != dist || current.risk != risk {
                continue;
            }
            self.settled[state] = true;
            let u = state % n;
            for slot in 0..self.graph.out_degree(u) {
                let (v, c) = self.graph.edge(u, slot);
                let nb = risk + c[0];
                let layer = self.params.layer_of(nb);
                if layer > self.params.layers {
                    continue;
                }
                let t = layer * n + v;
                let cand = Label {
                    dist: dist + c[1],
                    risk: nb,
                    parent: state,
                    slot,
                };
                let better = match &self.labels[t] {
                    None => true,
                    Some(old) => cand.key_cmp(old) == Ordering::Less,
                };
                if better && !self.settled[t] {
                    self.labels[t] = Some(cand);
                    if only.is_none_or(|l| l == layer) {
                        self.heap.push(Reverse(Entry {
                            dist: cand.dist,
                            risk: cand.risk,
                            state: t,
                        }));
                    }
                }
            }
        }
    }

    fn frontier(&self, source: usize, goal: usize) -> EgsFrontier {
        let n = self.n;
        let mut best: Option<(usize, Label)> = None;
        let mut out = Vec::with_capacity(self.params.layers);
        for layer in 0..=self.params.layers {
            if let Some(l) = self.labels[layer * n + goal] {
                if best.is_none_or(|(_, b)| (l.dist, l.risk) < (b.dist, b.risk)) {
                    best = Some((layer * n + goal, l));
                }
            }
            if layer == 0 {
                continue;
            }
            out.push(EgsLayer {
                layer,
                bound: self.params.bound(layer),
                path: best.map(|(s, _)| self.path_to(source, s)),
            });
        }
        EgsFrontier {
            params: self.params,
            layers: out,
        }
    }

    fn path_to(&self, source: usize, mut state: usize) -> PathResult {
        let mut hops = Vec::new();
        while let Some(l) = self.labels[state] {
            if l.parent == NONE {
                break;
            }
            hops.push((l.parent % self.n, l.slot));
            state = l.parent;
        }
        hops.reverse();
        PathResult::from_hops(self.graph, source, &hops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costfield::{lex_compare, DEFAULT_TIE_EPS};
    use crate::lexsearch::{brute_force_lex_optimum, extract_path, lexicographic_search, CostDigraph, QueueDiscipline};
    use proptest::prelude::*;

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

    fn one_based(p: &PathResult) -> Vec<usize> {
        p.nodes.iter().map(|v| v + 1).collect()
    }

    #[test]
    fn weighted_sum_on_six_node_instance() {
        let g = fig1();
        let p = weighted_sum_search(&g, 0, 5, WeightedSumParams::new(0.5).unwrap()).unwrap();
        assert_eq!(one_based(&p), vec![1, 6]);
        assert_eq!(p.cost.as_slice(), &[9.0, 6.0]);
        let p = weighted_sum_search(&g, 0, 5, WeightedSumParams::new(0.9).unwrap()).unwrap();
        assert_eq!(one_based(&p), vec![1, 2, 4, 5, 6]);
        assert_eq!(p.cost.as_slice(), &[4.0, 14.0]);
    }

    #[test]
    fn weighted_sum_validation() {
        assert_eq!(WeightedSumParams::new(0.0), Err(BaselineError::BadAlpha(0.0)));
        assert!(WeightedSumParams::new(1.5).is_err());
        assert!(WeightedSumParams::new(f64::NAN).is_err());
        let g = CostDigraph::new(2, 3);
        assert_eq!(
            weighted_sum_search(&g, 0, 1, WeightedSumParams { alpha: 0.5 }),
            Err(BaselineError::NotBiCriteria(3))
        );
        let g = CostDigraph::new(2, 2);
        assert_eq!(
            weighted_sum_search(&g, 0, 1, WeightedSumParams { alpha: 0.5 }),
            Err(BaselineError::Search(SearchError::NoPath(1)))
        );
    }

    #[test]
    fn egs_on_six_node_instance() {
        let g = fig1();
        for variant in [EgsVariant::SinglePass, EgsVariant::LayerByLayer] {
            let f = expanded_graph_search_with(&g, 0, 5, EgsParams::new(10.0, 2).unwrap(), variant).unwrap();
            let l1 = f.layers[0].path.as_ref().unwrap();
            assert_eq!(one_based(l1), vec![1, 2, 4, 5, 6]);
            assert_eq!(l1.cost[1], 14.0);
            let l2 = f.layers[1].path.as_ref().unwrap();
            assert_eq!(one_based(l2), vec![1, 6]);
            assert_eq!(l2.cost[1], 6.0);
            assert_eq!(f.selected().unwrap().layer, 1);
        }
    }

    #[test]
    fn egs_degenerate_budgets() {
        let g = fig1();
        let loose = expanded_graph_search(&g, 0, 5, EgsParams::new(100.0, 1).unwrap()).unwrap();
        assert_eq!(one_based(loose.layers[0].path.as_ref().unwrap()), vec![1, 6]);
        let tight = expanded_graph_search(&g, 0, 5, EgsParams::new(3.5, 7).unwrap()).unwrap();
        assert!(!tight.is_feasible());
        assert_eq!(tight.layers.len(), 7);
        assert!(EgsParams::new(0.0, 3).is_err());
        assert!(EgsParams::new(1.0, 0).is_err());
    }

    #[test]
    fn layer_boundaries() {
        let p = EgsParams::new(10.0, 2).unwrap();
        assert_eq!(p.layer_of(0.0), 0);
        assert_eq!(p.layer_of(1e-12), 0);
        assert_eq!(p.layer_of(0.1), 1);
        assert_eq!(p.layer_of(5.0), 1);
        assert_eq!(p.layer_of(5.0 + 1e-12), 1);
        assert_eq!(p.layer_of(5.001), 2);
        assert_eq!(p.layer_of(10.0), 2);
        assert_eq!(p.layer_of(10.5), 3);
    }

    fn arb_graph() -> impl Strategy<Value = CostDigraph> {
        (3usize..10).prop_flat_map(|n| {
            let edge = (0..n, 0..n, 0u8..5, 1u8..6);
            prop::collection::vec(edge, 0..(n * 3)).prop_map(move |edges| {
                let mut g = CostDigraph::new(n, 2);
                for (a, b, r, d) in edges {
                    if a != b {
                        g.add_edge(a, b, [r as f64, d as f64]).unwrap();
                    }
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn egs_variants_agree(g in arb_graph(), budget in 1u8..20, layers in 1usize..12) {
            let goal = g.node_count() - 1;
            let p = EgsParams::new(budget as f64, layers).unwrap();
            let a = expanded_graph_search_with(&g, 0, goal, p, EgsVariant::SinglePass).unwrap();
            let b = expanded_graph_search_with(&g, 0, goal, p, EgsVariant::LayerByLayer).unwrap();
            prop_assert_eq!(&a, &b);
            let mut prev = f64::INFINITY;
            for l in &a.layers {
                if let Some(path) = &l.path {
                    prop_assert!(path.cost[0] <= l.bound + LAYER_EPS);
                    prop_assert!(path.cost[1] <= prev);
                    prev = path.cost[1];
                } else {
                    prop_assert!(prev.is_infinite(), "feasibility must be monotone in the layer");
                }
            }
        }

        #[test]
        fn lexicographic_label_dominates_baselines(g in arb_graph(), alpha in 1u8..=10, budget in 1u8..20, layers in 1usize..12) {
            let goal = g.node_count() - 1;
            let tree = lexicographic_search(&g, 0, QueueDiscipline::LexHeap, DEFAULT_TIE_EPS).unwrap();
            let Some(best) = tree.label(goal) else {
                return Ok(());
            };
            let oracle = brute_force_lex_optimum(&g, 0, goal, DEFAULT_TIE_EPS).unwrap();
            prop_assert_eq!(lex_compare(best, &oracle.cost, DEFAULT_TIE_EPS), Ok(Ordering::Equal));
            let ws = weighted_sum_search(&g, 0, goal, WeightedSumParams::new(alpha as f64 / 10.0).unwrap()).unwrap();
            prop_assert_ne!(lex_compare(best, &ws.cost, DEFAULT_TIE_EPS), Ok(Ordering::Greater));
            let egs = expanded_graph_search(&g, 0, goal, EgsParams::new(budget as f64, layers).unwrap()).unwrap();
            if let Some(sel) = egs.selected() {
                let cost = &sel.path.as_ref().unwrap().cost;
                prop_assert_ne!(lex_compare(best, cost, DEFAULT_TIE_EPS), Ok(Ordering::Greater));
            }
            if alpha == 10 {
                prop_assert!((ws.cost[0] - best[0]).abs() <= DEFAULT_TIE_EPS);
            }
            let _ = extract_path(&g, &tree, goal).unwrap();
        }
    }
}
