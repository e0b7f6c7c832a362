use crate::costfield::CostVector;
use crate::geometry::EdgeGeometry;
use crate::roadmap::Roadmap;

use super::SearchError;

/// Directed graph whose edges carry K-component cost vectors.
///
/// Implementors guarantee every cost component is finite and non-negative.
pub trait CostGraph {
    fn node_count(&self) -> usize;
    fn criteria_count(&self) -> usize;
    fn out_degree(&self, node: usize) -> usize;
    /// Target and cost of the `slot`-th out-edge of `node`.
    fn edge(&self, node: usize, slot: usize) -> (usize, &[f64]);
    fn edge_geometry(&self, _node: usize, _slot: usize) -> Option<&EdgeGeometry> {
        None
    }
}

impl CostGraph for Roadmap {
    fn node_count(&self) -> usize {
        self.len()
    }

    fn criteria_count(&self) -> usize {
        self.criteria().len()
    }

    fn out_degree(&self, node: usize) -> usize {
        self.out_edges(node).len()
    }

    fn edge(&self, node: usize, slot: usize) -> (usize, &[f64]) {
        let e = &self.out_edges(node)[slot];
        (e.target, e.cost.as_slice())
    }

    fn edge_geometry(&self, node: usize, slot: usize) -> Option<&EdgeGeometry> {
        Some(&self.out_edges(node)[slot].geometry)
    }
}

/// A plain adjacency-list graph without geometry, for hand-built instances.
#[derive(Clone, Debug, PartialEq)]
pub struct CostDigraph {
    criteria: usize,
    adjacency: Vec<Vec<(usize, CostVector)>>,
}

impl CostDigraph {
    pub fn new(nodes: usize, criteria: usize) -> Self {
        Self {
            criteria,
            adjacency: vec![Vec::new(); nodes],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cost: impl Into<CostVector>) -> Result<(), SearchError> {
        let cost = cost.into();
        let n = self.adjacency.len();
        if from >= n || to >= n {
            return Err(SearchError::InvalidNode(from.max(to)));
        }
        if cost.len() != self.criteria {
            return Err(SearchError::CriteriaMismatch {
                expected: self.criteria,
                got: cost.len(),
            });
        }
        if !cost.is_admissible() {
            return Err(SearchError::NegativeCost { from, to });
        }
        self.adjacency[from].push((to, cost));
        Ok(())
    }

    /// Adds the edge in both directions with the same cost.
    pub fn add_undirected(&mut self, a: usize, b: usize, cost: impl Into<CostVector>) -> Result<(), SearchError> {
        let cost = cost.into();
        self.add_edge(a, b, cost.clone())?;
        self.add_edge(b, a, cost)
    }
}

impl CostGraph for CostDigraph {
    fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    fn criteria_count(&self) -> usize {
        self.criteria
    }

    fn out_degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    fn edge(&self, node: usize, slot: usize) -> (usize, &[f64]) {
        let (t, c) = &self.adjacency[node][slot];
        (*t, c.as_slice())
    }
}
