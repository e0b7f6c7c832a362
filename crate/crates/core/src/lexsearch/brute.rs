use std::cmp::Ordering;

use crate::costfield::lex_compare_unchecked;

use super::{CostGraph, PathResult, SearchError};

/// Exhaustive enumeration is exponential; refuse anything bigger.
pub const BRUTE_FORCE_MAX_NODES: usize = 14;

/// Lexicographic optimum over all simple `source -> goal` paths, by DFS.
///
/// Costs are non-negative, so no walk with a repeated node can beat the
/// simple path obtained by cutting out the cycle. Among paths whose costs tie
/// within `tie_eps` the one with fewer edges wins, then the smaller node
/// sequence.
pub fn brute_force_lex_optimum<G: CostGraph + ?Sized>(
    graph: &G,
    source: usize,
    goal: usize,
    tie_eps: f64,
) -> Result<PathResult, SearchError> {
    let n = graph.node_count();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(SearchError::TooLarge {
            nodes: n,
            max: BRUTE_FORCE_MAX_NODES,
        });
    }
    for v in [source, goal] {
        if v >= n {
            return Err(SearchError::InvalidNode(v));
        }
    }
    if !(tie_eps.is_finite() && tie_eps >= 0.0) {
        return Err(SearchError::BadTolerance);
    }

    let mut search = Dfs {
        graph,
        goal,
        eps: tie_eps,
        on_path: vec![false; n],
        nodes: vec![source],
        hops: Vec::new(),
        acc: vec![vec![0.0; graph.criteria_count()]],
        best: None,
    };
    search.on_path[source] = true;
    search.walk(source);

    let (hops, _, _) = search.best.ok_or(SearchError::NoPath(goal))?;
    Ok(PathResult::from_hops(graph, source, &hops))
}

type Candidate = (Vec<(usize, usize)>, Vec<usize>, Vec<f64>);

struct Dfs<'g, G: ?Sized> {
    graph: &'g G,
    goal: usize,
    eps: f64,
    on_path: Vec<bool>,
    nodes: Vec<usize>,
    hops: Vec<(usize, usize)>,
    acc: Vec<Vec<f64>>,
    best: Option<Candidate>,
}

impl<G: CostGraph + ?Sized> Dfs<'_, G> {
    fn walk(&mut self, u: usize) {
        if u == self.goal {
            self.offer();
            return;
        }
        for slot in 0..self.graph.out_degree(u) {
            let (v, c) = self.graph.edge(u, slot);
            if self.on_path[v] {
                continue;
            }
            let next: Vec<f64> = self.acc.last().unwrap().iter().zip(c).map(|(a, b)| a + b).collect();
            self.on_path[v] = true;
            self.nodes.push(v);
            self.hops.push((u, slot));
            self.acc.push(next);
            self.walk(v);
            self.acc.pop();
            self.hops.pop();
            self.nodes.pop();
            self.on_path[v] = false;
        }
    }

    fn offer(&mut self) {
        let cost = self.acc.last().unwrap();
        let better = match &self.best {
            None => true,
            Some((hops, nodes, best)) => match lex_compare_unchecked(cost, best, self.eps) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => (self.hops.len(), &self.nodes) < (hops.len(), nodes),
            },
        };
        if better {
            self.best = Some((self.hops.clone(), self.nodes.clone(), cost.clone()));
        }
    }
}
