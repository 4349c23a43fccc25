//! Shortest-path commodity blocks: demand times the convex hull of s-t path
//! incidence vectors of a directed graph. Edges map to resource indices; the
//! oracle is an exact shortest-path computation.

use crate::error::{Error, Result};
use crate::model::AllocationVector;

use super::BlockOracle;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathEdge {
    pub from: usize,
    pub to: usize,
    /// Resource metered by this edge; `None` means the edge is free.
    pub resource: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct PathBlock {
    edges: Vec<PathEdge>,
    source: usize,
    sink: usize,
    demand: f64,
    num_resources: usize,
    num_vertices: usize,
    /// Outgoing edge indices per vertex, ascending, so tie-breaking by edge
    /// index is deterministic.
    adjacency: Vec<Vec<usize>>,
}

impl PathBlock {
    pub fn new(
        edges: Vec<PathEdge>,
        source: usize,
        sink: usize,
        demand: f64,
        num_resources: usize,
    ) -> Result<Self> {
        if !(demand > 0.0) || !demand.is_finite() {
            return Err(Error::Input(format!("demand {demand} must be positive")));
        }
        let mut num_vertices = source.max(sink) + 1;
        for (i, e) in edges.iter().enumerate() {
            num_vertices = num_vertices.max(e.from + 1).max(e.to + 1);
            if let Some(r) = e.resource {
                if r >= num_resources {
                    return Err(Error::Input(format!(
                        "edge {i}: resource {r} out of range (m = {num_resources})"
                    )));
                }
            }
        }
        let mut adjacency = vec![Vec::new(); num_vertices];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.from].push(i);
        }
        let block = PathBlock {
            edges,
            source,
            sink,
            demand,
            num_resources,
            num_vertices,
            adjacency,
        };
        if !block.sink_reachable() {
            return Err(Error::Infeasible(format!(
                "sink {sink} not reachable from source {source}"
            )));
        }
        Ok(block)
    }

    pub fn demand(&self) -> f64 {
        self.demand
    }

    fn sink_reachable(&self) -> bool {
        let mut seen = vec![false; self.num_vertices];
        let mut queue = std::collections::VecDeque::from([self.source]);
        seen[self.source] = true;
        while let Some(u) = queue.pop_front() {
            if u == self.sink {
                return true;
            }
            for &e in &self.adjacency[u] {
                let v = self.edges[e].to;
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        false
    }

    fn edge_weight(&self, e: usize, prices: &[f64]) -> f64 {
        self.edges[e].resource.map_or(0.0, |r| prices[r])
    }

    /// Dijkstra keyed by (distance, edge-index sequence): among equal-length
    /// paths the lexicographically smallest edge-index sequence wins. The key
    /// grows strictly along every edge (a sequence precedes its extensions),
    /// so greedy extraction stays correct even with zero-weight edges.
    /// Graphs are desk-scale; linear scans are fine.
    pub fn shortest_path(&self, prices: &[f64]) -> (Vec<usize>, f64) {
        debug_assert!(prices.iter().all(|&p| p >= 0.0));
        let mut best: Vec<Option<(f64, Vec<usize>)>> = vec![None; self.num_vertices];
        let mut done = vec![false; self.num_vertices];
        best[self.source] = Some((0.0, Vec::new()));
        loop {
            let mut u = None;
            for v in 0..self.num_vertices {
                if done[v] {
                    continue;
                }
                if let Some(key) = &best[v] {
                    let better = match &u {
                        None => true,
                        Some((_, ukey)) => key_less(key, ukey),
                    };
                    if better {
                        u = Some((v, key.clone()));
                    }
                }
            }
            let Some((v, (dist, seq))) = u else { break };
            done[v] = true;
            if v == self.sink {
                return (seq, dist);
            }
            for &e in &self.adjacency[v] {
                let to = self.edges[e].to;
                if done[to] {
                    continue;
                }
                let mut cand_seq = seq.clone();
                cand_seq.push(e);
                let cand = (dist + self.edge_weight(e, prices), cand_seq);
                let improves = match &best[to] {
                    None => true,
                    Some(cur) => key_less(&cand, cur),
                };
                if improves {
                    best[to] = Some(cand);
                }
            }
        }
        unreachable!("sink reachability is checked at construction")
    }
}

fn key_less(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> bool {
    match a.0.partial_cmp(&b.0).expect("distances are finite") {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.1 < b.1,
    }
}

impl BlockOracle for PathBlock {
    fn evaluate(&self, prices: &[f64]) -> (AllocationVector, f64) {
        let (seq, dist) = self.shortest_path(prices);
        let mut alloc = vec![0.0; self.num_resources];
        for e in seq {
            if let Some(r) = self.edges[e].resource {
                alloc[r] += self.demand;
            }
        }
        (AllocationVector::new(alloc), self.demand * dist)
    }

    fn exact_opt(&self, prices: &[f64]) -> Option<f64> {
        Some(self.demand * self.shortest_path(prices).1)
    }

    fn width_hint(&self) -> Option<f64> {
        // a shortest path is simple, but several edges may meter the same
        // resource; bound by the worst multiplicity
        let mut multiplicity = vec![0_u32; self.num_resources];
        for e in &self.edges {
            if let Some(r) = e.resource {
                multiplicity[r] += 1;
            }
        }
        let worst = multiplicity.iter().copied().max().unwrap_or(0).max(1);
        Some(self.demand * worst as f64)
    }

    fn num_resources(&self) -> usize {
        self.num_resources
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

/// Spec-level entry point: validates the prices and runs the oracle.
pub fn shortest_path_evaluate(block: &PathBlock, prices: &[f64]) -> Result<(AllocationVector, f64)> {
    if prices.len() != block.num_resources() {
        return Err(Error::Input(format!(
            "price vector length {} != {}",
            prices.len(),
            block.num_resources()
        )));
    }
    for (r, &p) in prices.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::Input(format!("price {r} is {p}; must be >= 0")));
        }
    }
    Ok(block.evaluate(prices))
}
