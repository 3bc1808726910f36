//! Weighted 3-regular MaxCut instances: construction, canonical labeling,
//! exhaustive enumeration, random sampling, weighting and file I/O.

mod canon;
mod enumerate;
mod graph6;
mod sample;
mod weights;

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fmt::sig17;

pub use canon::canonical_permutation;
pub use enumerate::{enumerate_cubic_topologies, MAX_EXHAUSTIVE_N};
pub use graph6::{from_graph6, to_graph6};
pub use sample::sample_cubic_topology;
pub use weights::{assign_weights, assign_weights_with, derive_seed, WEIGHT_MAX};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// An undirected simple graph with non-negative edge weights.
///
/// Edges are stored with `u < v`, sorted lexicographically by `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut out: Vec<Edge> = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a},{b}) out of range for n={n}")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at vertex {a}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!("edge ({a},{b}) has invalid weight {w}")));
            }
            out.push(Edge { u: a.min(b), v: a.max(b), w });
        }
        out.sort_by_key(|e| (e.u, e.v));
        if out.windows(2).any(|p| (p[0].u, p[0].v) == (p[1].u, p[1].v)) {
            return Err(Error::invalid("parallel edges"));
        }
        Ok(Self { n, edges: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.w).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Neighbour lists, each sorted ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.n
    }

    pub fn is_cubic(&self) -> bool {
        self.adjacency().iter().all(|a| a.len() == 3)
    }

    /// Relabels vertices so that vertex `v` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length");
        Self::new(self.n, self.edges.iter().map(|e| (perm[e.u], perm[e.v], e.w)))
            .expect("relabeling a valid graph by a permutation is valid")
    }

    pub fn with_unit_weights(&self) -> Self {
        Self {
            n: self.n,
            edges: self.edges.iter().map(|e| Edge { w: 1.0, ..*e }).collect(),
        }
    }

    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::DimensionMismatch { expected: self.edges.len(), got: weights.len() });
        }
        Self::new(self.n, self.edges.iter().zip(weights).map(|(e, &w)| (e.u, e.v, w)))
    }
}

/// One MaxCut problem: a connected 3-regular weighted graph plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInstance {
    graph: WeightedGraph,
    topology_id: String,
    seed: u64,
}

impl std::ops::Deref for GraphInstance {
    type Target = WeightedGraph;

    fn deref(&self) -> &WeightedGraph {
        &self.graph
    }
}

impl GraphInstance {
    /// Validates the cubic invariants and derives the topology identifier
    /// (graph6 string of the canonical unweighted form).
    pub fn new(graph: WeightedGraph, seed: u64) -> Result<Self> {
        let n = graph.n();
        if n < 4 || n % 2 != 0 {
            return Err(Error::invalid(format!("cubic graphs need even n >= 4, got {n}")));
        }
        if !graph.is_cubic() {
            return Err(Error::invalid("graph is not 3-regular"));
        }
        if !graph.is_connected() {
            return Err(Error::invalid("graph is not connected"));
        }
        if graph.edges().iter().any(|e| e.w <= 0.0) {
            return Err(Error::invalid("edge weights must be positive"));
        }
        let topology = graph.with_unit_weights();
        let topology_id = to_graph6(&topology.relabel(&canonical_permutation(&topology)));
        Ok(Self { graph, topology_id, seed })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn topology_id(&self) -> &str {
        &self.topology_id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Relabels to canonical form. Returns the relabeled instance and the
    /// permutation applied (`perm[old] = new`).
    pub fn canonical_label(&self) -> (GraphInstance, Vec<usize>) {
        let perm = canonical_permutation(&self.graph);
        let graph = self.graph.relabel(&perm);
        (GraphInstance { graph, topology_id: self.topology_id.clone(), seed: self.seed }, perm)
    }

    /// Same topology with new weights (stored edge order) and seed.
    pub fn reweighted(&self, weights: &[f64], seed: u64) -> Result<GraphInstance> {
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("edge weights must be positive and finite"));
        }
        Ok(GraphInstance { graph: self.graph.with_weights(weights)?, topology_id: self.topology_id.clone(), seed })
    }

    /// The same topology with every weight set to 1.
    pub fn strip_weights(&self) -> GraphInstance {
        GraphInstance { graph: self.graph.with_unit_weights(), topology_id: self.topology_id.clone(), seed: self.seed }
    }

    /// Serializes to the instance file format (weights with 17 significant digits).
    pub fn to_json(&self) -> String {
        let mut s = format!(
            "{{\"n\":{},\"seed\":{},\"topology_id\":{},\"edges\":[",
            self.n(),
            self.seed,
            serde_json::to_string(&self.topology_id).expect("string serializes")
        );
        for (i, e) in self.edges().iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "[{},{},{}]", e.u, e.v, sig17(e.w)).unwrap();
        }
        s.push_str("]}");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            seed: u64,
            topology_id: String,
            edges: Vec<(usize, usize, f64)>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        let inst = Self::new(WeightedGraph::new(raw.n, raw.edges)?, raw.seed)?;
        if inst.topology_id != raw.topology_id {
            return Err(Error::parse(format!(
                "topology_id {} does not match the edge list (expected {})",
                raw.topology_id, inst.topology_id
            )));
        }
        Ok(inst)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
