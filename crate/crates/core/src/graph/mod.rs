//! Immutable directed weighted graphs in dual compressed-adjacency form.
//!
//! A [`RefGraph`] stores every node's out-neighbours and in-neighbours as
//! sorted slices, so edge lookups in either direction are binary searches.
//! Parallel records for the same ordered pair are merged by summing weights
//! at construction; self-loops never reach the graph.

mod cache;
mod registry;
mod subnet;
mod traverse;

pub use cache::{read_graph_cache, write_graph_cache, CacheError, CACHE_VERSION};
pub use registry::{assign_states, AssignConfig, AssignmentReport, CountMode, PhysicianRegistry};
pub use subnet::{extract_subnetwork, induced_subgraph, Subnetwork, SubnetworkKind};
pub use traverse::{approx_diameter, weak_components, DEFAULT_DIAMETER_SAMPLES};

use crate::ingest::{Npi, RawReferralRecord};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

/// Dense node index into the owning graph.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("out of memory after {nodes} nodes and {edges} edges")]
    OutOfMemory { nodes: usize, edges: usize },
    #[error("graph is empty")]
    Empty,
    #[error("unknown state code {0}")]
    UnknownState(String),
    #[error("edge endpoint {0} out of range")]
    BadEndpoint(u32),
    #[error("self-loop at node {0}")]
    SelfLoop(u32),
    #[error("zero edge weight")]
    ZeroWeight,
}

/// Undirected simple shadow of a directed graph: sorted, deduplicated
/// neighbour lists with both directions merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Undirected {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Undirected {
    #[inline]
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }
}

/// Directed weighted graph with out- and in-adjacency.
#[derive(Debug)]
pub struct RefGraph {
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    out_weights: Vec<u64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
    in_weights: Vec<u64>,
    undirected: OnceLock<Undirected>,
}

impl Clone for RefGraph {
    fn clone(&self) -> Self {
        RefGraph {
            out_offsets: self.out_offsets.clone(),
            out_targets: self.out_targets.clone(),
            out_weights: self.out_weights.clone(),
            in_offsets: self.in_offsets.clone(),
            in_sources: self.in_sources.clone(),
            in_weights: self.in_weights.clone(),
            undirected: OnceLock::new(),
        }
    }
}

impl PartialEq for RefGraph {
    fn eq(&self, other: &Self) -> bool {
        self.out_offsets == other.out_offsets
            && self.out_targets == other.out_targets
            && self.out_weights == other.out_weights
            && self.in_offsets == other.in_offsets
            && self.in_sources == other.in_sources
            && self.in_weights == other.in_weights
    }
}

impl Eq for RefGraph {}

impl RefGraph {
    pub fn empty(node_count: usize) -> RefGraph {
        RefGraph::from_edges(node_count, Vec::new()).unwrap()
    }

    /// Builds a graph from `(from, to, weight)` triples. Repeated ordered pairs
    /// are merged by summing weights.
    pub fn from_edges(node_count: usize, mut edges: Vec<(u32, u32, u64)>) -> Result<RefGraph, GraphError> {
        for &(u, v, w) in &edges {
            if u as usize >= node_count {
                return Err(GraphError::BadEndpoint(u));
            }
            if v as usize >= node_count {
                return Err(GraphError::BadEndpoint(v));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if w == 0 {
                return Err(GraphError::ZeroWeight);
            }
        }
        edges.sort_unstable_by_key(|&(u, v, _)| (u, v));
        // merge parallel records in place
        let mut write = 0usize;
        for read in 0..edges.len() {
            if write > 0 && edges[write - 1].0 == edges[read].0 && edges[write - 1].1 == edges[read].1 {
                edges[write - 1].2 = edges[write - 1].2.saturating_add(edges[read].2);
            } else {
                edges[write] = edges[read];
                write += 1;
            }
        }
        edges.truncate(write);
        Ok(Self::from_sorted_unique(node_count, &edges))
    }

    fn from_sorted_unique(n: usize, edges: &[(u32, u32, u64)]) -> RefGraph {
        let m = edges.len();
        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for &(u, v, _) in edges {
            out_offsets[u as usize + 1] += 1;
            in_offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut out_targets = Vec::with_capacity(m);
        let mut out_weights = Vec::with_capacity(m);
        for &(_, v, w) in edges {
            out_targets.push(v);
            out_weights.push(w);
        }
        // edges are sorted by source, so filling in-lists in edge order keeps them sorted
        let mut in_sources = vec![0u32; m];
        let mut in_weights = vec![0u64; m];
        let mut cursor = in_offsets.clone();
        for &(u, v, w) in edges {
            let slot = cursor[v as usize];
            in_sources[slot] = u;
            in_weights[slot] = w;
            cursor[v as usize] += 1;
        }
        RefGraph {
            out_offsets,
            out_targets,
            out_weights,
            in_offsets,
            in_sources,
            in_weights,
            undirected: OnceLock::new(),
        }
    }

    pub(crate) fn from_raw_parts(
        out_offsets: Vec<usize>,
        out_targets: Vec<u32>,
        out_weights: Vec<u64>,
        in_offsets: Vec<usize>,
        in_sources: Vec<u32>,
        in_weights: Vec<u64>,
    ) -> RefGraph {
        RefGraph {
            out_offsets,
            out_targets,
            out_weights,
            in_offsets,
            in_sources,
            in_weights,
            undirected: OnceLock::new(),
        }
    }

    pub(crate) fn raw_parts(&self) -> [(&[usize], &[u32], &[u64]); 2] {
        [
            (&self.out_offsets, &self.out_targets, &self.out_weights),
            (&self.in_offsets, &self.in_sources, &self.in_weights),
        ]
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.out_offsets.len() - 1
    }

    /// Distinct ordered pairs.
    #[inline]
    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_count() == 0
    }

    #[inline]
    pub fn out_targets(&self, u: usize) -> &[u32] {
        &self.out_targets[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    #[inline]
    pub fn out_weights(&self, u: usize) -> &[u64] {
        &self.out_weights[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    #[inline]
    pub fn in_sources(&self, v: usize) -> &[u32] {
        &self.in_sources[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    #[inline]
    pub fn in_weights(&self, v: usize) -> &[u64] {
        &self.in_weights[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn out_neighbors(&self, u: NodeId) -> impl Iterator<Item = (NodeId, u64)> + '_ {
        let i = u.index();
        self.out_targets(i).iter().zip(self.out_weights(i)).map(|(&v, &w)| (NodeId(v), w))
    }

    pub fn in_neighbors(&self, v: NodeId) -> impl Iterator<Item = (NodeId, u64)> + '_ {
        let i = v.index();
        self.in_sources(i).iter().zip(self.in_weights(i)).map(|(&u, &w)| (NodeId(u), w))
    }

    #[inline]
    pub fn out_degree(&self, u: usize) -> usize {
        self.out_offsets[u + 1] - self.out_offsets[u]
    }

    #[inline]
    pub fn in_degree(&self, v: usize) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    pub fn out_strength(&self, u: usize) -> u64 {
        self.out_weights(u).iter().sum()
    }

    pub fn in_strength(&self, v: usize) -> u64 {
        self.in_weights(v).iter().sum()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.out_targets(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<u64> {
        self.out_targets(u).binary_search(&(v as u32)).ok().map(|k| self.out_weights(u)[k])
    }

    /// All edges as `(from, to, weight)` in `(from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u64)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.out_targets(u).iter().zip(self.out_weights(u)).map(move |(&v, &w)| (u as u32, v, w))
        })
    }

    pub fn total_weight(&self) -> u64 {
        self.out_weights.iter().sum()
    }

    /// The graph with every edge reversed.
    pub fn transpose(&self) -> RefGraph {
        RefGraph::from_raw_parts(
            self.in_offsets.clone(),
            self.in_sources.clone(),
            self.in_weights.clone(),
            self.out_offsets.clone(),
            self.out_targets.clone(),
            self.out_weights.clone(),
        )
    }

    /// Undirected simple shadow, computed once and cached.
    pub fn undirected(&self) -> &Undirected {
        self.undirected.get_or_init(|| {
            let n = self.node_count();
            let mut offsets = Vec::with_capacity(n + 1);
            offsets.push(0usize);
            let mut neighbors = Vec::with_capacity(self.edge_count() * 2);
            for u in 0..n {
                let (a, b) = (self.out_targets(u), self.in_sources(u));
                let (mut i, mut j) = (0, 0);
                while i < a.len() || j < b.len() {
                    let next = if j >= b.len() || (i < a.len() && a[i] < b[j]) {
                        i += 1;
                        a[i - 1]
                    } else if i >= a.len() || b[j] < a[i] {
                        j += 1;
                        b[j - 1]
                    } else {
                        i += 1;
                        j += 1;
                        a[i - 1]
                    };
                    neighbors.push(next);
                }
                offsets.push(neighbors.len());
            }
            neighbors.shrink_to_fit();
            Undirected { offsets, neighbors }
        })
    }

    /// Checks the in/out mirror and sortedness invariants.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.node_count();
        for u in 0..n {
            let t = self.out_targets(u);
            if t.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("out-list of {u} not strictly sorted"));
            }
            if t.iter().any(|&v| v as usize == u) {
                return Err(format!("self-loop at {u}"));
            }
            let s = self.in_sources(u);
            if s.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("in-list of {u} not strictly sorted"));
            }
        }
        if self.out_weights.contains(&0) {
            return Err("zero weight".into());
        }
        let mut fwd: Vec<(u32, u32, u64)> = self.edges().collect();
        let mut rev: Vec<(u32, u32, u64)> = (0..n)
            .flat_map(|v| self.in_sources(v).iter().zip(self.in_weights(v)).map(move |(&u, &w)| (u, v as u32, w)))
            .collect();
        fwd.sort_unstable();
        rev.sort_unstable();
        if fwd != rev {
            return Err("in/out adjacency disagree".into());
        }
        Ok(())
    }
}

/// Builds the graph and registry from validated records. Node indices follow
/// ascending NPI order so the result does not depend on record order.
pub fn build_graph<I>(records: I) -> Result<(RefGraph, PhysicianRegistry), GraphError>
where
    I: IntoIterator<Item = RawReferralRecord>,
{
    let mut ids: HashMap<Npi, u32> = HashMap::new();
    let mut npis: Vec<Npi> = Vec::new();
    let mut edges: Vec<(u32, u32, u64)> = Vec::new();
    let mut intern = |npi: Npi, npis: &mut Vec<Npi>| -> u32 {
        *ids.entry(npi).or_insert_with(|| {
            npis.push(npi);
            (npis.len() - 1) as u32
        })
    };
    for r in records {
        if edges.len() == edges.capacity() {
            let extra = edges.capacity().max(1024);
            edges.try_reserve(extra).map_err(|_| GraphError::OutOfMemory { nodes: npis.len(), edges: edges.len() })?;
        }
        let u = intern(r.from_npi, &mut npis);
        let v = intern(r.to_npi, &mut npis);
        if u == v {
            continue;
        }
        edges.push((u, v, u64::from(r.shared_count)));
    }
    // relabel by NPI order
    let mut order: Vec<u32> = (0..npis.len() as u32).collect();
    order.sort_unstable_by_key(|&i| npis[i as usize]);
    let mut new_id = vec![0u32; npis.len()];
    for (new, &old) in order.iter().enumerate() {
        new_id[old as usize] = new as u32;
    }
    for e in edges.iter_mut() {
        e.0 = new_id[e.0 as usize];
        e.1 = new_id[e.1 as usize];
    }
    let node_to_npi: Vec<Npi> = order.iter().map(|&i| npis[i as usize]).collect();
    let graph = RefGraph::from_edges(node_to_npi.len(), edges)?;
    Ok((graph, PhysicianRegistry::new(node_to_npi)))
}
