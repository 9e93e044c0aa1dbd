//! National, induced-state and intrastate network levels.

use super::{GraphError, NodeId, PhysicianRegistry, RefGraph};
use crate::states::StateCode;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which nested network to extract.
///
/// `Intrastate(S)` keeps edges with both endpoints labelled `S`;
/// `InducedState(S)` keeps edges with at least one endpoint labelled `S`. In
/// both cases the node set is the set of endpoints of the kept edges, so
/// `Intrastate(S) ⊆ InducedState(S) ⊆ National` on nodes and edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubnetworkKind {
    National,
    InducedState(StateCode),
    Intrastate(StateCode),
}

impl fmt::Display for SubnetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubnetworkKind::National => f.write_str("national"),
            SubnetworkKind::InducedState(s) => write!(f, "induced:{s}"),
            SubnetworkKind::Intrastate(s) => write!(f, "intrastate:{s}"),
        }
    }
}

impl FromStr for SubnetworkKind {
    type Err = GraphError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "national" {
            return Ok(SubnetworkKind::National);
        }
        let (kind, code) = s.split_once(':').ok_or_else(|| GraphError::UnknownState(s.to_string()))?;
        let state = StateCode::new(code).map_err(|_| GraphError::UnknownState(code.to_string()))?;
        match kind {
            "induced" => Ok(SubnetworkKind::InducedState(state)),
            "intrastate" => Ok(SubnetworkKind::Intrastate(state)),
            _ => Err(GraphError::UnknownState(s.to_string())),
        }
    }
}

/// A subgraph with dense local indices and the map back to its parent.
#[derive(Debug, Clone)]
pub struct Subnetwork {
    pub kind: SubnetworkKind,
    pub graph: RefGraph,
    /// `parent[i]` is the parent-graph node of local node `i`; ascending.
    pub parent: Vec<NodeId>,
}

impl Subnetwork {
    pub fn to_parent(&self, local: NodeId) -> NodeId {
        self.parent[local.index()]
    }

    /// Registry restricted to this subnetwork's nodes, labels carried over.
    pub fn registry(&self, parent: &PhysicianRegistry) -> PhysicianRegistry {
        let npis = self.parent.iter().map(|&p| parent.npi_of(p)).collect();
        let states = self.parent.iter().map(|&p| parent.state_of(p)).collect();
        PhysicianRegistry::with_states(npis, states)
    }
}

pub fn extract_subnetwork(
    graph: &RefGraph,
    registry: &PhysicianRegistry,
    kind: SubnetworkKind,
) -> Result<Subnetwork, GraphError> {
    let n = graph.node_count();
    let keep: Box<dyn Fn(usize, usize) -> bool> = match kind {
        SubnetworkKind::National => {
            return Ok(Subnetwork { kind, graph: graph.clone(), parent: (0..n as u32).map(NodeId).collect() })
        }
        SubnetworkKind::InducedState(s) | SubnetworkKind::Intrastate(s) => {
            if !registry.states().contains(&Some(s)) {
                return Err(GraphError::UnknownState(s.to_string()));
            }
            let labels = registry.states();
            if matches!(kind, SubnetworkKind::Intrastate(_)) {
                Box::new(move |u, v| labels[u] == Some(s) && labels[v] == Some(s))
            } else {
                Box::new(move |u, v| labels[u] == Some(s) || labels[v] == Some(s))
            }
        }
    };
    let mut local = vec![u32::MAX; n];
    let mut kept: Vec<(u32, u32, u64)> = Vec::new();
    for (u, v, w) in graph.edges() {
        if keep(u as usize, v as usize) {
            local[u as usize] = 0;
            local[v as usize] = 0;
            kept.push((u, v, w));
        }
    }
    let mut parent = Vec::new();
    for (i, slot) in local.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = parent.len() as u32;
            parent.push(NodeId(i as u32));
        }
    }
    for e in kept.iter_mut() {
        e.0 = local[e.0 as usize];
        e.1 = local[e.1 as usize];
    }
    let sub = RefGraph::from_edges(parent.len(), kept)?;
    Ok(Subnetwork { kind, graph: sub, parent })
}

/// Subgraph induced by `nodes` (sorted ascending), relabelled densely in that order.
pub fn induced_subgraph(graph: &RefGraph, nodes: &[NodeId]) -> RefGraph {
    let mut local = vec![u32::MAX; graph.node_count()];
    for (i, v) in nodes.iter().enumerate() {
        local[v.index()] = i as u32;
    }
    let mut edges = Vec::new();
    for v in nodes {
        let u = v.index();
        for (&t, &w) in graph.out_targets(u).iter().zip(graph.out_weights(u)) {
            let lt = local[t as usize];
            if lt != u32::MAX {
                edges.push((local[u], lt, w));
            }
        }
    }
    RefGraph::from_edges(nodes.len(), edges).expect("edges of a valid graph")
}
