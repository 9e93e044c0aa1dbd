//! NPI ↔ node mapping and per-physician state labels.

use super::{NodeId, RefGraph};
use crate::ingest::{Npi, NpiStateRecord};
use crate::states::StateCode;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhysicianRegistry {
    npi_to_node: HashMap<Npi, NodeId>,
    node_to_npi: Vec<Npi>,
    state_of: Vec<Option<StateCode>>,
}

impl PhysicianRegistry {
    pub fn new(node_to_npi: Vec<Npi>) -> Self {
        let npi_to_node = node_to_npi.iter().enumerate().map(|(i, &n)| (n, NodeId(i as u32))).collect();
        let state_of = vec![None; node_to_npi.len()];
        PhysicianRegistry { npi_to_node, node_to_npi, state_of }
    }

    pub fn with_states(node_to_npi: Vec<Npi>, state_of: Vec<Option<StateCode>>) -> Self {
        assert_eq!(node_to_npi.len(), state_of.len());
        let mut r = Self::new(node_to_npi);
        r.state_of = state_of;
        r
    }

    pub fn len(&self) -> usize {
        self.node_to_npi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_to_npi.is_empty()
    }

    pub fn node_of(&self, npi: Npi) -> Option<NodeId> {
        self.npi_to_node.get(&npi).copied()
    }

    pub fn npi_of(&self, node: NodeId) -> Npi {
        self.node_to_npi[node.index()]
    }

    pub fn npis(&self) -> &[Npi] {
        &self.node_to_npi
    }

    pub fn state_of(&self, node: NodeId) -> Option<StateCode> {
        self.state_of[node.index()]
    }

    pub fn states(&self) -> &[Option<StateCode>] {
        &self.state_of
    }

    pub fn set_state(&mut self, node: NodeId, state: Option<StateCode>) {
        self.state_of[node.index()] = state;
    }

    /// Nodes labelled `state`, ascending.
    pub fn nodes_in(&self, state: StateCode) -> Vec<NodeId> {
        self.state_of.iter().enumerate().filter(|(_, s)| **s == Some(state)).map(|(i, _)| NodeId(i as u32)).collect()
    }

    /// Distinct labels present, sorted.
    pub fn labels(&self) -> Vec<StateCode> {
        let mut v: Vec<StateCode> = self.state_of.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// What "most connections" counts when choosing among candidate states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Sum of shared-patient weights on adjacent edges.
    #[default]
    Weighted,
    /// Number of adjacent edges (distinct partners per direction).
    Partners,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignConfig {
    pub count_mode: CountMode,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentReport {
    pub single_state: u64,
    pub multi_state: u64,
    /// Multi-state physicians decided by referrals to single-state neighbours.
    pub by_labeled_neighbors: u64,
    /// Decided by volume to neighbours whose candidate sets include the state.
    pub by_fallback_volume: u64,
    /// No usable adjacency; smallest candidate code taken.
    pub by_default: u64,
    /// Decisions where two or more candidates tied on the maximum.
    pub ties: u64,
    /// Nodes with edges but no provider-state row.
    pub unlabeled: u64,
}

/// Labels every node with a state.
///
/// Physicians listed under one state get it directly. Physicians listed under
/// several states are scored per candidate by the referrals (both directions)
/// they exchange with single-state neighbours labelled with that candidate; if
/// none of those neighbours carry a candidate label, the score falls back to
/// the volume exchanged with neighbours whose own candidate lists include it.
/// The highest score wins; ties go to the lexicographically smaller code.
pub fn assign_states(
    registry: &mut PhysicianRegistry,
    graph: &RefGraph,
    npi_records: &[NpiStateRecord],
    config: AssignConfig,
) -> AssignmentReport {
    let n = registry.len();
    assert_eq!(n, graph.node_count(), "registry does not match graph");
    let mut candidates: Vec<Vec<StateCode>> = vec![Vec::new(); n];
    for r in npi_records {
        if let Some(node) = registry.node_of(r.npi) {
            candidates[node.index()].push(r.state);
        }
    }
    for c in candidates.iter_mut() {
        c.sort_unstable();
        c.dedup();
    }

    let mut report = AssignmentReport::default();
    let mut labels: Vec<Option<StateCode>> = vec![None; n];
    for (i, c) in candidates.iter().enumerate() {
        match c.len() {
            0 => report.unlabeled += 1,
            1 => {
                labels[i] = Some(c[0]);
                report.single_state += 1;
            }
            _ => report.multi_state += 1,
        }
    }

    let edge_value = |w: u64| match config.count_mode {
        CountMode::Weighted => w,
        CountMode::Partners => 1,
    };
    let mut resolved: Vec<(usize, StateCode)> = Vec::new();
    for (i, cands) in candidates.iter().enumerate() {
        if cands.len() < 2 {
            continue;
        }
        let adjacent = graph
            .out_targets(i)
            .iter()
            .zip(graph.out_weights(i))
            .chain(graph.in_sources(i).iter().zip(graph.in_weights(i)));

        let mut direct: BTreeMap<StateCode, u64> = cands.iter().map(|&s| (s, 0)).collect();
        let mut fallback = direct.clone();
        for (&v, &w) in adjacent {
            let v = v as usize;
            if let Some(s) = labels[v] {
                if let Some(slot) = direct.get_mut(&s) {
                    *slot += edge_value(w);
                }
            }
            for s in &candidates[v] {
                if let Some(slot) = fallback.get_mut(s) {
                    *slot += edge_value(w);
                }
            }
        }
        let (scores, bucket) = if direct.values().any(|&x| x > 0) {
            (direct, &mut report.by_labeled_neighbors)
        } else if fallback.values().any(|&x| x > 0) {
            (fallback, &mut report.by_fallback_volume)
        } else {
            (direct, &mut report.by_default)
        };
        *bucket += 1;
        let best = *scores.values().max().unwrap();
        // BTreeMap iterates in code order, so the first maximum is the smallest code
        let mut winners = scores.iter().filter(|(_, &v)| v == best).map(|(&s, _)| s);
        let winner = winners.next().unwrap();
        if winners.next().is_some() {
            report.ties += 1;
        }
        resolved.push((i, winner));
    }
    for (i, s) in resolved {
        labels[i] = Some(s);
    }
    registry.state_of = labels;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::ingest::RawReferralRecord;

    fn npi(i: u64) -> Npi {
        Npi::from_value(1_000_000_000 + i).unwrap()
    }

    fn st(s: &str) -> StateCode {
        StateCode::new(s).unwrap()
    }

    fn edge(a: u64, b: u64, w: u32) -> RawReferralRecord {
        RawReferralRecord { from_npi: npi(a), to_npi: npi(b), shared_count: w, year: 2009 }
    }

    fn listing(items: &[(u64, &str)]) -> Vec<NpiStateRecord> {
        items.iter().map(|&(i, s)| NpiStateRecord { npi: npi(i), state: st(s), year: 2009 }).collect()
    }

    #[test]
    fn single_state_physician_labelled_directly() {
        let (g, mut reg) = build_graph(vec![edge(1, 2, 1)]).unwrap();
        let rep = assign_states(&mut reg, &g, &listing(&[(1, "NH"), (2, "NH")]), AssignConfig::default());
        assert_eq!(reg.state_of(reg.node_of(npi(1)).unwrap()), Some(st("NH")));
        assert_eq!(rep.single_state, 2);
    }

    #[test]
    fn multi_state_goes_to_argmax() {
        // 1 is listed in NH and VT; sends 10 to an NH peer and 2 to a VT peer
        let (g, mut reg) = build_graph(vec![edge(1, 2, 10), edge(1, 3, 2)]).unwrap();
        let l = listing(&[(1, "NH"), (1, "VT"), (2, "NH"), (3, "VT")]);
        let rep = assign_states(&mut reg, &g, &l, AssignConfig::default());
        assert_eq!(reg.state_of(reg.node_of(npi(1)).unwrap()), Some(st("NH")));
        assert_eq!(rep.by_labeled_neighbors, 1);
        assert_eq!(rep.ties, 0);
    }

    #[test]
    fn ties_go_to_smaller_code_and_are_counted() {
        let (g, mut reg) = build_graph(vec![edge(1, 2, 5), edge(3, 1, 5)]).unwrap();
        let l = listing(&[(1, "VT"), (1, "NH"), (2, "VT"), (3, "NH")]);
        let rep = assign_states(&mut reg, &g, &l, AssignConfig::default());
        assert_eq!(reg.state_of(reg.node_of(npi(1)).unwrap()), Some(st("NH")));
        assert_eq!(rep.ties, 1);
    }

    #[test]
    fn partner_mode_counts_edges() {
        // weighted: NH wins 9 vs 2; partners: VT wins 2 vs 1
        let (g, mut reg) = build_graph(vec![edge(1, 2, 9), edge(1, 3, 1), edge(1, 4, 1)]).unwrap();
        let l = listing(&[(1, "NH"), (1, "VT"), (2, "NH"), (3, "VT"), (4, "VT")]);
        let mut reg2 = reg.clone();
        assign_states(&mut reg, &g, &l, AssignConfig::default());
        assign_states(&mut reg2, &g, &l, AssignConfig { count_mode: CountMode::Partners });
        assert_eq!(reg.state_of(reg.node_of(npi(1)).unwrap()), Some(st("NH")));
        assert_eq!(reg2.state_of(reg2.node_of(npi(1)).unwrap()), Some(st("VT")));
    }

    #[test]
    fn fallback_uses_neighbour_candidates() {
        // both endpoints multi-state; 2's candidates include VT only among 1's options
        let (g, mut reg) = build_graph(vec![edge(1, 2, 3)]).unwrap();
        let l = listing(&[(1, "NH"), (1, "VT"), (2, "VT"), (2, "ME")]);
        let rep = assign_states(&mut reg, &g, &l, AssignConfig::default());
        assert_eq!(reg.state_of(reg.node_of(npi(1)).unwrap()), Some(st("VT")));
        assert_eq!(rep.by_fallback_volume, 2);
    }

    #[test]
    fn unlisted_nodes_stay_unlabelled() {
        let (g, mut reg) = build_graph(vec![edge(1, 2, 1)]).unwrap();
        let rep = assign_states(&mut reg, &g, &listing(&[(1, "NH")]), AssignConfig::default());
        assert_eq!(rep.unlabeled, 1);
        assert_eq!(reg.state_of(reg.node_of(npi(2)).unwrap()), None);
    }
}
