mod common;

use common::{components_uf, diameter_all_pairs, edge_list, graph_of, Dense};
use proptest::prelude::*;
use refnet::graph::{
    approx_diameter, extract_subnetwork, read_graph_cache, weak_components, write_graph_cache, NodeId,
    PhysicianRegistry, RefGraph, SubnetworkKind,
};
use refnet::ingest::Npi;
use refnet::states::StateCode;
use std::collections::BTreeMap;

fn registry_with_labels(n: usize, labels: &[u8]) -> PhysicianRegistry {
    let codes = ["CA", "NY", "TX"];
    let npis = (0..n).map(|i| Npi::from_value(1_000_000_000 + i as u64).unwrap()).collect();
    let states = (0..n)
        .map(|i| match labels[i % labels.len()] % 4 {
            3 => None,
            k => Some(StateCode::new(codes[k as usize]).unwrap()),
        })
        .collect();
    PhysicianRegistry::with_states(npis, states)
}

proptest! {
    #[test]
    fn csr_matches_dense((n, edges) in edge_list(30, 120)) {
        let g = graph_of(n, &edges);
        let d = Dense::from_edges(n, &edges);
        prop_assert!(g.check_invariants().is_ok());
        let pairs = (0..n).flat_map(|u| (0..n).map(move |v| (u, v))).filter(|&(u, v)| d.arc(u, v)).count();
        prop_assert_eq!(g.edge_count(), pairs);
        prop_assert_eq!(g.total_weight(), edges.iter().map(|e| e.2).sum::<u64>());
        for u in 0..n {
            prop_assert_eq!(g.out_degree(u), d.out_degree(u));
            prop_assert_eq!(g.in_degree(u), d.in_degree(u));
            prop_assert_eq!(g.undirected().degree(u), d.und_degree(u));
            for v in 0..n {
                prop_assert_eq!(g.edge_weight(u, v).unwrap_or(0), d.w[u][v]);
            }
        }
        let back = g.transpose().transpose();
        prop_assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }

    #[test]
    fn components_match_union_find((n, edges) in edge_list(40, 60)) {
        let g = graph_of(n, &edges);
        let mut got: Vec<Vec<usize>> = weak_components(&g)
            .into_iter()
            .map(|c| { let mut c: Vec<usize> = c.into_iter().map(|v| v.index()).collect(); c.sort(); c })
            .collect();
        got.sort();
        let mut want = components_uf(&Dense::from_edges(n, &edges));
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn exact_diameter_matches_all_pairs((n, edges) in edge_list(25, 60), seed in any::<u64>()) {
        let g = graph_of(n, &edges);
        let exact = diameter_all_pairs(&Dense::from_edges(n, &edges));
        prop_assert_eq!(approx_diameter(&g, n, seed).unwrap(), exact);
        let sampled = approx_diameter(&g, 3, seed).unwrap();
        prop_assert!(sampled <= exact);
    }

    #[test]
    fn subnetworks_nest_and_partition((n, edges) in edge_list(30, 100), labels in proptest::collection::vec(any::<u8>(), 1..8)) {
        let g = graph_of(n, &edges);
        let reg = registry_with_labels(n, &labels);
        let national: BTreeMap<(u32, u32), u64> = g.edges().map(|(u, v, w)| ((u, v), w)).collect();
        let mut intra_total = 0usize;
        for code in reg.labels() {
            let intra = extract_subnetwork(&g, &reg, SubnetworkKind::Intrastate(code)).unwrap();
            let induced = extract_subnetwork(&g, &reg, SubnetworkKind::InducedState(code)).unwrap();
            let lift = |s: &refnet::graph::Subnetwork| -> BTreeMap<(u32, u32), u64> {
                s.graph.edges().map(|(u, v, w)| ((s.parent[u as usize].0, s.parent[v as usize].0), w)).collect()
            };
            let (ei, ed) = (lift(&intra), lift(&induced));
            for (k, w) in &ei {
                prop_assert_eq!(ed.get(k), Some(w));
                prop_assert_eq!(reg.state_of(NodeId(k.0)), Some(code));
                prop_assert_eq!(reg.state_of(NodeId(k.1)), Some(code));
            }
            for (k, w) in &ed {
                prop_assert_eq!(national.get(k), Some(w));
                prop_assert!(reg.state_of(NodeId(k.0)) == Some(code) || reg.state_of(NodeId(k.1)) == Some(code));
            }
            // every kept node is an endpoint of a kept edge
            let mut touched = vec![false; intra.parent.len()];
            for (u, v, _) in intra.graph.edges() {
                touched[u as usize] = true;
                touched[v as usize] = true;
            }
            prop_assert!(touched.iter().all(|&t| t));
            intra_total += ei.len();
        }
        // intrastate edge sets partition the same-label edges
        let same_label = national
            .keys()
            .filter(|(u, v)| {
                let (a, b) = (reg.state_of(NodeId(*u)), reg.state_of(NodeId(*v)));
                a.is_some() && a == b
            })
            .count();
        prop_assert_eq!(intra_total, same_label);
    }

    #[test]
    fn cache_round_trip((n, edges) in edge_list(20, 60), labels in proptest::collection::vec(any::<u8>(), 1..5)) {
        let g = graph_of(n, &edges);
        let reg = registry_with_labels(n, &labels);
        let mut buf = Vec::new();
        write_graph_cache(&g, &reg, &mut buf).unwrap();
        let (g2, reg2) = read_graph_cache(&buf[..]).unwrap();
        prop_assert_eq!(g2.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        prop_assert_eq!(reg2.npis(), reg.npis());
        prop_assert_eq!(reg2.states(), reg.states());
    }
}

#[test]
fn national_subnetwork_is_identity() {
    let g = RefGraph::from_edges(3, vec![(0, 1, 2), (1, 2, 3)]).unwrap();
    let reg = registry_with_labels(3, &[0]);
    let s = extract_subnetwork(&g, &reg, SubnetworkKind::National).unwrap();
    assert_eq!(s.graph.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
}
