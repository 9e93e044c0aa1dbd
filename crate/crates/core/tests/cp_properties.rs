use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refnet::coreperiphery::{cp_scores, entropy, CpConfig};
use refnet::graph::RefGraph;

fn quick(seed: u64) -> CpConfig {
    CpConfig { iterations_per_node: 300, seed, ..CpConfig::default() }
}

/// Hub 0 linked both ways to everyone, sparse noise elsewhere, labels permuted.
fn hub_graph(n: usize, seed: u64, perm: &[u32]) -> RefGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = Vec::new();
    for v in 1..n as u32 {
        e.push((perm[0], perm[v as usize], 1));
        e.push((perm[v as usize], perm[0], 1));
    }
    for _ in 0..n {
        let (a, b) = (rng.gen_range(1..n), rng.gen_range(1..n));
        if a != b {
            e.push((perm[a], perm[b], 1));
        }
    }
    RefGraph::from_edges(n, e).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn hub_is_the_core_under_any_labelling(seed in any::<u64>(), n in 12usize..30) {
        let mut perm: Vec<u32> = (0..n as u32).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let g = hub_graph(n, seed, &perm);
        let rep = cp_scores(&g, &quick(seed)).unwrap();
        prop_assert_eq!(rep.core_node.0, perm[0]);
        prop_assert_eq!(rep.cp_score[perm[0] as usize], 1.0);
        prop_assert_eq!(rep.cp_score.iter().filter(|&&s| s == 1.0).count(), 1);
        prop_assert!(rep.cp_score.iter().all(|&s| (0.0..=1.0).contains(&s)));
        prop_assert!(rep.core_entropy >= 0.0 && rep.core_entropy <= (rep.top_by_setting.len() as f64).ln() + 1e-12);
        prop_assert!((0.0..=1.0).contains(&rep.gini_cp));
    }
}

#[test]
fn scores_are_reproducible_for_a_seed() {
    let perm: Vec<u32> = (0..20).collect();
    let g = hub_graph(20, 3, &perm);
    let a = cp_scores(&g, &quick(7)).unwrap();
    let b = cp_scores(&g, &quick(7)).unwrap();
    assert_eq!(a.cp_score, b.cp_score);
    assert_eq!(a.top_by_setting, b.top_by_setting);
}

#[test]
fn complete_graph_ties_resolve_to_lowest_id() {
    let n = 8u32;
    let mut e = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v {
                e.push((u, v, 1));
            }
        }
    }
    let g = RefGraph::from_edges(n as usize, e).unwrap();
    let rep = cp_scores(&g, &quick(1)).unwrap();
    // identical closed neighbourhoods: one shared score
    assert_eq!(rep.core_node.0, 0);
    assert_eq!(rep.tied_at_max, n as usize);
}

#[test]
fn entropy_of_labels() {
    assert_eq!(entropy(&[3, 3, 3]), 0.0);
    assert!((entropy(&[1, 2]) - 2f64.ln()).abs() < 1e-12);
    assert!((entropy(&[1, 2, 3, 4]) - 4f64.ln()).abs() < 1e-12);
}
