mod common;

use common::{
    assortativity_brute, clustering_brute, edge_list, gini_brute, graph_of, pearson, reciprocity_brute,
    self_degree_brute, triad_census_brute, triad_name, triangles_brute, Dense,
};
use proptest::prelude::*;
use refnet::graph::RefGraph;
use refnet::metrics::{
    assortativity, clustering, gini, reciprocity, self_degree_correlation, triangles_per_node, DegreeSide,
};
use refnet::motifs::{choose3, dyad_census, triad_census_exact, triad_census_mc, triad_of, TRIAD_NAMES};
use refnet::nullmodels::generate_er;

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() < 1e-9,
        (None, None) => true,
        _ => false,
    }
}

proptest! {
    #[test]
    fn clustering_matches_brute((n, edges) in edge_list(20, 90)) {
        let g = graph_of(n, &edges);
        let d = Dense::from_edges(n, &edges);
        let t = triangles_brute(&d);
        prop_assert_eq!(triangles_per_node(&g), t.clone());
        match (clustering(&g), clustering_brute(&d)) {
            (Ok(c), Some((global, local))) => {
                prop_assert!((c.global_c - global).abs() < 1e-12);
                prop_assert!((c.local_c - local).abs() < 1e-12);
                prop_assert_eq!(c.triangles, t.iter().sum::<u64>() / 3);
            }
            (Err(_), None) => {}
            (a, b) => prop_assert!(false, "engine {:?} oracle {:?}", a.is_ok(), b),
        }
    }

    #[test]
    fn assortativity_matches_brute((n, edges) in edge_list(20, 90)) {
        let g = graph_of(n, &edges);
        let d = Dense::from_edges(n, &edges);
        let rep = assortativity(&g);
        for a in [DegreeSide::In, DegreeSide::Out] {
            for b in [DegreeSide::In, DegreeSide::Out] {
                let want = assortativity_brute(&d, a == DegreeSide::Out, b == DegreeSide::Out);
                prop_assert!(close(rep.get(a, b), want));
            }
        }
        let mut und = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if d.linked(u, v) {
                    und.push((d.und_degree(u) as f64, d.und_degree(v) as f64));
                }
            }
        }
        prop_assert!(close(rep.r_undirected, pearson(&und)));
        prop_assert!(close(self_degree_correlation(&g, false).ok(), self_degree_brute(&d)));
    }

    #[test]
    fn reciprocity_matches_brute((n, edges) in edge_list(20, 120)) {
        let g = graph_of(n, &edges);
        let d = Dense::from_edges(n, &edges);
        let (corr, mutual, asym) = reciprocity_brute(&d);
        let r = reciprocity(&g);
        prop_assert_eq!(r.mutual_pairs, mutual);
        prop_assert_eq!(r.asymmetric_pairs, asym);
        prop_assert!(close(r.corr, corr));
        let dc = dyad_census(&g);
        prop_assert_eq!((dc.mutual, dc.asymmetric), (mutual, asym));
        prop_assert_eq!(dc.null + u128::from(mutual + asym), (n * (n - 1) / 2) as u128);
    }

    #[test]
    fn gini_matches_double_sum(xs in proptest::collection::vec(0.0f64..100.0, 1..60)) {
        prop_assume!(xs.iter().sum::<f64>() > 0.0);
        prop_assert!((gini(&xs).unwrap() - gini_brute(&xs)).abs() < 1e-10);
    }

    #[test]
    fn triad_census_matches_brute((n, edges) in edge_list(14, 70)) {
        prop_assume!(n >= 3);
        let g = graph_of(n, &edges);
        let d = Dense::from_edges(n, &edges);
        let want = triad_census_brute(&d);
        let got = triad_census_exact(&g).unwrap();
        for (k, name) in TRIAD_NAMES.iter().enumerate() {
            prop_assert_eq!(got.tallies[k], *want.get(name).unwrap_or(&0), "class {}", name);
        }
        prop_assert_eq!(got.tallies.iter().map(|&x| x as u128).sum::<u128>(), choose3(n));
    }
}

#[test]
fn every_three_node_configuration_is_named_correctly() {
    let arcs = [(0u32, 1u32), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)];
    for mask in 0u32..64 {
        let edges: Vec<(u32, u32, u64)> =
            arcs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &(u, v))| (u, v, 1)).collect();
        let g = RefGraph::from_edges(3, edges.clone()).unwrap();
        let d = Dense::from_edges(3, &edges);
        let want = triad_name(&d, 0, 1, 2);
        for (a, b, c) in [(0, 1, 2), (2, 0, 1), (1, 2, 0), (2, 1, 0)] {
            assert_eq!(triad_of(&g, a, b, c).name(), want, "mask {mask:06b}");
        }
    }
}

#[test]
fn monte_carlo_census_brackets_exact() {
    let g = generate_er(120, 0.06, 5).unwrap();
    let exact = triad_census_exact(&g).unwrap();
    let mc = triad_census_mc(&g, 200_000, 11).unwrap();
    for k in 0..16 {
        let se = mc.std_errors[k].max(1.0);
        assert!(
            (mc.counts[k] - exact.counts[k]).abs() <= 4.5 * se,
            "{}: mc {} exact {} se {}",
            TRIAD_NAMES[k],
            mc.counts[k],
            exact.counts[k],
            se
        );
    }
    assert_eq!(triad_census_mc(&g, 200_000, 11).unwrap().tallies, mc.tallies);
}
