//! Erdős–Rényi and Watts–Strogatz generators and the small-world verdict.
//!
//! Generators are undirected and emit each link as a mutual pair of directed
//! edges of weight 1, so every metric applies unchanged.

use crate::graph::{
    approx_diameter, induced_subgraph, weak_components, GraphError, RefGraph, DEFAULT_DIAMETER_SAMPLES,
};
use crate::metrics::clustering;
use crate::rng::stream_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NullModelError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn mutual(n: usize, pairs: Vec<(u32, u32)>) -> RefGraph {
    let mut edges = Vec::with_capacity(pairs.len() * 2);
    for (a, b) in pairs {
        edges.push((a, b, 1));
        edges.push((b, a, 1));
    }
    RefGraph::from_edges(n, edges).expect("generated pairs are valid")
}

/// G(n, p) with geometric skipping over the pairs `w < v`.
pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<RefGraph, NullModelError> {
    if n < 2 {
        return Err(NullModelError::Invalid(format!("n must be at least 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(NullModelError::Invalid(format!("p must lie in [0, 1], got {p}")));
    }
    let mut pairs = Vec::new();
    if p == 1.0 {
        for v in 1..n as u32 {
            for w in 0..v {
                pairs.push((w, v));
            }
        }
    } else if p > 0.0 {
        let mut rng = stream_rng(seed, 0);
        let lq = (1.0 - p).ln();
        let (mut v, mut w) = (1usize, -1i64);
        while v < n {
            let r: f64 = rng.gen();
            w += 1 + ((1.0 - r).ln() / lq).floor() as i64;
            while w >= v as i64 && v < n {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                pairs.push((w as u32, v as u32));
            }
        }
    }
    Ok(mutual(n, pairs))
}

/// Watts–Strogatz: ring lattice of `k` nearest neighbours, each lattice edge
/// `(u, u + j)` rewired at its far end with probability `beta`, avoiding
/// self-loops and duplicates.
pub fn generate_ws(n: usize, k: usize, beta: f64, seed: u64) -> Result<RefGraph, NullModelError> {
    if k % 2 != 0 || k == 0 || k >= n {
        return Err(NullModelError::Invalid(format!("k must be even with 0 < k < n, got k={k}, n={n}")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(NullModelError::Invalid(format!("beta must lie in [0, 1], got {beta}")));
    }
    let mut adj: Vec<Vec<u32>> = vec![Vec::with_capacity(k + 4); n];
    let link = |adj: &mut Vec<Vec<u32>>, a: usize, b: usize| {
        adj[a].push(b as u32);
        adj[b].push(a as u32);
    };
    for u in 0..n {
        for j in 1..=k / 2 {
            link(&mut adj, u, (u + j) % n);
        }
    }
    let mut rng = stream_rng(seed, 0);
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.gen::<f64>() >= beta || adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.gen_range(0..n);
                if w != u && !adj[u].contains(&(w as u32)) {
                    break w;
                }
            };
            adj[u].retain(|&x| x as usize != v);
            adj[v].retain(|&x| x as usize != u);
            link(&mut adj, u, w);
        }
    }
    let mut pairs = Vec::with_capacity(n * k / 2);
    for (u, nb) in adj.iter().enumerate() {
        for &v in nb {
            if (u as u32) < v {
                pairs.push((u as u32, v));
            }
        }
    }
    Ok(mutual(n, pairs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallWorldThresholds {
    /// Minimum local clustering over ER density.
    pub clustering_ratio: f64,
    /// Diameter may be at most this multiple of `ln n / ln μ`.
    pub path_factor: f64,
    pub diameter_samples: usize,
    pub seed: u64,
}

impl Default for SmallWorldThresholds {
    fn default() -> Self {
        SmallWorldThresholds {
            clustering_ratio: 10.0,
            path_factor: 3.0,
            diameter_samples: DEFAULT_DIAMETER_SAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallWorldVerdict {
    pub local_c: f64,
    pub er_expected: f64,
    pub clustering_ratio: f64,
    pub diameter_bound: u32,
    /// `ln n / ln μ` on the analysed component.
    pub er_path_scale: f64,
    pub is_small_world: bool,
    pub component_nodes: usize,
    pub total_nodes: usize,
    /// Set when the dominant component holds under 90% of nodes.
    pub fragmented: bool,
}

/// Small-world verdict on the dominant weak component.
pub fn small_world_test(
    graph: &RefGraph,
    thresholds: &SmallWorldThresholds,
) -> Result<SmallWorldVerdict, NullModelError> {
    let n = graph.node_count();
    if n == 0 {
        return Err(GraphError::Empty.into());
    }
    let comps = weak_components(graph);
    let owned;
    let g = if comps[0].len() == n {
        graph
    } else {
        owned = induced_subgraph(graph, &comps[0]);
        &owned
    };
    let nc = g.node_count();
    let report = clustering(g).map_err(|e| NullModelError::Invalid(e.to_string()))?;
    let diameter = approx_diameter(g, thresholds.diameter_samples, thresholds.seed)?;
    let mu = report.mean_degree;
    let er_path_scale = if mu > 1.0 { (nc as f64).ln() / mu.ln() } else { f64::INFINITY };
    let clustering_ratio = if report.er_expected > 0.0 { report.local_c / report.er_expected } else { f64::INFINITY };
    Ok(SmallWorldVerdict {
        local_c: report.local_c,
        er_expected: report.er_expected,
        clustering_ratio,
        diameter_bound: diameter,
        er_path_scale,
        is_small_world: clustering_ratio >= thresholds.clustering_ratio
            && diameter as f64 <= thresholds.path_factor * er_path_scale,
        component_nodes: nc,
        total_nodes: n,
        fragmented: (nc as f64) < 0.9 * n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_extremes() {
        assert_eq!(generate_er(10, 0.0, 1).unwrap().edge_count(), 0);
        let k5 = generate_er(5, 1.0, 1).unwrap();
        assert_eq!(k5.undirected().edge_count(), 10);
        assert!(generate_er(1, 0.5, 1).is_err());
        assert!(generate_er(5, 1.5, 1).is_err());
    }

    #[test]
    fn er_is_seeded() {
        let a = generate_er(300, 0.05, 9).unwrap();
        let b = generate_er(300, 0.05, 9).unwrap();
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
    }

    #[test]
    fn lattice_degrees_and_clustering() {
        let g = generate_ws(20, 4, 0.0, 0).unwrap();
        assert!((0..20).all(|u| g.undirected().degree(u) == 4));
        let c = clustering(&generate_ws(100, 6, 0.0, 0).unwrap()).unwrap();
        assert!((c.local_c - 3.0 * 4.0 / (4.0 * 5.0)).abs() < 1e-12);
    }

    #[test]
    fn ws_rejects_bad_k() {
        assert!(generate_ws(10, 3, 0.1, 0).is_err());
        assert!(generate_ws(10, 10, 0.1, 0).is_err());
    }

    #[test]
    fn ws_keeps_edge_count() {
        let g = generate_ws(200, 8, 0.3, 5).unwrap();
        assert_eq!(g.undirected().edge_count(), 800);
        g.check_invariants().unwrap();
    }

    #[test]
    fn fragmented_flag() {
        let mut edges = Vec::new();
        for (a, b) in [(0, 1), (1, 2), (2, 0), (3, 4)] {
            edges.push((a, b, 1));
            edges.push((b, a, 1));
        }
        let g = RefGraph::from_edges(5, edges).unwrap();
        let v = small_world_test(&g, &SmallWorldThresholds::default()).unwrap();
        assert_eq!(v.component_nodes, 3);
        assert!(v.fragmented);
    }
}
