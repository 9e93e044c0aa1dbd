//! Descriptive statistics of a referral graph: degrees, Gini, clustering,
//! degree assortativity, self-degree correlation and reciprocity.
//!
//! Correlation metrics are plain Pearson coefficients over edges (or nodes, or
//! mutual pairs). Degrees used by the correlation metrics are unweighted edge
//! counts.

use crate::graph::RefGraph;
use crate::stats::pearson_iter;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("{0} is undefined for this graph")]
    Undefined(&'static str),
    #[error("invalid input: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub weighted: bool,
    pub in_degrees: Vec<u64>,
    pub out_degrees: Vec<u64>,
    /// Mean out-degree (equal to mean in-degree).
    pub mean_degree: f64,
}

/// In- and out-degrees; with `weighted` each edge contributes its weight.
pub fn degree_stats(graph: &RefGraph, weighted: bool) -> DegreeStats {
    let n = graph.node_count();
    let (in_degrees, out_degrees): (Vec<u64>, Vec<u64>) = (0..n)
        .map(|u| {
            if weighted {
                (graph.in_strength(u), graph.out_strength(u))
            } else {
                (graph.in_degree(u) as u64, graph.out_degree(u) as u64)
            }
        })
        .unzip();
    let total: u64 = out_degrees.iter().sum();
    let mean_degree = if n == 0 { 0.0 } else { total as f64 / n as f64 };
    DegreeStats { weighted, in_degrees, out_degrees, mean_degree }
}

/// Gini coefficient `Σᵢⱼ|xᵢ − xⱼ| / (2n²·mean)`, population form.
pub fn gini(values: &[f64]) -> Result<f64, MetricError> {
    if values.is_empty() {
        return Err(MetricError::Invalid("empty input"));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(MetricError::Invalid("values must be finite and non-negative"));
    }
    let mut x = values.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total: f64 = x.iter().sum();
    if total <= 0.0 {
        return Err(MetricError::Invalid("all values are zero"));
    }
    let n = x.len() as f64;
    // Σᵢⱼ|xᵢ−xⱼ| = 2 Σ_k (2k − n − 1)·x_(k), k = 1..n over sorted values
    let weighted: f64 = x.iter().enumerate().map(|(k, &v)| (2.0 * (k as f64 + 1.0) - n - 1.0) * v).sum();
    Ok((weighted / (n * total)).max(0.0))
}

pub fn gini_u64(values: &[u64]) -> Result<f64, MetricError> {
    gini(&values.iter().map(|&v| v as f64).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    /// 3·triangles / connected triples.
    pub global_c: f64,
    /// Mean local coefficient over nodes of degree ≥ 2.
    pub local_c: f64,
    /// Density μ/(n − 1) of the undirected shadow.
    pub er_expected: f64,
    pub triangles: u64,
    pub connected_triples: u64,
    /// Nodes entering the local average.
    pub nodes_with_pairs: u64,
    /// Mean undirected degree μ.
    pub mean_degree: f64,
}

/// Triangles through each node of the undirected shadow.
pub fn triangles_per_node(graph: &RefGraph) -> Vec<u64> {
    let und = graph.undirected();
    let n = und.node_count();
    // orient each edge from lower to higher (degree, id) rank
    let rank_less = |a: usize, b: usize| (und.degree(a), a) < (und.degree(b), b);
    let forward: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|u| und.neighbors(u).iter().copied().filter(|&v| rank_less(u, v as usize)).collect())
        .collect();
    let chunk = 4096usize;
    let partials: Vec<Vec<u64>> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut tri = vec![0u64; n];
            let mut mark = vec![false; n];
            for u in c * chunk..((c + 1) * chunk).min(n) {
                for &v in &forward[u] {
                    mark[v as usize] = true;
                }
                for &v in &forward[u] {
                    for &w in &forward[v as usize] {
                        if mark[w as usize] {
                            tri[u] += 1;
                            tri[v as usize] += 1;
                            tri[w as usize] += 1;
                        }
                    }
                }
                for &v in &forward[u] {
                    mark[v as usize] = false;
                }
            }
            tri
        })
        .collect();
    let mut tri = vec![0u64; n];
    for p in partials {
        for (t, x) in tri.iter_mut().zip(p) {
            *t += x;
        }
    }
    tri
}

/// Global and local clustering on the undirected shadow.
pub fn clustering(graph: &RefGraph) -> Result<ClusteringReport, MetricError> {
    let und = graph.undirected();
    let n = und.node_count();
    let tri = triangles_per_node(graph);
    let (mut triples, mut tri_sum, mut local_sum, mut with_pairs) = (0u64, 0u64, 0.0f64, 0u64);
    for (u, &t) in tri.iter().enumerate() {
        let k = und.degree(u) as u64;
        tri_sum += t;
        if k >= 2 {
            let pairs = k * (k - 1) / 2;
            triples += pairs;
            local_sum += t as f64 / pairs as f64;
            with_pairs += 1;
        }
    }
    if with_pairs == 0 {
        return Err(MetricError::Undefined("clustering (no node of degree >= 2)"));
    }
    let mean_degree = 2.0 * und.edge_count() as f64 / n as f64;
    Ok(ClusteringReport {
        global_c: tri_sum as f64 / triples as f64,
        local_c: local_sum / with_pairs as f64,
        er_expected: if n > 1 { mean_degree / (n as f64 - 1.0) } else { 0.0 },
        triangles: tri_sum / 3,
        connected_triples: triples,
        nodes_with_pairs: with_pairs,
        mean_degree,
    })
}

/// Standard error of global clustering under an ER graph of density `p`
/// with `triples` connected triples, treating triangles as Poisson:
/// `√(3·p(1 − p)/triples)`.
pub fn er_global_clustering_se(p: f64, triples: u64) -> f64 {
    (3.0 * p * (1.0 - p) / triples as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeSide {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssortativityReport {
    /// corr(in(source), in(target)) over directed edges.
    pub r_in_in: Option<f64>,
    /// corr(in(source), out(target)).
    pub r_in_out: Option<f64>,
    /// corr(out(source), in(target)).
    pub r_out_in: Option<f64>,
    /// corr(out(source), out(target)).
    pub r_out_out: Option<f64>,
    /// Degree correlation on the undirected shadow, each edge counted both ways.
    pub r_undirected: Option<f64>,
    pub n_edges: u64,
    /// `(n_edges − 3)^(−1/2)`: standard error of the Fisher transform of r.
    pub fisher_se: Option<f64>,
}

impl AssortativityReport {
    pub fn get(&self, a: DegreeSide, b: DegreeSide) -> Option<f64> {
        match (a, b) {
            (DegreeSide::In, DegreeSide::In) => self.r_in_in,
            (DegreeSide::In, DegreeSide::Out) => self.r_in_out,
            (DegreeSide::Out, DegreeSide::In) => self.r_out_in,
            (DegreeSide::Out, DegreeSide::Out) => self.r_out_out,
        }
    }
}

/// Fisher z-score of a correlation `r` estimated from `n` pairs:
/// `0.5·ln((1 + r)/(1 − r))·√(n − 3)`.
pub fn fisher_z(r: f64, n: u64) -> f64 {
    0.5 * ((1.0 + r) / (1.0 - r)).ln() * ((n as f64) - 3.0).sqrt()
}

/// One directed assortativity coefficient.
pub fn directed_assortativity(graph: &RefGraph, source: DegreeSide, target: DegreeSide) -> Option<f64> {
    let deg = |side: DegreeSide, u: usize| match side {
        DegreeSide::In => graph.in_degree(u) as f64,
        DegreeSide::Out => graph.out_degree(u) as f64,
    };
    pearson_iter(|| graph.edges().map(|(u, v, _)| (deg(source, u as usize), deg(target, v as usize))))
}

pub fn undirected_assortativity(graph: &RefGraph) -> Option<f64> {
    let und = graph.undirected();
    pearson_iter(|| {
        (0..und.node_count()).flat_map(move |u| {
            und.neighbors(u).iter().map(move |&v| (und.degree(u) as f64, und.degree(v as usize) as f64))
        })
    })
}

pub fn assortativity(graph: &RefGraph) -> AssortativityReport {
    use DegreeSide::*;
    let m = graph.edge_count() as u64;
    AssortativityReport {
        r_in_in: directed_assortativity(graph, In, In),
        r_in_out: directed_assortativity(graph, In, Out),
        r_out_in: directed_assortativity(graph, Out, In),
        r_out_out: directed_assortativity(graph, Out, Out),
        r_undirected: undirected_assortativity(graph),
        n_edges: m,
        fisher_se: (m > 3).then(|| 1.0 / ((m - 3) as f64).sqrt()),
    }
}

/// Pearson correlation of in- and out-degree over nodes.
pub fn self_degree_correlation(graph: &RefGraph, weighted: bool) -> Result<f64, MetricError> {
    let d = degree_stats(graph, weighted);
    pearson_iter(|| d.in_degrees.iter().zip(&d.out_degrees).map(|(&a, &b)| (a as f64, b as f64)))
        .ok_or(MetricError::Undefined("self-degree correlation"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocityReport {
    /// corr(w_uv, w_vu) over mutual pairs, symmetrised.
    pub corr: Option<f64>,
    /// `corr²`, the R² of the simple regression of one direction on the other.
    pub r_squared: Option<f64>,
    pub mutual_pairs: u64,
    pub asymmetric_pairs: u64,
    /// mutual / (mutual + asymmetric).
    pub bidirectional_fraction: Option<f64>,
}

/// Weight reciprocity over mutually connected pairs plus the dyad split.
///
/// Each mutual pair contributes both `(w_uv, w_vu)` and `(w_vu, w_uv)`, so the
/// coefficient does not depend on which endpoint is listed first.
pub fn reciprocity(graph: &RefGraph) -> ReciprocityReport {
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (u, v, w) in graph.edges() {
        if u < v {
            if let Some(back) = graph.edge_weight(v as usize, u as usize) {
                pairs.push((w.min(back) as f64, w.max(back) as f64));
            }
        }
    }
    let mutual = pairs.len() as u64;
    let asymmetric = graph.edge_count() as u64 - 2 * mutual;
    let corr = pearson_iter(|| pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]));
    let total = mutual + asymmetric;
    ReciprocityReport {
        corr,
        r_squared: corr.map(|r| r * r),
        mutual_pairs: mutual,
        asymmetric_pairs: asymmetric,
        bidirectional_fraction: (total > 0).then(|| mutual as f64 / total as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Six-physician example: A=0 .. F=5. A has in-degree 2 and out-degree 3,
    /// F has in-degree 1 and out-degree 0; A–D and B–E illustrate mutual and
    /// one-directional dyads; A, B, C form a triangle; A, C, F an open triple.
    pub(crate) fn six_node_example() -> RefGraph {
        let e = vec![
            (0, 1, 1), // A→B
            (0, 2, 1), // A→C
            (0, 3, 1), // A→D
            (3, 0, 1), // D→A
            (1, 2, 1), // B→C
            (2, 0, 1), // C→A
            (1, 4, 1), // B→E
            (2, 5, 1), // C→F
        ];
        RefGraph::from_edges(6, e).unwrap()
    }

    #[test]
    fn example_degrees() {
        let g = six_node_example();
        let d = degree_stats(&g, false);
        assert_eq!((d.in_degrees[0], d.out_degrees[0]), (2, 3));
        assert_eq!((d.in_degrees[5], d.out_degrees[5]), (1, 0));
    }

    #[test]
    fn weighted_degree_of_single_edge() {
        let g = RefGraph::from_edges(2, vec![(0, 1, 7)]).unwrap();
        let d = degree_stats(&g, true);
        assert_eq!((d.out_degrees[0], d.in_degrees[1]), (7, 7));
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5.0; 4]).unwrap(), 0.0);
        assert!((gini(&[0.0, 0.0, 0.0, 1.0]).unwrap() - 0.75).abs() < 1e-15);
        assert!(gini(&[0.0, 0.0]).is_err());
        assert!(gini(&[]).is_err());
        assert!(gini(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn triangle_and_star_clustering() {
        let tri = RefGraph::from_edges(3, vec![(0, 1, 1), (1, 2, 1), (2, 0, 1)]).unwrap();
        let c = clustering(&tri).unwrap();
        assert_eq!((c.global_c, c.local_c), (1.0, 1.0));
        let star = RefGraph::from_edges(5, (1..5).map(|i| (0, i, 1)).collect()).unwrap();
        let c = clustering(&star).unwrap();
        assert_eq!((c.global_c, c.local_c), (0.0, 0.0));
        assert!((c.er_expected - (8.0 / 5.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn clustering_undefined_without_pairs() {
        let g = RefGraph::from_edges(4, vec![(0, 1, 1), (2, 3, 1)]).unwrap();
        assert!(clustering(&g).is_err());
    }

    #[test]
    fn regular_cycle_assortativity_undefined() {
        let g = RefGraph::from_edges(
            4,
            vec![(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1), (1, 0, 1), (2, 1, 1), (3, 2, 1), (0, 3, 1)],
        )
        .unwrap();
        let a = assortativity(&g);
        assert!(a.r_in_in.is_none() && a.r_out_out.is_none() && a.r_undirected.is_none());
    }

    #[test]
    fn balanced_degrees_give_unit_self_correlation() {
        let g = RefGraph::from_edges(
            4,
            vec![(0, 1, 1), (1, 0, 1), (1, 2, 1), (2, 1, 1), (0, 2, 1), (2, 0, 1), (2, 3, 1), (3, 2, 1)],
        )
        .unwrap();
        assert!((self_degree_correlation(&g, false).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_weights_give_unit_reciprocity() {
        let g =
            RefGraph::from_edges(4, vec![(0, 1, 3), (1, 0, 3), (1, 2, 5), (2, 1, 5), (2, 3, 1), (3, 2, 1), (0, 3, 9)])
                .unwrap();
        let r = reciprocity(&g);
        assert!((r.corr.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!((r.mutual_pairs, r.asymmetric_pairs), (3, 1));
        assert!((r.bidirectional_fraction.unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn no_mutual_pairs_leaves_corr_undefined() {
        let g = RefGraph::from_edges(3, vec![(0, 1, 1), (1, 2, 1)]).unwrap();
        assert!(reciprocity(&g).corr.is_none());
    }
}
