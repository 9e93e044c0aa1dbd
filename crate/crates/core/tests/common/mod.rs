//! Brute-force reference implementations used by several test binaries.
#![allow(dead_code)]

use proptest::prelude::*;
use refnet::graph::RefGraph;
use std::collections::{BTreeMap, VecDeque};

/// Dense adjacency: `w[u][v]` is the edge weight or 0.
pub struct Dense {
    pub n: usize,
    pub w: Vec<Vec<u64>>,
}

impl Dense {
    pub fn from_edges(n: usize, edges: &[(u32, u32, u64)]) -> Dense {
        let mut w = vec![vec![0u64; n]; n];
        for &(u, v, x) in edges {
            w[u as usize][v as usize] += x;
        }
        Dense { n, w }
    }

    pub fn arc(&self, u: usize, v: usize) -> bool {
        self.w[u][v] > 0
    }

    pub fn linked(&self, u: usize, v: usize) -> bool {
        u != v && (self.arc(u, v) || self.arc(v, u))
    }

    pub fn und_degree(&self, u: usize) -> usize {
        (0..self.n).filter(|&v| self.linked(u, v)).count()
    }

    pub fn out_degree(&self, u: usize) -> usize {
        (0..self.n).filter(|&v| self.arc(u, v)).count()
    }

    pub fn in_degree(&self, u: usize) -> usize {
        (0..self.n).filter(|&v| self.arc(v, u)).count()
    }
}

/// Random directed weighted edge lists without self-loops; parallel pairs allowed.
pub fn edge_list(max_n: usize, max_m: usize) -> impl Strategy<Value = (usize, Vec<(u32, u32, u64)>)> {
    (2..=max_n).prop_flat_map(move |n| {
        let e = (0..n as u32, 0..n as u32, 1u64..20).prop_filter("no self-loop", |(u, v, _)| u != v);
        (Just(n), proptest::collection::vec(e, 0..=max_m))
    })
}

pub fn graph_of(n: usize, edges: &[(u32, u32, u64)]) -> RefGraph {
    RefGraph::from_edges(n, edges.to_vec()).unwrap()
}

pub fn pearson(xs: &[(f64, f64)]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in xs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Triangles through each node by enumerating all triples.
pub fn triangles_brute(d: &Dense) -> Vec<u64> {
    let mut t = vec![0u64; d.n];
    for a in 0..d.n {
        for b in a + 1..d.n {
            for c in b + 1..d.n {
                if d.linked(a, b) && d.linked(b, c) && d.linked(a, c) {
                    t[a] += 1;
                    t[b] += 1;
                    t[c] += 1;
                }
            }
        }
    }
    t
}

/// Weakly connected components via union-find, each sorted, listed by smallest member.
pub fn components_uf(d: &Dense) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..d.n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for u in 0..d.n {
        for v in 0..d.n {
            if d.arc(u, v) {
                let (a, b) = (find(&mut parent, u), find(&mut parent, v));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for u in 0..d.n {
        let r = find(&mut parent, u);
        groups.entry(r).or_default().push(u);
    }
    groups.into_values().collect()
}

/// Largest finite shortest-path length over all ordered pairs of the undirected shadow.
pub fn diameter_all_pairs(d: &Dense) -> u32 {
    let mut best = 0;
    for s in 0..d.n {
        let mut dist = vec![u32::MAX; d.n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for v in 0..d.n {
                if d.linked(u, v) && dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    best = best.max(dist[v]);
                    q.push_back(v);
                }
            }
        }
    }
    best
}

/// Holland–Leinhardt class name from the dyad structure of `{a, b, c}`.
pub fn triad_name(d: &Dense, a: usize, b: usize, c: usize) -> &'static str {
    let nodes = [a, b, c];
    let pairs = [(a, b), (a, c), (b, c)];
    let mutual = pairs.iter().filter(|&&(x, y)| d.arc(x, y) && d.arc(y, x)).count();
    let asym: Vec<(usize, usize)> = pairs
        .iter()
        .filter_map(|&(x, y)| match (d.arc(x, y), d.arc(y, x)) {
            (true, false) => Some((x, y)),
            (false, true) => Some((y, x)),
            _ => None,
        })
        .collect();
    let out_asym = |x: usize| asym.iter().filter(|e| e.0 == x).count();
    let in_asym = |x: usize| asym.iter().filter(|e| e.1 == x).count();
    match (mutual, asym.len()) {
        (0, 0) => "003",
        (0, 1) => "012",
        (1, 0) => "102",
        (0, 2) => {
            if nodes.iter().any(|&x| out_asym(x) == 2) {
                "021D"
            } else if nodes.iter().any(|&x| in_asym(x) == 2) {
                "021U"
            } else {
                "021C"
            }
        }
        (1, 1) => {
            // the asymmetric arc touches one node of the mutual pair
            let (s, t) = asym[0];
            let in_mutual = |x: usize| pairs.iter().any(|&(p, q)| (p == x || q == x) && d.arc(p, q) && d.arc(q, p));
            if in_mutual(t) && !in_mutual(s) {
                "111D"
            } else {
                "111U"
            }
        }
        (0, 3) => {
            if nodes.iter().all(|&x| out_asym(x) == 1) {
                "030C"
            } else {
                "030T"
            }
        }
        (2, 0) => "201",
        (1, 2) => {
            if nodes.iter().any(|&x| out_asym(x) == 2) {
                "120D"
            } else if nodes.iter().any(|&x| in_asym(x) == 2) {
                "120U"
            } else {
                "120C"
            }
        }
        (2, 1) => "210",
        (3, 0) => "300",
        _ => unreachable!(),
    }
}

pub fn triad_census_brute(d: &Dense) -> BTreeMap<&'static str, u64> {
    let mut out = BTreeMap::new();
    for a in 0..d.n {
        for b in a + 1..d.n {
            for c in b + 1..d.n {
                *out.entry(triad_name(d, a, b, c)).or_insert(0) += 1;
            }
        }
    }
    out
}

/// `(global, local)` clustering of the undirected shadow; local averages nodes of degree ≥ 2.
pub fn clustering_brute(d: &Dense) -> Option<(f64, f64)> {
    let t = triangles_brute(d);
    let (mut tri, mut trip, mut local, mut k2) = (0u64, 0u64, 0.0, 0u64);
    for u in 0..d.n {
        let k = d.und_degree(u) as u64;
        tri += t[u];
        if k >= 2 {
            trip += k * (k - 1) / 2;
            local += t[u] as f64 / (k * (k - 1) / 2) as f64;
            k2 += 1;
        }
    }
    (k2 > 0).then(|| (tri as f64 / trip as f64, local / k2 as f64))
}

/// Pearson correlation over arcs of the source's `a`-degree with the target's `b`-degree.
pub fn assortativity_brute(d: &Dense, source_out: bool, target_out: bool) -> Option<f64> {
    let deg = |out: bool, u: usize| if out { d.out_degree(u) } else { d.in_degree(u) } as f64;
    let mut xs = Vec::new();
    for u in 0..d.n {
        for v in 0..d.n {
            if d.arc(u, v) {
                xs.push((deg(source_out, u), deg(target_out, v)));
            }
        }
    }
    pearson(&xs)
}

pub fn self_degree_brute(d: &Dense) -> Option<f64> {
    let xs: Vec<(f64, f64)> = (0..d.n).map(|u| (d.in_degree(u) as f64, d.out_degree(u) as f64)).collect();
    pearson(&xs)
}

/// Weight correlation over ordered mutual pairs, with mutual and asymmetric pair counts.
pub fn reciprocity_brute(d: &Dense) -> (Option<f64>, u64, u64) {
    let mut xs = Vec::new();
    let (mut mutual, mut asym) = (0u64, 0u64);
    for u in 0..d.n {
        for v in 0..d.n {
            match (d.arc(u, v), d.arc(v, u)) {
                (true, true) => {
                    xs.push((d.w[u][v] as f64, d.w[v][u] as f64));
                    if u < v {
                        mutual += 1;
                    }
                }
                (true, false) => asym += 1,
                _ => {}
            }
        }
    }
    (pearson(&xs), mutual, asym)
}

/// Mean absolute difference over all ordered pairs, halved and divided by the mean.
pub fn gini_brute(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let total: f64 = xs.iter().sum();
    let mut s = 0.0;
    for a in xs {
        for b in xs {
            s += (a - b).abs();
        }
    }
    s / (2.0 * n * n * (total / n))
}
