//! Dyad and triad censuses.
//!
//! Triad classes are numbered 1..=16 in the order
//! 003, 012, 102, 021D, 021U, 021C, 111D, 111U, 030T, 030C, 201, 120D, 120U,
//! 120C, 210, 300. Edge weights are ignored.

use crate::graph::RefGraph;
use crate::rng::stream_rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const TRIAD_NAMES: [&str; 16] = [
    "003", "012", "102", "021D", "021U", "021C", "111D", "111U", "030T", "030C", "201", "120D", "120U", "120C", "210",
    "300",
];

/// Class (1-based) for each 6-bit edge code. Bits: 0 a→b, 1 b→a, 2 a→c,
/// 3 c→a, 4 b→c, 5 c→b.
const TRICODES: [u8; 64] = [
    1, 2, 2, 3, 2, 4, 6, 8, 2, 6, 5, 7, 3, 8, 7, 11, 2, 6, 4, 8, 5, 9, 9, 13, 6, 10, 9, 14, 7, 14, 12, 15, 2, 5, 6, 7,
    6, 9, 10, 14, 4, 9, 9, 12, 8, 13, 14, 15, 3, 7, 8, 11, 7, 12, 14, 15, 8, 14, 13, 15, 11, 15, 15, 16,
];

/// Largest `C(n,3)` the exact census accepts.
pub const EXACT_TRIPLE_LIMIT: u128 = 1_000_000_000;
pub const MIN_MC_SAMPLES: u64 = 10_000;
const MC_BLOCK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TriadClass(u8);

impl TriadClass {
    pub fn new(id: u8) -> Option<Self> {
        (1..=16).contains(&id).then_some(TriadClass(id))
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        TRIAD_NAMES[self.0 as usize - 1]
    }
}

impl std::fmt::Display for TriadClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "T{} ({})", self.0, self.name())
    }
}

pub fn classify_triad(code: u8) -> TriadClass {
    TriadClass(TRICODES[(code & 0x3f) as usize])
}

#[inline]
fn tricode(g: &RefGraph, a: usize, b: usize, c: usize) -> u8 {
    (g.has_edge(a, b) as u8)
        | (g.has_edge(b, a) as u8) << 1
        | (g.has_edge(a, c) as u8) << 2
        | (g.has_edge(c, a) as u8) << 3
        | (g.has_edge(b, c) as u8) << 4
        | (g.has_edge(c, b) as u8) << 5
}

/// Class of the triad on nodes `a, b, c` of `graph`.
pub fn triad_of(graph: &RefGraph, a: usize, b: usize, c: usize) -> TriadClass {
    classify_triad(tricode(graph, a, b, c))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MotifError {
    #[error("exact census needs C(n,3) <= {limit}, graph has {triples} triples")]
    TooLarge { triples: u128, limit: u128 },
    #[error("need at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("need at least {MIN_MC_SAMPLES} Monte Carlo samples, got {0}")]
    TooFewSamples(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriadCensus {
    /// Exact counts, or Monte Carlo estimates scaled to all triples. Index 0 is class 1.
    pub counts: [f64; 16],
    /// Raw per-class tallies; for an exact census these equal the counts.
    pub tallies: [u64; 16],
    /// Standard error of each entry of `counts` (zero when exact).
    pub std_errors: [f64; 16],
    /// 0 for an exact census.
    pub n_samples: u64,
    pub seed: Option<u64>,
    pub total_triples: u128,
}

impl TriadCensus {
    pub fn is_exact(&self) -> bool {
        self.n_samples == 0
    }

    pub fn count(&self, class: u8) -> f64 {
        self.counts[class as usize - 1]
    }

    /// Share of each class among all triples.
    pub fn proportions(&self) -> [f64; 16] {
        let total = if self.is_exact() { self.total_triples as f64 } else { self.n_samples as f64 };
        let mut p = [0.0; 16];
        for (pi, &t) in p.iter_mut().zip(&self.tallies) {
            *pi = if total > 0.0 { t as f64 / total } else { 0.0 };
        }
        p
    }
}

pub fn choose3(n: usize) -> u128 {
    let n = n as u128;
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

fn add16(mut a: [u64; 16], b: [u64; 16]) -> [u64; 16] {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Exact census by enumerating triads around each connected pair; class 1 by subtraction.
pub fn triad_census_exact(graph: &RefGraph) -> Result<TriadCensus, MotifError> {
    let n = graph.node_count();
    let total = choose3(n);
    if total > EXACT_TRIPLE_LIMIT {
        return Err(MotifError::TooLarge { triples: total, limit: EXACT_TRIPLE_LIMIT });
    }
    let und = graph.undirected();
    let tallies = (0..n)
        .into_par_iter()
        .fold(
            || ([0u64; 16], Vec::<u32>::new()),
            |(mut acc, mut s), v| {
                let nv = und.neighbors(v);
                for &u in nv.iter().filter(|&&u| (u as usize) > v) {
                    let u = u as usize;
                    let nu = und.neighbors(u);
                    s.clear();
                    let (mut i, mut j) = (0, 0);
                    while i < nv.len() || j < nu.len() {
                        let x = if j >= nu.len() || (i < nv.len() && nv[i] < nu[j]) {
                            i += 1;
                            nv[i - 1]
                        } else if i >= nv.len() || nu[j] < nv[i] {
                            j += 1;
                            nu[j - 1]
                        } else {
                            i += 1;
                            j += 1;
                            nv[i - 1]
                        };
                        if x as usize != u && x as usize != v {
                            s.push(x);
                        }
                    }
                    let dyad = if graph.has_edge(v, u) && graph.has_edge(u, v) { 2 } else { 1 };
                    acc[dyad] += (n - s.len() - 2) as u64;
                    for &w in &s {
                        let w = w as usize;
                        if u < w || (v < w && w < u && !und.adjacent(v, w)) {
                            acc[TRICODES[tricode(graph, v, u, w) as usize] as usize - 1] += 1;
                        }
                    }
                }
                (acc, s)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(|| [0u64; 16], add16);
    let mut tallies = tallies;
    let nonempty: u64 = tallies[1..].iter().sum();
    tallies[0] = (total - nonempty as u128) as u64;
    let mut counts = [0.0; 16];
    for (c, &t) in counts.iter_mut().zip(&tallies) {
        *c = t as f64;
    }
    Ok(TriadCensus { counts, tallies, std_errors: [0.0; 16], n_samples: 0, seed: None, total_triples: total })
}

fn distinct_triple<R: Rng>(rng: &mut R, n: usize) -> (usize, usize, usize) {
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mut c = rng.gen_range(0..n - 2);
    if c >= lo {
        c += 1;
    }
    if c >= hi {
        c += 1;
    }
    (a, b, c)
}

/// Monte Carlo census from `n_samples` uniformly drawn node triples.
pub fn triad_census_mc(graph: &RefGraph, n_samples: u64, seed: u64) -> Result<TriadCensus, MotifError> {
    let n = graph.node_count();
    if n < 3 {
        return Err(MotifError::TooFewNodes(n));
    }
    if n_samples < MIN_MC_SAMPLES {
        return Err(MotifError::TooFewSamples(n_samples));
    }
    let blocks = n_samples.div_ceil(MC_BLOCK);
    let tallies = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let len = MC_BLOCK.min(n_samples - b * MC_BLOCK);
            let mut acc = [0u64; 16];
            for _ in 0..len {
                let (x, y, z) = distinct_triple(&mut rng, n);
                acc[TRICODES[tricode(graph, x, y, z) as usize] as usize - 1] += 1;
            }
            acc
        })
        .reduce(|| [0u64; 16], add16);
    let total = choose3(n);
    let scale = total as f64 / n_samples as f64;
    let mut counts = [0.0; 16];
    let mut std_errors = [0.0; 16];
    for k in 0..16 {
        let p = tallies[k] as f64 / n_samples as f64;
        counts[k] = tallies[k] as f64 * scale;
        std_errors[k] = (n_samples as f64 * p * (1.0 - p)).sqrt() * scale;
    }
    Ok(TriadCensus { counts, tallies, std_errors, n_samples, seed: Some(seed), total_triples: total })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadCensus {
    pub null: u128,
    pub asymmetric: u64,
    pub mutual: u64,
}

impl DyadCensus {
    /// Mutual share among connected pairs.
    pub fn mutual_fraction(&self) -> Option<f64> {
        let c = self.asymmetric + self.mutual;
        (c > 0).then(|| self.mutual as f64 / c as f64)
    }
}

pub fn dyad_census(graph: &RefGraph) -> DyadCensus {
    let n = graph.node_count() as u128;
    let mutual: u64 = (0..graph.node_count())
        .into_par_iter()
        .map(|u| {
            graph.out_targets(u).iter().filter(|&&v| (v as usize) > u && graph.has_edge(v as usize, u)).count() as u64
        })
        .sum();
    let asymmetric = graph.edge_count() as u64 - 2 * mutual;
    let pairs = if n < 2 { 0 } else { n * (n - 1) / 2 };
    DyadCensus { null: pairs - asymmetric as u128 - mutual as u128, asymmetric, mutual }
}
