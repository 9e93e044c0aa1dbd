//! Core-periphery scores from an aggregate of Rombach-style fits.
//!
//! For each `(α, β)` on a grid, nodes are placed in positions `1..=N` (higher
//! is more core) and annealing searches for the order maximising
//! `R = Σ_{edges} A_ij C_i C_j`, where `C` is the transition profile: the
//! lowest `N − ⌊βN⌋` positions climb linearly from 0 to `(1 − α)/2`, then
//! jump to `(1 + α)/2` and climb linearly to 1. A node's score is
//! `Σ_settings C_i · R`, normalised so the maximum is 1. Disconnected graphs
//! are fitted per component and the raw scores merged before normalising.

use crate::graph::{induced_subgraph, weak_components, NodeId, PhysicianRegistry, RefGraph};
use crate::metrics::gini;
use crate::rng::{derive_seed, stream_rng};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CpError {
    #[error("graph has no nodes")]
    Empty,
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpConfig {
    /// Sharpness of the jump between periphery and core values.
    pub alpha_grid: Vec<f64>,
    /// Core size as a fraction of the component.
    pub beta_grid: Vec<f64>,
    /// Annealing proposals per node and setting.
    pub iterations_per_node: usize,
    /// Final temperature as a fraction of the initial one.
    pub final_temperature_ratio: f64,
    pub seed: u64,
    /// Use summed edge weights for `A_ij` instead of presence.
    pub weighted: bool,
}

impl Default for CpConfig {
    fn default() -> Self {
        CpConfig {
            alpha_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            beta_grid: (1..=9).map(|i| i as f64 / 10.0).collect(),
            iterations_per_node: 10_000,
            final_temperature_ratio: 1e-4,
            seed: 0,
            weighted: false,
        }
    }
}

impl CpConfig {
    fn validate(&self) -> Result<(), CpError> {
        if self.alpha_grid.is_empty() || self.beta_grid.is_empty() {
            return Err(CpError::Config("parameter grids must be nonempty".into()));
        }
        if self.alpha_grid.iter().chain(&self.beta_grid).any(|x| !(0.0..=1.0).contains(x)) {
            return Err(CpError::Config("grid values must lie in [0, 1]".into()));
        }
        if !(self.final_temperature_ratio > 0.0 && self.final_temperature_ratio <= 1.0) {
            return Err(CpError::Config("final_temperature_ratio must lie in (0, 1]".into()));
        }
        Ok(())
    }

    fn settings(&self) -> Vec<(f64, f64)> {
        let mut s = Vec::new();
        for &a in &self.alpha_grid {
            for &b in &self.beta_grid {
                s.push((a, b));
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpReport {
    pub cp_score: Vec<f64>,
    pub gini_cp: f64,
    /// The single node scoring exactly 1.0.
    pub core_node: NodeId,
    /// Entropy (natural log) of the top-ranked node across settings.
    pub core_entropy: f64,
    /// Top-ranked node under each `(α, β)` setting, in grid order.
    pub top_by_setting: Vec<NodeId>,
    /// Nodes that tied for the maximum before the tie-break.
    pub tied_at_max: usize,
}

/// Transition profile value at 1-based `position` among `n`.
pub fn transition_profile(position: usize, n: usize, alpha: f64, beta: f64) -> f64 {
    let periphery = n - (beta * n as f64).floor() as usize;
    let i = position as f64;
    if position <= periphery {
        i * (1.0 - alpha) / (2.0 * periphery as f64)
    } else {
        (i - periphery as f64) * (1.0 - alpha) / (2.0 * (n - periphery) as f64) + (1.0 + alpha) / 2.0
    }
}

/// Symmetric weighted adjacency of a component in CSR form.
struct Sym {
    offsets: Vec<usize>,
    nbr: Vec<u32>,
    w: Vec<f64>,
}

impl Sym {
    fn new(g: &RefGraph, weighted: bool) -> Sym {
        let und = g.undirected();
        let n = g.node_count();
        let mut offsets = vec![0usize];
        let mut nbr = Vec::new();
        let mut w = Vec::new();
        for u in 0..n {
            for &v in und.neighbors(u) {
                nbr.push(v);
                w.push(if weighted {
                    (g.edge_weight(u, v as usize).unwrap_or(0) + g.edge_weight(v as usize, u).unwrap_or(0)) as f64
                } else {
                    1.0
                });
            }
            offsets.push(nbr.len());
        }
        Sym { offsets, nbr, w }
    }

    fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.nbr[r.clone()].iter().map(|&v| v as usize).zip(self.w[r].iter().copied())
    }

    fn weight(&self, u: usize, v: usize) -> f64 {
        let r = self.offsets[u]..self.offsets[u + 1];
        match self.nbr[r.clone()].binary_search(&(v as u32)) {
            Ok(k) => self.w[r.start + k],
            Err(_) => 0.0,
        }
    }
}

/// Best order found for one setting: `(position of each node (1-based), R)`.
fn anneal(
    sym: &Sym,
    start: &[usize],
    profile: &[f64],
    proposals: usize,
    t_ratio: f64,
    rng: &mut impl Rng,
) -> (Vec<usize>, f64) {
    let n = start.len();
    let mut order = start.to_vec(); // order[p] = node at position p + 1
    let mut pos = vec![0usize; n];
    for (p, &u) in order.iter().enumerate() {
        pos[u] = p;
    }
    let c = |p: usize| profile[p];
    let mut s = vec![0.0f64; n];
    for u in 0..n {
        s[u] = sym.row(u).map(|(v, a)| a * c(pos[v])).sum();
    }
    let mut r: f64 = (0..n).map(|u| c(pos[u]) * s[u]).sum::<f64>() / 2.0;
    let (mut best_r, mut best_pos) = (r, pos.clone());
    if n < 2 || proposals == 0 {
        return (best_pos.iter().map(|p| p + 1).collect(), best_r);
    }
    let delta = |s: &[f64], pa: usize, pb: usize, u: usize, v: usize| {
        let d = c(pb) - c(pa);
        d * (s[u] - s[v]) - sym.weight(u, v) * d * d
    };
    // initial temperature from the spread of random moves
    let mut t0 = 0.0f64;
    for _ in 0..64.min(proposals) {
        let (pa, pb) = (rng.gen_range(0..n), rng.gen_range(0..n));
        t0 = t0.max(delta(&s, pa, pb, order[pa], order[pb]).abs());
    }
    if t0 == 0.0 {
        t0 = 1e-9;
    }
    let cooling = t_ratio.powf(1.0 / proposals as f64);
    let mut t = t0;
    for _ in 0..proposals {
        let pa = rng.gen_range(0..n);
        let mut pb = rng.gen_range(0..n - 1);
        if pb >= pa {
            pb += 1;
        }
        let (u, v) = (order[pa], order[pb]);
        let dr = delta(&s, pa, pb, u, v);
        if dr >= 0.0 || rng.gen::<f64>() < (dr / t).exp() {
            let d = c(pb) - c(pa);
            for (x, a) in sym.row(u) {
                s[x] += a * d;
            }
            for (x, a) in sym.row(v) {
                s[x] -= a * d;
            }
            order.swap(pa, pb);
            pos[u] = pb;
            pos[v] = pa;
            r += dr;
            if r > best_r + 1e-12 {
                best_r = r;
                best_pos.copy_from_slice(&pos);
            }
        }
        t *= cooling;
    }
    (best_pos.iter().map(|p| p + 1).collect(), best_r)
}

/// Groups of nodes with identical open or closed neighbourhoods.
fn equivalence_classes(sym: &Sym, n: usize) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
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
    for closed in [false, true] {
        let mut seen: HashMap<Vec<(u32, u64)>, usize> = HashMap::new();
        for u in 0..n {
            // closed neighbourhoods compare on presence only
            let mut key: Vec<(u32, u64)> =
                sym.row(u).map(|(v, a)| (v as u32, if closed { 0 } else { a.to_bits() })).collect();
            if closed {
                key.push((u as u32, 0));
                key.sort_unstable();
            }
            match seen.get(&key) {
                Some(&first) => {
                    let (a, b) = (find(&mut parent, first), find(&mut parent, u));
                    parent[b.max(a)] = a.min(b);
                }
                None => {
                    seen.insert(key, u);
                }
            }
        }
    }
    (0..n).map(|u| find(&mut parent, u)).collect()
}

/// Raw (unnormalised) scores of one connected component and its top node per setting.
fn component_scores(
    g: &RefGraph,
    config: &CpConfig,
    settings: &[(f64, f64)],
    seed: u64,
) -> (Vec<f64>, Vec<(usize, f64)>) {
    let n = g.node_count();
    let sym = Sym::new(g, config.weighted);
    let mut start: Vec<usize> = (0..n).collect();
    let deg: Vec<f64> = (0..n).map(|u| sym.row(u).map(|(_, a)| a).sum()).collect();
    start.sort_by(|&a, &b| deg[a].total_cmp(&deg[b]).then(b.cmp(&a)));
    let proposals = config.iterations_per_node.saturating_mul(n);
    let per_setting: Vec<(Vec<usize>, f64)> = settings
        .par_iter()
        .enumerate()
        .map(|(k, &(alpha, beta))| {
            let profile: Vec<f64> = (1..=n).map(|p| transition_profile(p, n, alpha, beta)).collect();
            let mut rng = stream_rng(seed, k as u64);
            anneal(&sym, &start, &profile, proposals, config.final_temperature_ratio, &mut rng)
        })
        .collect();
    let mut raw = vec![0.0f64; n];
    let mut tops = Vec::with_capacity(settings.len());
    for (k, (positions, r)) in per_setting.iter().enumerate() {
        let (alpha, beta) = settings[k];
        let mut top = (0usize, f64::NEG_INFINITY);
        for u in 0..n {
            let v = transition_profile(positions[u], n, alpha, beta) * r;
            raw[u] += v;
            if v > top.1 {
                top = (u, v);
            }
        }
        tops.push(top);
    }
    let class = equivalence_classes(&sym, n);
    let mut sums: HashMap<usize, (f64, usize)> = HashMap::new();
    for u in 0..n {
        let e = sums.entry(class[u]).or_insert((0.0, 0));
        e.0 += raw[u];
        e.1 += 1;
    }
    for u in 0..n {
        let (s, c) = sums[&class[u]];
        raw[u] = s / c as f64;
    }
    (raw, tops)
}

/// Largest double strictly below 1.0.
pub const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

pub fn cp_scores(graph: &RefGraph, config: &CpConfig) -> Result<CpReport, CpError> {
    config.validate()?;
    let n = graph.node_count();
    if n == 0 {
        return Err(CpError::Empty);
    }
    let settings = config.settings();
    let mut raw = vec![0.0f64; n];
    let mut tops: Vec<(usize, f64)> = vec![(usize::MAX, f64::NEG_INFINITY); settings.len()];
    for (ci, comp) in weak_components(graph).iter().enumerate() {
        let sub = if comp.len() == n { None } else { Some(induced_subgraph(graph, comp)) };
        let g = sub.as_ref().unwrap_or(graph);
        let (local, local_tops) = component_scores(g, config, &settings, derive_seed(config.seed, ci as u64));
        for (i, v) in local.into_iter().enumerate() {
            raw[comp[i].index()] = v;
        }
        for (slot, (u, v)) in tops.iter_mut().zip(local_tops) {
            let u = comp[u].index();
            if v > slot.1 || (v == slot.1 && u < slot.0) {
                *slot = (u, v);
            }
        }
    }
    let max = raw.iter().cloned().fold(0.0f64, f64::max);
    let mut cp_score: Vec<f64> = if max > 0.0 { raw.iter().map(|&x| x / max).collect() } else { vec![1.0; n] };
    let tied: Vec<usize> = (0..n).filter(|&u| cp_score[u] >= 1.0 - 1e-12).collect();
    let strength = |u: usize| graph.out_strength(u) + graph.in_strength(u);
    let core = *tied.iter().max_by(|&&a, &&b| strength(a).cmp(&strength(b)).then(b.cmp(&a))).unwrap();
    for &u in &tied {
        cp_score[u] = if u == core { 1.0 } else { BELOW_ONE };
    }
    let top_by_setting: Vec<NodeId> = tops.iter().map(|&(u, _)| NodeId(u as u32)).collect();
    Ok(CpReport {
        gini_cp: gini(&cp_score).unwrap_or(0.0),
        cp_score,
        core_node: NodeId(core as u32),
        core_entropy: entropy(&top_by_setting),
        top_by_setting,
        tied_at_max: tied.len(),
    })
}

/// Natural-log entropy of the empirical distribution of `labels`.
pub fn entropy<T: Ord + Copy>(labels: &[T]) -> f64 {
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    let n = labels.len() as f64;
    let h: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

pub fn gini_of_cp(report: &CpReport) -> f64 {
    report.gini_cp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossState {
    pub n_states_reached: usize,
    pub n_cross_referrals: u64,
    /// Neighbour edges skipped because the neighbour has no state.
    pub unlabeled_excluded: usize,
}

/// External-state reach of `core` (a national node) over in- and out-edges.
pub fn core_cross_state(core: NodeId, national: &RefGraph, registry: &PhysicianRegistry) -> CrossState {
    let home = registry.state_of(core);
    let mut reached = BTreeSet::new();
    let (mut weight, mut unlabeled) = (0u64, 0usize);
    let edges = national.out_neighbors(core).chain(national.in_neighbors(core));
    for (v, w) in edges {
        match registry.state_of(v) {
            None => unlabeled += 1,
            Some(s) if Some(s) != home => {
                reached.insert(s);
                weight += w;
            }
            Some(_) => {}
        }
    }
    CrossState { n_states_reached: reached.len(), n_cross_referrals: weight, unlabeled_excluded: unlabeled }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Npi;
    use crate::states::StateCode;

    fn und(n: usize, pairs: &[(u32, u32)]) -> RefGraph {
        let mut e = Vec::new();
        for &(a, b) in pairs {
            e.push((a, b, 1));
            e.push((b, a, 1));
        }
        RefGraph::from_edges(n, e).unwrap()
    }

    fn quick() -> CpConfig {
        CpConfig { iterations_per_node: 500, ..CpConfig::default() }
    }

    #[test]
    fn profile_endpoints() {
        let n = 10;
        assert!((transition_profile(n, n, 0.3, 0.5) - 1.0).abs() < 1e-12);
        assert!(transition_profile(1, n, 0.3, 0.5) > 0.0);
        assert!((transition_profile(5, n, 0.0, 0.5) - 0.5).abs() < 1e-12);
        assert!((transition_profile(6, n, 1.0, 0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn star_hub_is_core() {
        let pairs: Vec<(u32, u32)> = (1..=10).map(|i| (0, i)).collect();
        let r = cp_scores(&und(11, &pairs), &quick()).unwrap();
        assert_eq!(r.core_node, NodeId(0));
        assert_eq!(r.cp_score[0], 1.0);
        let leaf = r.cp_score[1];
        assert!(leaf < 1.0);
        assert!(r.cp_score[1..].iter().all(|&x| x == leaf));
        assert_eq!(r.core_entropy, 0.0);
    }

    #[test]
    fn complete_graph_is_flat() {
        let mut pairs = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                pairs.push((a, b));
            }
        }
        let r = cp_scores(&und(5, &pairs), &quick()).unwrap();
        assert_eq!(r.cp_score.iter().filter(|&&x| x == 1.0).count(), 1);
        assert!(r.cp_score.iter().all(|&x| x >= BELOW_ONE));
        assert!(r.gini_cp < 1e-12);
    }

    #[test]
    fn single_node() {
        let r = cp_scores(&RefGraph::empty(1), &quick()).unwrap();
        assert_eq!(r.cp_score, vec![1.0]);
        assert_eq!(cp_scores(&RefGraph::empty(0), &quick()), Err(CpError::Empty));
    }

    #[test]
    fn rejects_bad_grid() {
        let c = CpConfig { alpha_grid: vec![1.5], ..quick() };
        assert!(cp_scores(&RefGraph::empty(3), &c).is_err());
    }

    #[test]
    fn entropy_of_labels() {
        assert_eq!(entropy(&[3, 3, 3]), 0.0);
        assert!((entropy(&[1, 2]) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn cross_state_counts() {
        // core 0 (NH) with neighbours in VT, VT, ME and one in NH, one unlabeled
        let g = RefGraph::from_edges(6, vec![(0, 1, 2), (2, 0, 3), (0, 3, 4), (0, 4, 7), (5, 0, 1)]).unwrap();
        let s = |c| Some(StateCode::new(c).unwrap());
        let npis = (0..6).map(|i| Npi::from_value(1_000_000_000 + i).unwrap()).collect();
        let reg = PhysicianRegistry::with_states(npis, vec![s("NH"), s("VT"), s("VT"), s("ME"), s("NH"), None]);
        let c = core_cross_state(NodeId(0), &g, &reg);
        assert_eq!((c.n_states_reached, c.n_cross_referrals, c.unlabeled_excluded), (2, 9, 1));
        let local = RefGraph::from_edges(6, vec![(0, 4, 1)]).unwrap();
        let c = core_cross_state(NodeId(0), &local, &reg);
        assert_eq!((c.n_states_reached, c.n_cross_referrals), (0, 0));
    }
}
