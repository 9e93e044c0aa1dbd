//! The f1–f31 state-year network features.

use crate::coreperiphery::{core_cross_state, cp_scores, CpConfig, CpReport, CrossState};
use crate::graph::{
    approx_diameter, extract_subnetwork, weak_components, PhysicianRegistry, RefGraph, Subnetwork, SubnetworkKind,
};
use crate::metrics::{assortativity, clustering, degree_stats, gini_u64};
use crate::powerlaw::{fit_powerlaw_with, positive, FitConfig};
use crate::states::StateCode;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io;
use std::path::Path;

pub const N_FEATURES: usize = 31;

pub const FEATURE_DESCRIPTIONS: [&str; N_FEATURES] = [
    "average degree of intrastate network",
    "power-law alpha of intrastate in-degree",
    "Gini of intrastate in-degree",
    "power-law alpha of intrastate out-degree",
    "Gini of intrastate out-degree",
    "diameter of intrastate network",
    "global clustering of intrastate network",
    "local clustering of intrastate network",
    "nodes in intrastate network",
    "edges in intrastate network",
    "undirected assortativity of intrastate network",
    "(in,in) assortativity of intrastate network",
    "(out,out) assortativity of intrastate network",
    "(in,out) assortativity of intrastate network",
    "(out,in) assortativity of intrastate network",
    "Gini of component sizes of induced network",
    "dominant component size of induced network",
    "diameter of induced network",
    "global clustering of induced network",
    "local clustering of induced network",
    "nodes in induced network",
    "edges in induced network",
    "undirected assortativity of induced network",
    "(in,in) assortativity of induced network",
    "(out,out) assortativity of induced network",
    "(in,out) assortativity of induced network",
    "(out,in) assortativity of induced network",
    "Gini of CP scores",
    "entropy of the top CP node across parameter settings",
    "external states reached by the core node",
    "cross-state referrals of the core node",
];

pub fn feature_name(k: usize) -> String {
    format!("f{}", k + 1)
}

/// Parses `"f7"` into index 6.
pub fn feature_index(name: &str) -> Option<usize> {
    let k: usize = name.strip_prefix('f')?.parse().ok()?;
    (1..=N_FEATURES).contains(&k).then(|| k - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageDegree {
    /// `(in + out)` averaged over nodes, i.e. `2·edges/nodes`.
    #[default]
    TotalEndpoints,
    /// `edges/nodes`.
    MeanOutDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpNetwork {
    #[default]
    Intrastate,
    Induced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub average_degree: AverageDegree,
    /// Use weighted degrees for the power-law and Gini features.
    pub weighted_degrees: bool,
    pub diameter_samples: usize,
    pub diameter_seed: u64,
    pub powerlaw: FitConfig,
    pub cp: CpConfig,
    pub cp_network: CpNetwork,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            average_degree: AverageDegree::default(),
            weighted_degrees: false,
            diameter_samples: crate::graph::DEFAULT_DIAMETER_SAMPLES,
            diameter_seed: 0,
            powerlaw: FitConfig::default(),
            cp: CpConfig::default(),
            cp_network: CpNetwork::default(),
        }
    }
}

/// An upstream result, or the reason it is unavailable.
pub type Upstream<T> = Result<T, String>;

/// Per-network measurements feeding one block of features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub nodes: usize,
    pub edges: usize,
    pub average_degree: f64,
    pub alpha_in: Upstream<f64>,
    pub alpha_out: Upstream<f64>,
    pub gini_in: Upstream<f64>,
    pub gini_out: Upstream<f64>,
    pub diameter: Upstream<u32>,
    pub global_c: Upstream<f64>,
    pub local_c: Upstream<f64>,
    pub assort_undirected: Option<f64>,
    pub assort_in_in: Option<f64>,
    pub assort_out_out: Option<f64>,
    pub assort_in_out: Option<f64>,
    pub assort_out_in: Option<f64>,
    pub component_gini: Upstream<f64>,
    pub dominant_component: usize,
}

pub fn summarize_network(g: &RefGraph, config: &FeatureConfig) -> NetworkSummary {
    let n = g.node_count();
    let m = g.edge_count();
    let deg = degree_stats(g, config.weighted_degrees);
    let fit = |d: &[u64]| fit_powerlaw_with(&positive(d), &config.powerlaw).map(|f| f.alpha).map_err(|e| e.to_string());
    let c = clustering(g).map_err(|e| e.to_string());
    let a = assortativity(g);
    let comps = weak_components(g);
    let sizes: Vec<u64> = comps.iter().map(|c| c.len() as u64).collect();
    NetworkSummary {
        nodes: n,
        edges: m,
        average_degree: match config.average_degree {
            _ if n == 0 => 0.0,
            AverageDegree::TotalEndpoints => 2.0 * m as f64 / n as f64,
            AverageDegree::MeanOutDegree => m as f64 / n as f64,
        },
        alpha_in: fit(&deg.in_degrees),
        alpha_out: fit(&deg.out_degrees),
        gini_in: gini_u64(&deg.in_degrees).map_err(|e| e.to_string()),
        gini_out: gini_u64(&deg.out_degrees).map_err(|e| e.to_string()),
        diameter: approx_diameter(g, config.diameter_samples, config.diameter_seed).map_err(|e| e.to_string()),
        global_c: c.clone().map(|r| r.global_c),
        local_c: c.map(|r| r.local_c),
        assort_undirected: a.r_undirected,
        assort_in_in: a.r_in_in,
        assort_out_out: a.r_out_out,
        assort_in_out: a.r_in_out,
        assort_out_in: a.r_out_in,
        component_gini: gini_u64(&sizes).map_err(|e| e.to_string()),
        dominant_component: sizes.first().copied().unwrap_or(0) as usize,
    }
}

/// Everything the feature vector is assembled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReports {
    pub state: StateCode,
    pub year: u16,
    pub intrastate: Upstream<NetworkSummary>,
    pub induced: Upstream<NetworkSummary>,
    pub cp: Upstream<CpSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpSummary {
    pub gini_cp: f64,
    pub core_entropy: f64,
    pub cross: CrossState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFeatureVector {
    pub state: StateCode,
    pub year: u16,
    /// `values[k]` is feature `f{k+1}`; `None` is missing, never zero-filled.
    pub values: Vec<Option<f64>>,
    /// Reason for each missing feature, keyed by feature name.
    pub missing: BTreeMap<String, String>,
}

impl StateFeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).and_then(|k| self.values[k])
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

pub fn build_features(reports: &StateReports) -> StateFeatureVector {
    let mut values: Vec<Option<f64>> = vec![None; N_FEATURES];
    let mut missing = BTreeMap::new();
    let mut set = |k: usize, v: Upstream<f64>| match v {
        Ok(x) if x.is_finite() => values[k - 1] = Some(x),
        Ok(x) => {
            missing.insert(feature_name(k - 1), format!("non-finite value {x}"));
        }
        Err(e) => {
            missing.insert(feature_name(k - 1), e);
        }
    };
    let undefined = |o: Option<f64>| o.ok_or_else(|| "undefined (zero variance or too few edges)".to_string());
    let intra_ids = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];
    match &reports.intrastate {
        Ok(s) => {
            set(1, Ok(s.average_degree));
            set(2, s.alpha_in.clone());
            set(3, s.gini_in.clone());
            set(4, s.alpha_out.clone());
            set(5, s.gini_out.clone());
            set(6, s.diameter.clone().map(f64::from));
            set(7, s.global_c.clone());
            set(8, s.local_c.clone());
            set(9, Ok(s.nodes as f64));
            set(10, Ok(s.edges as f64));
            set(11, undefined(s.assort_undirected));
            set(12, undefined(s.assort_in_in));
            set(13, undefined(s.assort_out_out));
            set(14, undefined(s.assort_in_out));
            set(15, undefined(s.assort_out_in));
        }
        Err(e) => intra_ids.iter().for_each(|&k| set(k, Err(format!("intrastate network: {e}")))),
    }
    match &reports.induced {
        Ok(s) => {
            set(16, s.component_gini.clone());
            set(17, Ok(s.dominant_component as f64));
            set(18, s.diameter.clone().map(f64::from));
            set(19, s.global_c.clone());
            set(20, s.local_c.clone());
            set(21, Ok(s.nodes as f64));
            set(22, Ok(s.edges as f64));
            set(23, undefined(s.assort_undirected));
            set(24, undefined(s.assort_in_in));
            set(25, undefined(s.assort_out_out));
            set(26, undefined(s.assort_in_out));
            set(27, undefined(s.assort_out_in));
        }
        Err(e) => (16..=27).for_each(|k| set(k, Err(format!("induced network: {e}")))),
    }
    match &reports.cp {
        Ok(c) => {
            set(28, Ok(c.gini_cp));
            set(29, Ok(c.core_entropy));
            set(30, Ok(c.cross.n_states_reached as f64));
            set(31, Ok(c.cross.n_cross_referrals as f64));
        }
        Err(e) => (28..=31).for_each(|k| set(k, Err(format!("core-periphery: {e}")))),
    }
    StateFeatureVector { state: reports.state, year: reports.year, values, missing }
}

/// Runs every upstream analysis for one state and assembles its features.
pub fn compute_state_reports(
    national: &RefGraph,
    registry: &PhysicianRegistry,
    state: StateCode,
    year: u16,
    config: &FeatureConfig,
) -> StateReports {
    let sub = |kind| extract_subnetwork(national, registry, kind).map_err(|e| e.to_string());
    let intra = sub(SubnetworkKind::Intrastate(state));
    let induced = sub(SubnetworkKind::InducedState(state));
    let nonempty = |s: &Upstream<Subnetwork>| match s {
        Ok(s) if s.graph.node_count() > 0 => Ok(()),
        Ok(_) => Err("network is empty".to_string()),
        Err(e) => Err(e.clone()),
    };
    let summary = |s: &Upstream<Subnetwork>| nonempty(s).map(|_| summarize_network(&s.as_ref().unwrap().graph, config));
    let cp_net = match config.cp_network {
        CpNetwork::Intrastate => &intra,
        CpNetwork::Induced => &induced,
    };
    let cp = nonempty(cp_net).and_then(|_| {
        let s = cp_net.as_ref().unwrap();
        let r: CpReport = cp_scores(&s.graph, &config.cp).map_err(|e| e.to_string())?;
        let cross = core_cross_state(s.to_parent(r.core_node), national, registry);
        Ok(CpSummary { gini_cp: r.gini_cp, core_entropy: r.core_entropy, cross })
    });
    StateReports { state, year, intrastate: summary(&intra), induced: summary(&induced), cp }
}

/// Writes one row per vector: `state,year,f1..f31`, empty cells for missing values.
pub fn write_features_csv<W: io::Write>(vectors: &[StateFeatureVector], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["state".to_string(), "year".to_string()];
    header.extend((0..N_FEATURES).map(feature_name));
    w.write_record(&header)?;
    for v in vectors {
        let mut row = vec![v.state.to_string(), v.year.to_string()];
        row.extend(v.values.iter().map(|x| x.map(|x| format!("{x:?}")).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {msg}")]
    Bad { line: u64, msg: String },
}

pub fn read_features_csv(path: &Path) -> Result<Vec<StateFeatureVector>, FeatureCsvError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let headers = r.headers()?.clone();
    let cols: Vec<Option<usize>> = headers.iter().map(feature_index).collect();
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        let bad = |msg: String| FeatureCsvError::Bad { line, msg };
        let state = StateCode::new(rec.get(0).unwrap_or("")).map_err(|e| bad(e.to_string()))?;
        let year: u16 = rec.get(1).unwrap_or("").trim().parse().map_err(|_| bad("bad year".into()))?;
        let mut values = vec![None; N_FEATURES];
        let mut missing = BTreeMap::new();
        for (c, field) in rec.iter().enumerate() {
            if let Some(Some(k)) = cols.get(c) {
                let t = field.trim();
                if t.is_empty() {
                    missing.insert(feature_name(*k), "missing in input".to_string());
                } else {
                    values[*k] = Some(t.parse().map_err(|_| bad(format!("bad number {t:?}")))?);
                }
            }
        }
        out.push(StateFeatureVector { state, year, values, missing });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nh() -> StateCode {
        StateCode::new("NH").unwrap()
    }

    #[test]
    fn average_degree_conventions() {
        let edges: Vec<(u32, u32, u64)> =
            (0..100u32).map(|i| (i % 40, (i * 7 + 1) % 40, 1)).filter(|e| e.0 != e.1).collect();
        let mut uniq = edges.clone();
        uniq.sort();
        uniq.dedup_by_key(|e| (e.0, e.1));
        let g = RefGraph::from_edges(40, uniq).unwrap();
        let m = g.edge_count() as f64;
        let cfg = FeatureConfig {
            cp: CpConfig { iterations_per_node: 10, ..CpConfig::default() },
            ..FeatureConfig::default()
        };
        assert_eq!(summarize_network(&g, &cfg).average_degree, 2.0 * m / 40.0);
        let out = FeatureConfig { average_degree: AverageDegree::MeanOutDegree, ..cfg };
        assert_eq!(summarize_network(&g, &out).average_degree, m / 40.0);
    }

    #[test]
    fn all_missing_upstream() {
        let r = StateReports {
            state: nh(),
            year: 2012,
            intrastate: Err("no data".into()),
            induced: Err("no data".into()),
            cp: Err("no data".into()),
        };
        let v = build_features(&r);
        assert!(v.values.iter().all(Option::is_none));
        assert_eq!(v.missing.len(), N_FEATURES);
    }

    #[test]
    fn single_mutual_dyad_components() {
        let g = RefGraph::from_edges(2, vec![(0, 1, 1), (1, 0, 1)]).unwrap();
        let s = summarize_network(&g, &FeatureConfig::default());
        assert_eq!(s.dominant_component, 2);
        assert_eq!(s.component_gini, Ok(0.0));
    }

    #[test]
    fn csv_round_trip() {
        let mut values = vec![Some(1.5); N_FEATURES];
        values[3] = None;
        let v = StateFeatureVector { state: nh(), year: 2010, values, missing: BTreeMap::new() };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write_features_csv(std::slice::from_ref(&v), std::fs::File::create(&p).unwrap()).unwrap();
        let back = read_features_csv(&p).unwrap();
        assert_eq!(back[0].values, v.values);
        assert!(back[0].missing.contains_key("f4"));
    }

    #[test]
    fn names() {
        assert_eq!(feature_index("f1"), Some(0));
        assert_eq!(feature_index("f31"), Some(30));
        assert_eq!(feature_index("f32"), None);
    }
}
