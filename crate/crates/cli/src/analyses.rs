//! Analysis runners shared by the subcommands and the pipeline. Each returns a
//! serializable report; failures of optional parts are kept as strings.

use anyhow::{Context, Result};
use rayon::prelude::*;
use refnet::coreperiphery::{core_cross_state, cp_scores, CpConfig, CrossState};
use refnet::graph::{
    approx_diameter, extract_subnetwork, weak_components, PhysicianRegistry, RefGraph, SubnetworkKind,
};
use refnet::metrics::{
    assortativity, clustering, degree_stats, er_global_clustering_se, gini_u64, reciprocity, self_degree_correlation,
    AssortativityReport, ClusteringReport, ReciprocityReport,
};
use refnet::motifs::{dyad_census, triad_census_exact, triad_census_mc, DyadCensus, TriadCensus};
use refnet::powerlaw::{ccdf_points, fit_powerlaw_with, gof_pvalue_with, positive, FitConfig, GofResult, PowerLawFit};
use refnet::states::StateCode;
use serde::Serialize;

fn text<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentSummary {
    pub count: usize,
    pub largest: usize,
    pub gini_sizes: Result<f64, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub nodes: usize,
    pub edges: usize,
    pub total_weight: u64,
    pub mean_out_degree: f64,
    pub gini_in_degree: Result<f64, String>,
    pub gini_out_degree: Result<f64, String>,
    pub gini_in_strength: Result<f64, String>,
    pub gini_out_strength: Result<f64, String>,
    pub clustering: Result<ClusteringReport, String>,
    /// Standard error of global clustering under ER at the observed density.
    pub er_global_clustering_se: Option<f64>,
    pub assortativity: AssortativityReport,
    pub self_degree_correlation: Result<f64, String>,
    pub self_strength_correlation: Result<f64, String>,
    pub reciprocity: ReciprocityReport,
    pub dyads: DyadCensus,
    pub components: ComponentSummary,
    pub diameter: Result<u32, String>,
    pub diameter_samples: usize,
}

pub fn metrics_report(g: &RefGraph, diameter_samples: usize, seed: u64) -> MetricsReport {
    let d = degree_stats(g, false);
    let s = degree_stats(g, true);
    let c = text(clustering(g));
    let se = c.as_ref().ok().map(|c| er_global_clustering_se(c.er_expected, c.connected_triples));
    let comps = weak_components(g);
    let sizes: Vec<u64> = comps.iter().map(|c| c.len() as u64).collect();
    MetricsReport {
        nodes: g.node_count(),
        edges: g.edge_count(),
        total_weight: g.total_weight(),
        mean_out_degree: d.mean_degree,
        gini_in_degree: text(gini_u64(&d.in_degrees)),
        gini_out_degree: text(gini_u64(&d.out_degrees)),
        gini_in_strength: text(gini_u64(&s.in_degrees)),
        gini_out_strength: text(gini_u64(&s.out_degrees)),
        clustering: c,
        er_global_clustering_se: se,
        assortativity: assortativity(g),
        self_degree_correlation: text(self_degree_correlation(g, false)),
        self_strength_correlation: text(self_degree_correlation(g, true)),
        reciprocity: reciprocity(g),
        dyads: dyad_census(g),
        components: ComponentSummary {
            count: comps.len(),
            largest: sizes.iter().copied().max().unwrap_or(0) as usize,
            gini_sizes: text(gini_u64(&sizes)),
        },
        diameter: text(approx_diameter(g, diameter_samples, seed)),
        diameter_samples,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeFit {
    pub fit: Result<PowerLawFit, String>,
    pub gof: Option<Result<GofResult, String>>,
    #[serde(skip)]
    pub ccdf: Vec<(u64, f64)>,
}

impl DegreeFit {
    pub fn p_value(&self) -> Option<f64> {
        match &self.gof {
            Some(Ok(g)) => Some(g.p_value),
            _ => None,
        }
    }
}

/// Power-law fit of positive values, with a bootstrap p-value when
/// `bootstrap > 0`.
pub fn fit_degrees(values: &[u64], cfg: &FitConfig, bootstrap: usize, seed: u64) -> DegreeFit {
    let xs = positive(values);
    let fit = text(fit_powerlaw_with(&xs, cfg));
    let gof = match (&fit, bootstrap) {
        (_, 0) => None,
        (Ok(f), b) => Some(text(gof_pvalue_with(&xs, f, b, seed, cfg))),
        (Err(e), _) => Some(Err(e.clone())),
    };
    DegreeFit { fit, gof, ccdf: ccdf_points(&xs) }
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerlawReport {
    pub weighted: bool,
    pub in_degree: DegreeFit,
    pub out_degree: DegreeFit,
}

pub fn powerlaw_report(g: &RefGraph, weighted: bool, cfg: &FitConfig, bootstrap: usize, seed: u64) -> PowerlawReport {
    let d = degree_stats(g, weighted);
    let (a, b) = rayon::join(
        || fit_degrees(&d.in_degrees, cfg, bootstrap, seed),
        || fit_degrees(&d.out_degrees, cfg, bootstrap, seed ^ 1),
    );
    PowerlawReport { weighted, in_degree: a, out_degree: b }
}

/// Exact census when `samples == 0`, otherwise Monte Carlo.
pub fn triads(g: &RefGraph, samples: u64, seed: u64) -> Result<TriadCensus> {
    if samples == 0 {
        triad_census_exact(g).context("exact triad census")
    } else {
        triad_census_mc(g, samples, seed).context("sampled triad census")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CpStateRow {
    pub state: StateCode,
    pub year: u16,
    pub nodes: usize,
    pub core_npi: String,
    pub gini_cp: f64,
    pub core_entropy: f64,
    pub cross: CrossState,
    #[serde(skip)]
    pub scores: Vec<f64>,
}

/// Core-periphery scores of one state's network (`Intrastate` or `InducedState`).
pub fn cp_for_state(
    national: &RefGraph,
    registry: &PhysicianRegistry,
    kind: SubnetworkKind,
    year: u16,
    cfg: &CpConfig,
) -> Result<CpStateRow, String> {
    let state = match kind {
        SubnetworkKind::Intrastate(s) | SubnetworkKind::InducedState(s) => s,
        SubnetworkKind::National => return Err("per-state analysis needs a state network".into()),
    };
    let sub = text(extract_subnetwork(national, registry, kind))?;
    if sub.graph.node_count() == 0 {
        return Err("network is empty".into());
    }
    let rep = text(cp_scores(&sub.graph, cfg))?;
    let core = sub.to_parent(rep.core_node);
    Ok(CpStateRow {
        state,
        year,
        nodes: sub.graph.node_count(),
        core_npi: registry.npi_of(core).to_string(),
        gini_cp: rep.gini_cp,
        core_entropy: rep.core_entropy,
        cross: core_cross_state(core, national, registry),
        scores: rep.cp_score,
    })
}

/// Runs `f` for each of the 50 states present in `registry`, in code order.
pub fn per_state<T: Send>(registry: &PhysicianRegistry, f: impl Fn(StateCode) -> T + Sync) -> Vec<(StateCode, T)> {
    let states: Vec<StateCode> = registry.labels().into_iter().filter(StateCode::is_state).collect();
    states.into_par_iter().map(|s| (s, f(s))).collect()
}
