//! Single-analysis subcommands.

use crate::analyses::{fit_degrees, metrics_report, powerlaw_report, triads};
use crate::input::{bad_input, input_error, load, read_values, require_states, GraphSource};
use crate::manifest::RunManifest;
use crate::output::{
    correlations_table, emit_json, num, triad_detail_table, triads_table, write_atomic, Table, TableId,
};
use crate::plots::{ccdf_svg, histogram_svg, CcdfSeries};
use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use refnet::coreperiphery::{cp_scores, CpConfig};
use refnet::graph::{write_graph_cache, PhysicianRegistry};
use refnet::gravity::{aggregate_flows, distance_matrix, fit_gravity, observations, StateFlowMatrix, N_STATES};
use refnet::ingest::{parse_health_attributes, StateHealthRecord};
use refnet::ingest::{write_records_bin, Npi};
use refnet::nullmodels::{generate_er, generate_ws, small_world_test, SmallWorldThresholds};
use refnet::powerlaw::FitConfig;
use refnet::statelab::{
    build_features, compute_state_reports, feature_name, fit_mixed_model, panel_from_features_with, pearson_table,
    read_features_csv, stepwise_select, AverageDegree, CorrelationCell, CpNetwork, EntryCorrection, ExtraColumn,
    FeatureConfig, MixedModelFit, ModelSpec, PanelReport, StateFeatureVector, StepwiseConfig, StepwiseResult,
    DEFAULT_EXCLUDED_YEARS, N_FEATURES,
};
use refnet::states::{StateCode, STATES_50};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn manifest<T: Serialize>(args: &T, inputs: &[&Path], seeds: &[(&str, u64)]) -> Result<RunManifest> {
    let missing: Vec<_> = inputs.iter().filter(|p| !p.exists()).collect();
    if let Some(p) = missing.first() {
        return Err(crate::input::missing(p));
    }
    let seeds = seeds.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    RunManifest::new(serde_json::to_value(args)?, inputs, seeds)
}

#[derive(Args, Debug, Serialize)]
pub struct IngestArgs {
    /// Referral files to validate.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value = "default")]
    pub format: String,
    #[arg(long)]
    pub year: Option<u16>,
    /// Binary record file to write.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Ingest report JSON (stdout when absent).
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

pub fn ingest(a: &IngestArgs) -> Result<()> {
    let paths: Vec<&Path> = a.input.iter().map(PathBuf::as_path).collect();
    let m = manifest(a, &paths, &[])?;
    let spec: refnet::ingest::FormatSpec = a.format.parse().map_err(bad_input)?;
    let mut records = Vec::new();
    let mut reports = Vec::new();
    for p in &a.input {
        let mut r = refnet::ingest::open_referrals(p, &spec, a.year).map_err(bad_input)?;
        records.extend(r.by_ref());
        reports.push((p.display().to_string(), r.finish().map_err(bad_input)?));
    }
    let mut buf = Vec::new();
    write_records_bin(&records, &mut buf)?;
    write_atomic(&a.out, &buf)?;
    emit_json(a.report.as_deref(), &m.digest, &reports)
}

#[derive(Args, Debug, Serialize)]
pub struct GraphArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Graph cache to write.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn graph(a: &GraphArgs) -> Result<()> {
    let m = manifest(a, &a.source.paths(), &[])?;
    let l = load(&a.source)?;
    let mut buf = Vec::new();
    write_graph_cache(&l.graph, &l.local_registry, &mut buf)?;
    write_atomic(&a.out, &buf)?;
    emit_json(None, &m.digest, &l.report)
}

#[derive(Args, Debug, Serialize)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// BFS start nodes for the diameter estimate.
    #[arg(long, default_value_t = refnet::graph::DEFAULT_DIAMETER_SAMPLES)]
    pub diameter_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn metrics(a: &MetricsArgs) -> Result<()> {
    let m = manifest(a, &a.source.paths(), &[("diameter", a.seed)])?;
    let l = load(&a.source)?;
    let r = metrics_report(&l.graph, a.diameter_samples, a.seed);
    emit_json(a.out.as_deref(), &m.digest, &r)
}

#[derive(Args, Debug, Serialize)]
pub struct PowerlawArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Fit a plain list of integers (one per line) instead of graph degrees.
    #[arg(long, conflicts_with_all = ["graph", "referrals"])]
    pub values: Option<PathBuf>,
    /// Use weighted degrees (strengths).
    #[arg(long)]
    pub weighted: bool,
    /// Bootstrap replicates for the goodness-of-fit p-value (0 skips it).
    #[arg(long, default_value_t = refnet::powerlaw::DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fix xmin instead of scanning.
    #[arg(long)]
    pub xmin: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Log-log CCDF plot (SVG).
    #[arg(long)]
    #[serde(skip)]
    pub plot: Option<PathBuf>,
}

pub fn powerlaw(a: &PowerlawArgs) -> Result<()> {
    let mut inputs = a.source.paths();
    inputs.extend(a.values.iter().map(PathBuf::as_path));
    let m = manifest(a, &inputs, &[("bootstrap", a.seed)])?;
    let cfg = FitConfig { fixed_xmin: a.xmin, ..FitConfig::default() };
    if let Some(p) = &a.values {
        let xs = read_values(p)?;
        let r = fit_degrees(&xs, &cfg, a.bootstrap, a.seed);
        if let Some(plot) = &a.plot {
            let fit = r.fit.as_ref().ok().map(|f| (f.alpha, f.xmin));
            let svg = ccdf_svg("CCDF", &m.digest, &[CcdfSeries { label: "values", points: &r.ccdf, fit }]);
            write_atomic(plot, svg.as_bytes())?;
        }
        return emit_json(a.out.as_deref(), &m.digest, &r);
    }
    let l = load(&a.source)?;
    let r = powerlaw_report(&l.graph, a.weighted, &cfg, a.bootstrap, a.seed);
    if let Some(plot) = &a.plot {
        let fit = |d: &crate::analyses::DegreeFit| d.fit.as_ref().ok().map(|f| (f.alpha, f.xmin));
        let svg = ccdf_svg(
            &format!("Degree CCDF ({})", l.report.network),
            &m.digest,
            &[
                CcdfSeries { label: "in-degree", points: &r.in_degree.ccdf, fit: fit(&r.in_degree) },
                CcdfSeries { label: "out-degree", points: &r.out_degree.ccdf, fit: fit(&r.out_degree) },
            ],
        );
        write_atomic(plot, svg.as_bytes())?;
    }
    emit_json(a.out.as_deref(), &m.digest, &r)
}

#[derive(Args, Debug, Serialize)]
pub struct CpArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Annealing moves per node per (alpha, beta) setting.
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use edge weights in the core quality.
    #[arg(long)]
    pub weighted: bool,
    /// Per-node scores (CSV `npi,cp_score`).
    #[arg(long)]
    #[serde(skip)]
    pub scores: Option<PathBuf>,
    /// Score histogram (SVG).
    #[arg(long)]
    #[serde(skip)]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CpSummary {
    network: String,
    nodes: usize,
    core_npi: String,
    gini_cp: f64,
    core_entropy: f64,
    tied_at_max: usize,
    top_by_setting: Vec<String>,
}

pub fn cp(a: &CpArgs) -> Result<()> {
    let m = manifest(a, &a.source.paths(), &[("annealing", a.seed)])?;
    let l = load(&a.source)?;
    let cfg = CpConfig { iterations_per_node: a.iterations, seed: a.seed, weighted: a.weighted, ..CpConfig::default() };
    let rep = cp_scores(&l.graph, &cfg).context("core-periphery")?;
    let npi = |v: refnet::graph::NodeId| l.local_registry.npi_of(v).to_string();
    if let Some(p) = &a.scores {
        let mut t = Table::new(TableId::CpStates, vec!["npi".into(), "cp_score".into()]);
        for (i, s) in rep.cp_score.iter().enumerate() {
            t.rows.push(vec![npi(refnet::graph::NodeId(i as u32)), num(*s)]);
        }
        t.write(p, &m.digest)?;
    }
    if let Some(p) = &a.plot {
        let svg = histogram_svg(&format!("CP scores ({})", l.report.network), &m.digest, &rep.cp_score, 20, 0.0, 1.0);
        write_atomic(p, svg.as_bytes())?;
    }
    let s = CpSummary {
        network: l.report.network.clone(),
        nodes: l.graph.node_count(),
        core_npi: npi(rep.core_node),
        gini_cp: rep.gini_cp,
        core_entropy: rep.core_entropy,
        tied_at_max: rep.tied_at_max,
        top_by_setting: rep.top_by_setting.iter().map(|&v| npi(v)).collect(),
    };
    emit_json(a.out.as_deref(), &m.digest, &s)
}

#[derive(Args, Debug, Serialize)]
pub struct TriadArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Sampled triples; 0 runs the exact census.
    #[arg(long, default_value_t = 0)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// 16-column share table (CSV).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Per-class tallies, counts and standard errors (CSV; stdout when absent).
    #[arg(long)]
    #[serde(skip)]
    pub detail: Option<PathBuf>,
}

pub fn triads_cmd(a: &TriadArgs) -> Result<()> {
    let m = manifest(a, &a.source.paths(), &[("triads", a.seed)])?;
    let l = load(&a.source)?;
    let c = triads(&l.graph, a.samples, a.seed)?;
    if let Some(p) = &a.out {
        triads_table(&[(l.report.network.clone(), &c)]).write(p, &m.digest)?;
    }
    let detail = triad_detail_table(&c).to_csv(&m.digest)?;
    match &a.detail {
        Some(p) => write_atomic(p, &detail),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&detail)?;
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NullModel {
    Er,
    Ws,
}

#[derive(Args, Debug, Serialize)]
pub struct NullArgs {
    #[arg(long, value_enum)]
    pub model: NullModel,
    #[arg(long)]
    pub n: usize,
    /// Edge probability (ER).
    #[arg(long, default_value_t = 0.01)]
    pub p: f64,
    /// Ring neighbours, even (WS).
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Rewiring probability (WS).
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Graph cache to write.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Edge list `from,to,count` with synthetic NPIs.
    #[arg(long)]
    #[serde(skip)]
    pub edges: Option<PathBuf>,
}

/// NPI assigned to node `i` of a generated graph.
pub fn synthetic_npi(i: usize) -> Npi {
    Npi::from_value(1_000_000_000 + i as u64).expect("fewer than 9e9 nodes")
}

pub fn null(a: &NullArgs) -> Result<()> {
    let m = manifest(a, &[], &[("generator", a.seed)])?;
    let g = match a.model {
        NullModel::Er => generate_er(a.n, a.p, a.seed),
        NullModel::Ws => generate_ws(a.n, a.k, a.beta, a.seed),
    }
    .map_err(bad_input)?;
    if let Some(p) = &a.out {
        let reg = PhysicianRegistry::new((0..a.n).map(synthetic_npi).collect());
        let mut buf = Vec::new();
        write_graph_cache(&g, &reg, &mut buf)?;
        write_atomic(p, &buf)?;
    }
    if let Some(p) = &a.edges {
        let mut s = String::new();
        for (u, v, w) in g.edges() {
            s.push_str(&format!("{},{},{w}\n", synthetic_npi(u as usize), synthetic_npi(v as usize)));
        }
        write_atomic(p, s.as_bytes())?;
    }
    #[derive(Serialize)]
    struct Summary {
        nodes: usize,
        edges: usize,
    }
    emit_json(None, &m.digest, &Summary { nodes: g.node_count(), edges: g.edge_count() })
}

#[derive(Args, Debug, Serialize)]
pub struct SmallworldArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, default_value_t = 10.0)]
    pub clustering_ratio: f64,
    #[arg(long, default_value_t = 3.0)]
    pub path_factor: f64,
    #[arg(long, default_value_t = refnet::graph::DEFAULT_DIAMETER_SAMPLES)]
    pub diameter_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn smallworld(a: &SmallworldArgs) -> Result<()> {
    let m = manifest(a, &a.source.paths(), &[("diameter", a.seed)])?;
    let l = load(&a.source)?;
    let t = SmallWorldThresholds {
        clustering_ratio: a.clustering_ratio,
        path_factor: a.path_factor,
        diameter_samples: a.diameter_samples,
        seed: a.seed,
    };
    let v = small_world_test(&l.graph, &t).context("small-world test")?;
    emit_json(a.out.as_deref(), &m.digest, &v)
}

#[derive(Args, Debug, Serialize)]
pub struct GravityArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Interstate flow matrix (CSV `from,to,flow`).
    #[arg(long)]
    #[serde(skip)]
    pub flows: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn flows_table(f: &StateFlowMatrix) -> Table {
    let mut t = Table::new(TableId::GravityFlows, vec!["from".into(), "to".into(), "flow".into()]);
    for i in 0..N_STATES {
        for j in 0..N_STATES {
            if i != j {
                t.rows.push(vec![STATES_50[i].into(), STATES_50[j].into(), num(f.flows[i * N_STATES + j])]);
            }
        }
    }
    t
}

pub fn gravity(a: &GravityArgs) -> Result<()> {
    let m = manifest(a, &a.source.paths(), &[])?;
    let l = load(&a.source)?;
    require_states(&l)?;
    let f = aggregate_flows(&l.national, &l.registry, a.source.year.unwrap_or(0));
    if let Some(p) = &a.flows {
        flows_table(&f).write(p, &m.digest)?;
    }
    let fit = fit_gravity(&observations(&f, &distance_matrix())).context("gravity fit")?;
    emit_json(a.out.as_deref(), &m.digest, &fit)
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageDegreeArg {
    TotalEndpoints,
    MeanOutDegree,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CpNetworkArg {
    Intrastate,
    Induced,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FeatureBudget {
    /// Annealing moves per node per setting for f28-f31.
    #[arg(long, default_value_t = 10_000)]
    pub cp_iterations: usize,
    #[arg(long, default_value_t = refnet::graph::DEFAULT_DIAMETER_SAMPLES)]
    pub diameter_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "intrastate")]
    pub cp_network: CpNetworkArg,
    #[arg(long, value_enum, default_value = "total-endpoints")]
    pub average_degree: AverageDegreeArg,
    /// Weighted degrees for f2-f5.
    #[arg(long)]
    pub weighted_degrees: bool,
}

impl FeatureBudget {
    pub fn config(&self) -> FeatureConfig {
        FeatureConfig {
            average_degree: match self.average_degree {
                AverageDegreeArg::TotalEndpoints => AverageDegree::TotalEndpoints,
                AverageDegreeArg::MeanOutDegree => AverageDegree::MeanOutDegree,
            },
            weighted_degrees: self.weighted_degrees,
            diameter_samples: self.diameter_samples,
            diameter_seed: self.seed,
            powerlaw: FitConfig::default(),
            cp: CpConfig { iterations_per_node: self.cp_iterations, seed: self.seed, ..CpConfig::default() },
            cp_network: match self.cp_network {
                CpNetworkArg::Intrastate => CpNetwork::Intrastate,
                CpNetworkArg::Induced => CpNetwork::Induced,
            },
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[command(flatten)]
    pub budget: FeatureBudget,
    /// Feature table (CSV `state,year,f1..f31`).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Missing-value reasons per state (JSON).
    #[arg(long)]
    #[serde(skip)]
    pub missing: Option<PathBuf>,
}

/// Feature vectors for every state labelled in `registry`, in code order.
pub fn state_features(
    national: &refnet::graph::RefGraph,
    registry: &PhysicianRegistry,
    year: u16,
    cfg: &FeatureConfig,
) -> Vec<StateFeatureVector> {
    let states: Vec<StateCode> = registry.labels().into_iter().filter(StateCode::is_state).collect();
    states.into_par_iter().map(|s| build_features(&compute_state_reports(national, registry, s, year, cfg))).collect()
}

pub fn features(a: &FeaturesArgs) -> Result<()> {
    let year = a.source.year.ok_or_else(|| input_error("--year is required"))?;
    let m = manifest(a, &a.source.paths(), &[("features", a.budget.seed)])?;
    let l = load(&a.source)?;
    require_states(&l)?;
    let v = state_features(&l.national, &l.registry, year, &a.budget.config());
    crate::output::features_table(&v).write(&a.out, &m.digest)?;
    let missing: BTreeMap<String, &BTreeMap<String, String>> =
        v.iter().filter(|f| !f.missing.is_empty()).map(|f| (f.state.to_string(), &f.missing)).collect();
    emit_json(a.missing.as_deref(), &m.digest, &missing)
}

#[derive(Args, Debug, Serialize)]
pub struct RegressArgs {
    /// Feature tables from `refnet features` (one per year or combined).
    #[arg(long, required = true, num_args = 1..)]
    pub features: Vec<PathBuf>,
    /// Health attributes (CSV `state,year,attribute,value`).
    #[arg(long)]
    pub attributes: PathBuf,
    /// Outcomes to model; all attributes when absent.
    #[arg(long, num_args = 1..)]
    pub outcome: Vec<String>,
    /// Stepwise selection over all candidates instead of a fixed predictor set.
    #[arg(long)]
    pub select: bool,
    /// Predictors for a fixed model (default f1..f31).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub predictors: Vec<String>,
    /// Extra candidate columns (CSV `state,year,<name>...`), e.g. from the pipeline.
    #[arg(long)]
    pub extras: Option<PathBuf>,
    /// Per-year interaction dummies instead of linear time.
    #[arg(long)]
    pub per_year: bool,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Test entries at plain alpha instead of alpha / remaining candidates.
    #[arg(long)]
    pub no_entry_correction: bool,
    #[arg(long, num_args = 0.., value_delimiter = ',', default_values_t = DEFAULT_EXCLUDED_YEARS)]
    pub exclude_years: Vec<u16>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Coefficient table (CSV).
    #[arg(long)]
    #[serde(skip)]
    pub table: Option<PathBuf>,
    /// Correlation table (CSV).
    #[arg(long)]
    #[serde(skip)]
    pub correlations: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeReport {
    pub outcome: String,
    pub panel: Option<PanelReport>,
    pub stepwise: Option<StepwiseResult>,
    pub fit: Option<MixedModelFit>,
    pub error: Option<String>,
}

pub struct RegressSettings {
    pub select: bool,
    pub predictors: Vec<String>,
    pub stepwise: StepwiseConfig,
    pub exclude_years: Vec<u16>,
}

/// Fits every outcome in parallel; an outcome that cannot be fitted carries its error.
pub fn regress_outcomes(
    features: &[StateFeatureVector],
    extras: &[ExtraColumn],
    attributes: &[StateHealthRecord],
    outcomes: &[String],
    s: &RegressSettings,
) -> Vec<OutcomeReport> {
    let all: Vec<String> = (0..N_FEATURES).map(feature_name).chain(extras.iter().map(|e| e.0.clone())).collect();
    outcomes
        .par_iter()
        .map(|outcome| {
            let names = if s.select || s.predictors.is_empty() { all.clone() } else { s.predictors.clone() };
            let mut rep =
                OutcomeReport { outcome: outcome.clone(), panel: None, stepwise: None, fit: None, error: None };
            let mut run = || -> Result<(), String> {
                let (panel, pr) =
                    panel_from_features_with(features, extras, attributes, outcome, &names, &s.exclude_years)
                        .map_err(|e| e.to_string())?;
                rep.panel = Some(pr);
                if s.select {
                    let cands: Vec<usize> = (0..panel.predictors.len()).collect();
                    let r = stepwise_select(&panel, &cands, &s.stepwise).map_err(|e| e.to_string())?;
                    rep.stepwise = Some(r);
                } else {
                    let spec = ModelSpec {
                        main: (0..panel.predictors.len()).collect(),
                        interactions: vec![],
                        per_year_interactions: s.stepwise.per_year_interactions,
                    };
                    rep.fit = Some(fit_mixed_model(&panel, &spec).map_err(|e| e.to_string())?);
                }
                Ok(())
            };
            if let Err(e) = run() {
                rep.error = Some(e);
            }
            rep
        })
        .collect()
}

pub fn coefficients_table(reports: &[OutcomeReport]) -> Table {
    let header = ["outcome", "term", "estimate", "se", "p_value"].map(String::from).to_vec();
    let mut t = Table::new(TableId::Coefficients, header);
    for r in reports {
        let fit = r.stepwise.as_ref().map(|s| &s.fit).or(r.fit.as_ref());
        if let Some(f) = fit {
            for c in std::iter::once(&f.beta0).chain(&f.lambda).chain(&f.beta1).chain(&f.beta2) {
                t.rows.push(vec![r.outcome.clone(), c.name.clone(), num(c.estimate), num(c.se), num(c.p_value)]);
            }
            t.rows.push(vec![r.outcome.clone(), "tau2".into(), num(f.tau2), String::new(), String::new()]);
            t.rows.push(vec![r.outcome.clone(), "sigma2".into(), num(f.sigma2), String::new(), String::new()]);
        }
    }
    t
}

/// Reads a wide `state,year,<name>...` table into named columns.
pub fn read_extras(path: &Path) -> Result<Vec<ExtraColumn>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(bad_input)?;
    let headers = r.headers().map_err(bad_input)?.clone();
    let mut cols: Vec<ExtraColumn> = headers.iter().skip(2).map(|h| (h.to_string(), BTreeMap::new())).collect();
    for rec in r.records() {
        let rec = rec.map_err(bad_input)?;
        let state = StateCode::new(rec.get(0).unwrap_or("")).map_err(bad_input)?;
        let year: u16 = rec.get(1).unwrap_or("").trim().parse().map_err(|_| input_error("extras: bad year"))?;
        for (c, col) in cols.iter_mut().enumerate() {
            let field = rec.get(c + 2).unwrap_or("").trim();
            if !field.is_empty() {
                let v: f64 = field.parse().map_err(|_| input_error(format!("extras: bad number {field:?}")))?;
                col.1.insert((state, year), v);
            }
        }
    }
    Ok(cols)
}

pub fn attribute_names(attrs: &[StateHealthRecord]) -> Vec<String> {
    let mut v: Vec<String> = attrs.iter().map(|a| a.attribute_name.clone()).collect();
    v.sort();
    v.dedup();
    v
}

pub fn regress(a: &RegressArgs) -> Result<()> {
    let mut inputs: Vec<&Path> = a.features.iter().map(PathBuf::as_path).collect();
    inputs.push(&a.attributes);
    inputs.extend(a.extras.iter().map(PathBuf::as_path));
    let m = manifest(a, &inputs, &[])?;
    let mut features = Vec::new();
    for p in &a.features {
        features.extend(read_features_csv(p).map_err(|e| input_error(format!("{}: {e}", p.display())))?);
    }
    let attrs = parse_health_attributes(&a.attributes).map_err(bad_input)?;
    let extras = match &a.extras {
        Some(p) => read_extras(p)?,
        None => Vec::new(),
    };
    let outcomes = if a.outcome.is_empty() { attribute_names(&attrs) } else { a.outcome.clone() };
    let settings = RegressSettings {
        select: a.select,
        predictors: a.predictors.clone(),
        stepwise: StepwiseConfig {
            alpha: a.alpha,
            entry_correction: if a.no_entry_correction { EntryCorrection::None } else { EntryCorrection::Bonferroni },
            per_year_interactions: a.per_year,
        },
        exclude_years: a.exclude_years.clone(),
    };
    let reports = regress_outcomes(&features, &extras, &attrs, &outcomes, &settings);
    let cells: Vec<CorrelationCell> = pearson_table(&features, &attrs);
    if let Some(p) = &a.correlations {
        correlations_table(&cells).write(p, &m.digest)?;
    }
    if let Some(p) = &a.table {
        coefficients_table(&reports).write(p, &m.digest)?;
    }
    let failed = reports.iter().filter(|r| r.error.is_some()).count();
    emit_json(a.out.as_deref(), &m.digest, &reports)?;
    if failed == reports.len() && !reports.is_empty() {
        anyhow::bail!("no outcome could be fitted");
    }
    Ok(())
}

/// One row per state from `analyses::cp_for_state`.
pub fn cp_states_table(rows: &[crate::analyses::CpStateRow]) -> Table {
    let header = ["state", "year", "nodes", "core_npi", "gini_cp", "core_entropy", "states_reached", "cross_referrals"]
        .map(String::from)
        .to_vec();
    let mut t = Table::new(TableId::CpStates, header);
    for r in rows {
        t.rows.push(vec![
            r.state.to_string(),
            r.year.to_string(),
            r.nodes.to_string(),
            r.core_npi.clone(),
            num(r.gini_cp),
            num(r.core_entropy),
            r.cross.n_states_reached.to_string(),
            r.cross.n_cross_referrals.to_string(),
        ]);
    }
    t
}
