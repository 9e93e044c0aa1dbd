//! Multi-year batch runs driven by a TOML configuration.

use crate::analyses::{cp_for_state, fit_degrees, metrics_report, per_state, powerlaw_report, triads, CpStateRow};
use crate::commands::{
    attribute_names, coefficients_table, cp_states_table, flows_table, regress_outcomes, state_features,
    RegressSettings,
};
use crate::config::{Analysis, PipelineConfig};
use crate::input::{input_error, load_referrals, load_states, InputError, LoadReport};
use crate::manifest::RunManifest;
use crate::output::{
    correlations_table, emit_json, features_table, num, powerlaw_states_table, triad_detail_table, triads_table,
    write_atomic, Table, TableId,
};
use crate::plots::{ccdf_svg, histogram_svg, scatter_svg, CcdfSeries};
use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use refnet::graph::{assign_states, AssignConfig, PhysicianRegistry, RefGraph, SubnetworkKind};
use refnet::gravity::{
    aggregate_flows, distance_matrix, fit_gravity, fit_gravity_pooled, observations, StateFlowMatrix,
};
use refnet::ingest::parse_health_attributes;
use refnet::metrics::degree_stats;
use refnet::motifs::{choose3, TriadCensus, EXACT_TRIPLE_LIMIT};
use refnet::nullmodels::{small_world_test, SmallWorldThresholds};
use refnet::powerlaw::FitConfig;
use refnet::rng::derive_seed;
use refnet::statelab::{
    classical_mds, euclidean_distances, factor_class_names, kmeans, pearson_table, reciprocity_column,
    state_triad_profile, triad_factor_groups, triad_group_columns, ExtraColumn, FeatureConfig, StateFeatureVector,
    StateTriadProfile, StepwiseConfig, N_FEATURES,
};
use refnet::states::StateCode;
use refnet::stats::standardize;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Pipeline configuration (TOML).
    pub config: PathBuf,
    /// Output directory (overrides `out` in the configuration).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Input,
    Analysis,
    /// Not enough data for an optional product; does not affect the exit code.
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub step: String,
    pub year: Option<u16>,
    pub kind: FailureKind,
    pub message: String,
}

#[derive(Default)]
struct Ledger(Vec<Failure>);

impl Ledger {
    fn push(&mut self, step: &str, year: Option<u16>, kind: FailureKind, message: String) {
        self.0.push(Failure { step: step.into(), year, kind, message });
    }

    fn step<T>(&mut self, step: &str, year: Option<u16>, f: impl FnOnce() -> Result<T>) -> Option<T> {
        match f() {
            Ok(v) => Some(v),
            Err(e) => {
                let kind =
                    if e.chain().any(|c| c.is::<InputError>()) { FailureKind::Input } else { FailureKind::Analysis };
                self.push(step, year, kind, format!("{e:#}"));
                None
            }
        }
    }

    fn exit_code(&self) -> u8 {
        if self.0.iter().any(|f| f.kind == FailureKind::Input) {
            1
        } else if self.0.iter().any(|f| f.kind == FailureKind::Analysis) {
            2
        } else {
            0
        }
    }
}

/// Seed for one step and year, independent of which other steps run.
fn step_seed(seed: u64, step: Analysis, year: u16) -> u64 {
    derive_seed(seed, ((step as u64) << 16) | u64::from(year))
}

struct YearGraph {
    national: RefGraph,
    registry: PhysicianRegistry,
}

fn needs_states(g: &YearGraph) -> Result<()> {
    if g.registry.labels().iter().any(StateCode::is_state) {
        Ok(())
    } else {
        Err(input_error("no physicians carry a state label; add [[states]] listings for this year"))
    }
}

#[derive(Default)]
struct CrossYear {
    triads: Vec<(String, TriadCensus)>,
    pl_in: BTreeMap<(String, u16), Option<f64>>,
    pl_out: BTreeMap<(String, u16), Option<f64>>,
    cp_rows: Vec<CpStateRow>,
    flows: Vec<StateFlowMatrix>,
    features: Vec<StateFeatureVector>,
    profiles: Vec<StateTriadProfile>,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    out: PathBuf,
    digest: String,
    ledger: Ledger,
    acc: CrossYear,
    load_reports: BTreeMap<u16, LoadReport>,
}

pub fn run(args: &PipelineArgs) -> Result<u8> {
    let written = PipelineConfig::load(&args.config)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let cfg = written.resolve(base);
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| input_error("no output directory: pass --out or set `out` in the configuration"))?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut ledger = Ledger::default();
    let mut inputs: Vec<&Path> = cfg.referrals.iter().map(|r| r.path.as_path()).collect();
    inputs.extend(cfg.states.iter().map(|s| s.path.as_path()));
    inputs.extend(cfg.health.iter().map(PathBuf::as_path));
    let mut present = Vec::new();
    for p in inputs {
        if p.is_file() {
            present.push(p);
        } else {
            ledger.push("inputs", None, FailureKind::Input, format!("input file not found: {}", p.display()));
        }
    }
    let seeds = BTreeMap::from([("pipeline".to_string(), cfg.seed)]);
    let mut manifest = RunManifest::new(serde_json::to_value(&written)?, &present, seeds)?;

    let mut run = Run {
        cfg: &cfg,
        out: out.clone(),
        digest: manifest.digest.clone(),
        ledger,
        acc: CrossYear::default(),
        load_reports: BTreeMap::new(),
    };
    for year in cfg.years() {
        if let Some(g) = run.load_year(year) {
            run.year_steps(year, &g);
        }
    }
    run.cross_year_steps();

    let digest = run.digest.clone();
    emit_json(Some(&out.join("inputs.json")), &digest, &run.load_reports)?;
    emit_json(Some(&out.join("failures.json")), &digest, &run.ledger.0)?;
    manifest.finish();
    write_atomic(&out.join("manifest.json"), &serde_json::to_vec_pretty(&manifest)?)?;
    for f in &run.ledger.0 {
        eprintln!("{:?} failure in {} ({:?}): {}", f.kind, f.step, f.year, f.message);
    }
    Ok(run.ledger.exit_code())
}

impl Run<'_> {
    fn year_dir(&self, year: u16) -> Result<PathBuf> {
        let d = self.out.join(format!("y{year}"));
        std::fs::create_dir_all(&d)?;
        Ok(d)
    }

    fn load_year(&mut self, year: u16) -> Option<YearGraph> {
        let files: Vec<(PathBuf, String)> = self
            .cfg
            .referrals
            .iter()
            .filter(|r| r.year == year && r.path.is_file())
            .map(|r| (r.path.clone(), r.format.clone()))
            .collect();
        if files.is_empty() {
            self.ledger.push("load", Some(year), FailureKind::Input, "no readable referral files for this year".into());
            return None;
        }
        let states: Vec<&Path> = self
            .cfg
            .states
            .iter()
            .filter(|s| s.year.map_or(true, |y| y == year) && s.path.is_file())
            .map(|s| s.path.as_path())
            .collect();
        self.ledger.step("load", Some(year), || {
            let (national, mut registry, ingest) = load_referrals(&files, Some(year))?;
            let mut rows = Vec::new();
            for p in &states {
                rows.extend(load_states(p, Some(year))?);
            }
            let assignment =
                (!rows.is_empty()).then(|| assign_states(&mut registry, &national, &rows, AssignConfig::default()));
            let report = LoadReport {
                ingest,
                assignment,
                network: SubnetworkKind::National.to_string(),
                nodes: national.node_count(),
                edges: national.edge_count(),
            };
            self.load_reports.insert(year, report);
            Ok(YearGraph { national, registry })
        })
    }

    fn year_steps(&mut self, year: u16, g: &YearGraph) {
        let cfg = self.cfg;
        let dir = match self.year_dir(year) {
            Ok(d) => d,
            Err(e) => {
                self.ledger.push("output", Some(year), FailureKind::Analysis, format!("{e:#}"));
                return;
            }
        };
        let digest = self.digest.clone();
        let y = Some(year);

        if cfg.runs(Analysis::Metrics) {
            let seed = step_seed(cfg.seed, Analysis::Metrics, year);
            self.ledger.step("metrics", y, || {
                let r = metrics_report(&g.national, cfg.budget.diameter_samples, seed);
                emit_json(Some(&dir.join("metrics.json")), &digest, &r)
            });
        }

        if cfg.runs(Analysis::Powerlaw) {
            let seed = step_seed(cfg.seed, Analysis::Powerlaw, year);
            let fit_cfg = FitConfig::default();
            self.ledger.step("powerlaw", y, || {
                let r = powerlaw_report(&g.national, false, &fit_cfg, cfg.budget.bootstrap, seed);
                let fit = |d: &crate::analyses::DegreeFit| d.fit.as_ref().ok().map(|f| (f.alpha, f.xmin));
                let svg = ccdf_svg(
                    &format!("National degree CCDF, {year}"),
                    &digest,
                    &[
                        CcdfSeries { label: "in-degree", points: &r.in_degree.ccdf, fit: fit(&r.in_degree) },
                        CcdfSeries { label: "out-degree", points: &r.out_degree.ccdf, fit: fit(&r.out_degree) },
                    ],
                );
                write_atomic(&dir.join("degree-ccdf.svg"), svg.as_bytes())?;
                emit_json(Some(&dir.join("powerlaw.json")), &digest, &r)
            });
            if !g.registry.labels().is_empty() {
                let rows = per_state(&g.registry, |s| {
                    let sub =
                        refnet::graph::extract_subnetwork(&g.national, &g.registry, SubnetworkKind::Intrastate(s));
                    let Ok(sub) = sub else { return (None, None) };
                    let d = degree_stats(&sub.graph, false);
                    let label = u64::from(u16::from_be_bytes(s.bytes()));
                    let pin =
                        fit_degrees(&d.in_degrees, &fit_cfg, cfg.budget.bootstrap, derive_seed(seed, label)).p_value();
                    let pout =
                        fit_degrees(&d.out_degrees, &fit_cfg, cfg.budget.bootstrap, derive_seed(seed ^ 1, label))
                            .p_value();
                    (pin, pout)
                });
                for (s, (pin, pout)) in rows {
                    self.acc.pl_in.insert((s.to_string(), year), pin);
                    self.acc.pl_out.insert((s.to_string(), year), pout);
                }
            }
        }

        if cfg.runs(Analysis::Cp) {
            let seed = step_seed(cfg.seed, Analysis::Cp, year);
            let mut rows = Vec::new();
            self.ledger.step("cp", y, || {
                needs_states(g)?;
                let cp_cfg = cfg.cp_config(seed);
                let results = per_state(&g.registry, |s| {
                    let kind = match cfg.cp.network {
                        refnet::statelab::CpNetwork::Intrastate => SubnetworkKind::Intrastate(s),
                        refnet::statelab::CpNetwork::Induced => SubnetworkKind::InducedState(s),
                    };
                    cp_for_state(&g.national, &g.registry, kind, year, &cp_cfg)
                });
                let by_state: BTreeMap<String, &Result<CpStateRow, String>> =
                    results.iter().map(|(s, r)| (s.to_string(), r)).collect();
                emit_json(Some(&dir.join("cp.json")), &digest, &by_state)?;
                let scores: Vec<f64> =
                    results.iter().filter_map(|(_, r)| r.as_ref().ok()).flat_map(|r| r.scores.clone()).collect();
                let svg =
                    histogram_svg(&format!("State core-periphery scores, {year}"), &digest, &scores, 20, 0.0, 1.0);
                write_atomic(&dir.join("cp-scores.svg"), svg.as_bytes())?;
                rows.extend(results.into_iter().filter_map(|(_, r)| r.ok()));
                Ok(())
            });
            self.acc.cp_rows.extend(rows);
        }

        if cfg.runs(Analysis::Triads) {
            let seed = step_seed(cfg.seed, Analysis::Triads, year);
            let samples = match cfg.budget.triad_samples {
                Some(s) => s,
                None if choose3(g.national.node_count()) <= EXACT_TRIPLE_LIMIT => 0,
                None => 1_000_000,
            };
            if let Some(c) = self.ledger.step("triads", y, || {
                let c = triads(&g.national, samples, seed)?;
                triad_detail_table(&c).write(&dir.join("triads-detail.csv"), &digest)?;
                Ok(c)
            }) {
                self.acc.triads.push((format!("national-{year}"), c));
            }
        }

        if cfg.runs(Analysis::Smallworld) {
            let t = SmallWorldThresholds {
                clustering_ratio: cfg.smallworld.clustering_ratio,
                path_factor: cfg.smallworld.path_factor,
                diameter_samples: cfg.budget.diameter_samples,
                seed: step_seed(cfg.seed, Analysis::Smallworld, year),
            };
            self.ledger.step("smallworld", y, || {
                let v = small_world_test(&g.national, &t).context("small-world test")?;
                emit_json(Some(&dir.join("smallworld.json")), &digest, &v)
            });
        }

        if cfg.runs(Analysis::Gravity) {
            if let Some(f) = self.ledger.step("gravity", y, || {
                needs_states(g)?;
                let f = aggregate_flows(&g.national, &g.registry, year);
                flows_table(&f).write(&dir.join("flows.csv"), &digest)?;
                Ok(f)
            }) {
                self.acc.flows.push(f);
            }
        }

        if cfg.runs(Analysis::Features) || cfg.runs(Analysis::Regress) {
            let seed = step_seed(cfg.seed, Analysis::Features, year);
            let fcfg = FeatureConfig {
                average_degree: cfg.features.average_degree,
                weighted_degrees: cfg.features.weighted_degrees,
                diameter_samples: cfg.budget.diameter_samples,
                diameter_seed: seed,
                powerlaw: FitConfig::default(),
                cp: cfg.cp_config(seed),
                cp_network: cfg.cp.network,
            };
            if let Some(v) = self.ledger.step("features", y, || {
                needs_states(g)?;
                let v = state_features(&g.national, &g.registry, year, &fcfg);
                features_table(&v).write(&dir.join("features.csv"), &digest)?;
                Ok(v)
            }) {
                self.clusters(year, &dir, &v);
                self.acc.features.extend(v);
            }
            if cfg.runs(Analysis::Regress) && cfg.regress.extras {
                let tseed = step_seed(cfg.seed, Analysis::Triads, year);
                let samples = cfg.budget.state_triad_samples;
                let profiles =
                    per_state(&g.registry, |s| state_triad_profile(&g.national, &g.registry, s, year, samples, tseed));
                for (s, p) in profiles {
                    match p {
                        Ok(p) => self.acc.profiles.push(p),
                        Err(e) => self.ledger.push("state-triads", y, FailureKind::Skipped, format!("{s}: {e}")),
                    }
                }
            }
        }
    }

    /// k-means and 2-D MDS of the standardized complete feature vectors.
    fn clusters(&mut self, year: u16, dir: &Path, v: &[StateFeatureVector]) {
        let complete: Vec<&StateFeatureVector> = v.iter().filter(|f| f.is_complete()).collect();
        let k = self.cfg.regress.clusters;
        if complete.len() <= k.max(2) {
            let msg =
                format!("{} states with complete features; clustering needs more than {}", complete.len(), k.max(2));
            self.ledger.push("clusters", Some(year), FailureKind::Skipped, msg);
            return;
        }
        let columns: Vec<Vec<f64>> = (0..N_FEATURES)
            .map(|j| standardize(&complete.iter().map(|f| f.values[j].unwrap()).collect::<Vec<_>>()))
            .collect();
        // Constant columns standardize to NaN and carry no information.
        let kept: Vec<&Vec<f64>> = columns.iter().filter(|c| c.iter().all(|x| x.is_finite())).collect();
        let points: Vec<Vec<f64>> = (0..complete.len()).map(|i| kept.iter().map(|c| c[i]).collect()).collect();
        let seed = step_seed(self.cfg.seed, Analysis::Features, year) ^ 0x6b6d;
        let digest = self.digest.clone();
        let restarts = self.cfg.regress.restarts;
        self.ledger.step("clusters", Some(year), || {
            let km = kmeans(&points, k, seed, restarts).context("k-means")?;
            let mds = classical_mds(&euclidean_distances(&points), 2).context("MDS")?;
            let coord = |i: usize, d: usize| mds.coords[i].get(d).copied().unwrap_or(0.0);
            let header = ["state", "cluster", "mds1", "mds2"].map(String::from).to_vec();
            let mut t = Table::new(TableId::Extras, header);
            let mut pts = Vec::new();
            for (i, f) in complete.iter().enumerate() {
                t.rows.push(vec![
                    f.state.to_string(),
                    km.assignments[i].to_string(),
                    num(coord(i, 0)),
                    num(coord(i, 1)),
                ]);
                pts.push((f.state.to_string(), coord(i, 0), coord(i, 1), km.assignments[i]));
            }
            t.write(&dir.join("clusters.csv"), &digest)?;
            let svg = scatter_svg(&format!("States by network features, {year}"), &digest, &pts);
            write_atomic(&dir.join("clusters.svg"), svg.as_bytes())
        });
    }

    fn cross_year_steps(&mut self) {
        let cfg = self.cfg;
        let out = self.out.clone();
        let digest = self.digest.clone();
        let acc = std::mem::take(&mut self.acc);

        if cfg.runs(Analysis::Powerlaw) && !acc.pl_in.is_empty() {
            self.ledger.step("powerlaw", None, || {
                powerlaw_states_table(&acc.pl_in).write(&out.join("powerlaw-states-in.csv"), &digest)?;
                powerlaw_states_table(&acc.pl_out).write(&out.join("powerlaw-states-out.csv"), &digest)
            });
        }
        if cfg.runs(Analysis::Cp) && !acc.cp_rows.is_empty() {
            self.ledger.step("cp", None, || cp_states_table(&acc.cp_rows).write(&out.join("cp-states.csv"), &digest));
        }
        if cfg.runs(Analysis::Triads) && !acc.triads.is_empty() {
            let rows: Vec<(String, &TriadCensus)> = acc.triads.iter().map(|(n, c)| (n.clone(), c)).collect();
            self.ledger.step("triads", None, || triads_table(&rows).write(&out.join("triads.csv"), &digest));
        }
        if cfg.runs(Analysis::Gravity) && !acc.flows.is_empty() {
            self.ledger.step("gravity", None, || gravity_summary(&acc.flows, &out.join("gravity.json"), &digest));
        }
        if cfg.runs(Analysis::Features) && !acc.features.is_empty() {
            self.ledger
                .step("features", None, || features_table(&acc.features).write(&out.join("features.csv"), &digest));
        }
        if cfg.runs(Analysis::Regress) {
            self.regress(&acc.features, &acc.profiles);
        }
    }

    fn regress(&mut self, features: &[StateFeatureVector], profiles: &[StateTriadProfile]) {
        let cfg = self.cfg;
        let out = self.out.clone();
        let digest = self.digest.clone();
        let Some(health) = cfg.health.clone() else {
            self.ledger.push("regress", None, FailureKind::Input, "regress needs `health` in the configuration".into());
            return;
        };
        if !health.is_file() {
            return;
        }
        if features.is_empty() {
            self.ledger.push("regress", None, FailureKind::Analysis, "no state features were computed".into());
            return;
        }
        let mut extras: Vec<ExtraColumn> = Vec::new();
        if cfg.regress.extras && !profiles.is_empty() {
            self.ledger.step("triad-factors", None, || {
                let groups = triad_factor_groups(profiles, cfg.regress.factors).context("triad factor analysis")?;
                #[derive(Serialize)]
                struct FactorReport<'a> {
                    classes: Vec<String>,
                    groups: &'a refnet::statelab::TriadFactorGroups,
                    profiles: usize,
                }
                let rep = FactorReport { classes: factor_class_names(), groups: &groups, profiles: profiles.len() };
                emit_json(Some(&out.join("triad-factors.json")), &digest, &rep)?;
                extras.extend(triad_group_columns(profiles, &groups));
                Ok(())
            });
            extras.push(reciprocity_column(profiles));
            let _ = self.ledger.step("extras", None, || extras_table(&extras).write(&out.join("extras.csv"), &digest));
        }
        self.ledger.step("regress", None, || {
            let attrs = parse_health_attributes(&health).map_err(crate::input::bad_input)?;
            let cells = pearson_table(features, &attrs);
            correlations_table(&cells).write(&out.join("correlations.csv"), &digest)?;
            let outcomes =
                if cfg.regress.outcomes.is_empty() { attribute_names(&attrs) } else { cfg.regress.outcomes.clone() };
            let settings = RegressSettings {
                select: cfg.regress.select,
                predictors: Vec::new(),
                stepwise: StepwiseConfig {
                    alpha: cfg.regress.alpha,
                    entry_correction: cfg.regress.entry_correction,
                    per_year_interactions: cfg.regress.per_year_interactions,
                },
                exclude_years: cfg.exclude_years.clone(),
            };
            let reports = regress_outcomes(features, &extras, &attrs, &outcomes, &settings);
            coefficients_table(&reports).write(&out.join("coefficients.csv"), &digest)?;
            emit_json(Some(&out.join("regress.json")), &digest, &reports)?;
            let failed: Vec<String> =
                reports.iter().filter_map(|r| r.error.as_ref().map(|e| format!("{}: {e}", r.outcome))).collect();
            if !failed.is_empty() && failed.len() == reports.len() {
                anyhow::bail!("no outcome could be fitted ({})", failed.join("; "));
            }
            Ok(())
        });
    }
}

fn gravity_summary(flows: &[StateFlowMatrix], path: &Path, digest: &str) -> Result<()> {
    #[derive(Serialize)]
    struct GravityReport {
        per_year: BTreeMap<u16, Result<refnet::gravity::GravityFit, String>>,
        summed: Result<refnet::gravity::GravityFit, String>,
        pooled: Result<refnet::gravity::GravityFit, String>,
    }
    let d = distance_matrix();
    let per_year = flows
        .par_iter()
        .map(|f| (f.years.first().copied().unwrap_or(0), fit_gravity(&observations(f, &d)).map_err(|e| e.to_string())))
        .collect();
    let summed =
        StateFlowMatrix::sum_years(flows).and_then(|m| fit_gravity(&observations(&m, &d))).map_err(|e| e.to_string());
    let pooled = fit_gravity_pooled(flows).map_err(|e| e.to_string());
    if let (Err(a), Err(b)) = (&summed, &pooled) {
        anyhow::bail!("gravity fit failed: summed: {a}; pooled: {b}");
    }
    emit_json(Some(path), digest, &GravityReport { per_year, summed, pooled })
}

/// Wide `state,year,<column>...` table of extra predictors.
fn extras_table(extras: &[ExtraColumn]) -> Table {
    let mut header = vec!["state".to_string(), "year".to_string()];
    header.extend(extras.iter().map(|e| e.0.clone()));
    let keys: BTreeSet<(StateCode, u16)> = extras.iter().flat_map(|e| e.1.keys().copied()).collect();
    let mut t = Table::new(TableId::Extras, header);
    for (s, y) in keys {
        let mut row = vec![s.to_string(), y.to_string()];
        row.extend(extras.iter().map(|e| e.1.get(&(s, y)).map(|v| num(*v)).unwrap_or_default()));
        t.rows.push(row);
    }
    t
}
