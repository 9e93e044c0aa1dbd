//! Loading graphs and tables named on the command line.

use anyhow::{anyhow, Context, Result};
use clap::Args;
use refnet::graph::{
    assign_states, build_graph, extract_subnetwork, read_graph_cache, AssignConfig, AssignmentReport,
    PhysicianRegistry, RefGraph, SubnetworkKind,
};
use refnet::ingest::{open_referrals, parse_npi_states, read_records_bin, FormatSpec, IngestReport, NpiStateRecord};
use serde::Serialize;
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

/// Marks an error as caused by the inputs (exit code 1).
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

/// Wraps any error as an input error, keeping its message.
pub fn bad_input<E: fmt::Display>(e: E) -> anyhow::Error {
    input_error(format!("{e:#}"))
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GraphSource {
    /// Graph cache written by `refnet graph`.
    #[arg(long, conflicts_with = "referrals")]
    pub graph: Option<PathBuf>,
    /// Referral edge lists (text, or `.bin` record files from `refnet ingest`).
    #[arg(long, num_args = 1..)]
    pub referrals: Vec<PathBuf>,
    /// Referral file layout, e.g. `cms`, `comma:from,to,count`, `tab+header:from,to,_,count,year`.
    #[arg(long, default_value = "default")]
    pub format: String,
    /// Year for files without a year column; also selects provider-state rows.
    #[arg(long)]
    pub year: Option<u16>,
    /// Provider-state listing (`npi,state[,year]`).
    #[arg(long)]
    pub states: Option<PathBuf>,
    /// `national`, `intrastate:XX` or `induced:XX`.
    #[arg(long, default_value = "national")]
    pub network: String,
}

impl GraphSource {
    pub fn paths(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = self.graph.iter().map(PathBuf::as_path).collect();
        v.extend(self.referrals.iter().map(PathBuf::as_path));
        v.extend(self.states.iter().map(PathBuf::as_path));
        v
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LoadReport {
    pub ingest: Vec<(String, IngestReport)>,
    pub assignment: Option<AssignmentReport>,
    pub network: String,
    pub nodes: usize,
    pub edges: usize,
}

pub struct Loaded {
    /// Full graph with state labels.
    pub national: RefGraph,
    pub registry: PhysicianRegistry,
    /// The selected network (identical to `national` for `national`).
    pub graph: RefGraph,
    /// Registry of the selected network.
    pub local_registry: PhysicianRegistry,
    pub report: LoadReport,
}

/// A graph, its registry and the ingest report of each text file.
pub type Referrals = (RefGraph, PhysicianRegistry, Vec<(String, IngestReport)>);

/// Streams referral files into a graph; text files are validated row by row.
pub fn load_referrals(files: &[(PathBuf, String)], year: Option<u16>) -> Result<Referrals> {
    let mut reports = Vec::new();
    let mut records = Vec::new();
    for (p, format) in files {
        let spec: FormatSpec = format.parse().map_err(bad_input)?;
        if p.extension().is_some_and(|e| e == "bin") {
            let f = File::open(p).map_err(|e| input_error(format!("{}: {e}", p.display())))?;
            let recs = read_records_bin(BufReader::new(f)).map_err(|e| input_error(format!("{}: {e}", p.display())))?;
            let n = recs.len() as u64;
            records.extend(recs);
            reports.push((p.display().to_string(), IngestReport { rows: n, records: n, ..Default::default() }));
            continue;
        }
        let mut reader = open_referrals(p, &spec, year).map_err(bad_input)?;
        records.extend(reader.by_ref());
        let report = reader.finish().map_err(|e| input_error(format!("{}: {e}", p.display())))?;
        reports.push((p.display().to_string(), report));
    }
    let (graph, registry) = build_graph(records).context("building graph")?;
    Ok((graph, registry, reports))
}

/// Provider-state rows for `year` (all rows when `year` is `None`).
pub fn load_states(path: &Path, year: Option<u16>) -> Result<Vec<NpiStateRecord>> {
    let parsed = parse_npi_states(path, year.unwrap_or(0)).map_err(bad_input)?;
    Ok(parsed.records.into_iter().filter(|r| year.map_or(true, |y| r.year == y)).collect())
}

pub fn load(src: &GraphSource) -> Result<Loaded> {
    let (national, mut registry, ingest) = match (&src.graph, src.referrals.is_empty()) {
        (Some(p), _) => {
            let f = File::open(p).map_err(|e| input_error(format!("{}: {e}", p.display())))?;
            let (g, r) =
                read_graph_cache(BufReader::new(f)).map_err(|e| input_error(format!("{}: {e}", p.display())))?;
            (g, r, Vec::new())
        }
        (None, false) => {
            let files: Vec<_> = src.referrals.iter().map(|p| (p.clone(), src.format.clone())).collect();
            load_referrals(&files, src.year)?
        }
        (None, true) => return Err(input_error("give --graph or --referrals")),
    };
    let assignment = match &src.states {
        Some(p) => {
            let rows = load_states(p, src.year)?;
            Some(assign_states(&mut registry, &national, &rows, AssignConfig::default()))
        }
        None => None,
    };
    let kind: SubnetworkKind = src.network.parse().map_err(bad_input)?;
    let (graph, local_registry) = match kind {
        SubnetworkKind::National => (national.clone(), registry.clone()),
        _ => {
            let sub = extract_subnetwork(&national, &registry, kind).map_err(bad_input)?;
            let reg = sub.registry(&registry);
            (sub.graph, reg)
        }
    };
    let report = LoadReport {
        ingest,
        assignment,
        network: kind.to_string(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
    };
    Ok(Loaded { national, registry, graph, local_registry, report })
}

/// One non-negative integer per line (blank lines and `#` comments skipped).
pub fn read_values(path: &Path) -> Result<Vec<u64>> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.parse::<u64>().map_err(|_| input_error(format!("{}:{}: not an integer: {l:?}", path.display(), i + 1)))
        })
        .collect()
}

pub fn require_states(loaded: &Loaded) -> Result<()> {
    if loaded.registry.labels().is_empty() {
        return Err(input_error("this analysis needs state labels: pass --states (or a cache built with them)"));
    }
    Ok(())
}

pub fn missing(path: &Path) -> anyhow::Error {
    anyhow!(InputError(format!("input file not found: {}", path.display())))
}
