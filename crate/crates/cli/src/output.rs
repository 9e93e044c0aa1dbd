//! Artifact writing: atomic file replacement, digest-stamped JSON and CSV,
//! and the fixed table layouts.

use anyhow::{bail, Context, Result};
use refnet::motifs::{TriadCensus, TRIAD_NAMES};
use refnet::statelab::{feature_name, CorrelationCell, StateFeatureVector, N_FEATURES};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

/// Writes `bytes` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    manifest_digest: &'a str,
    result: &'a T,
}

pub fn json_bytes<T: Serialize>(digest: &str, value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(&Envelope { manifest_digest: digest, result: value })?;
    v.push(b'\n');
    Ok(v)
}

/// Writes the JSON envelope to `path`, or to stdout when `path` is `None`.
pub fn emit_json<T: Serialize>(path: Option<&Path>, digest: &str, value: &T) -> Result<()> {
    let bytes = json_bytes(digest, value)?;
    match path {
        Some(p) => write_atomic(p, &bytes),
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableId {
    /// `network,T1..T16` (share of all triples), ordered by class id.
    Triads,
    /// `state,<year>...`: power-law p-values, one column per year.
    PowerlawStates,
    /// `state,year,f1..f31`.
    Features,
    /// `feature,attribute,r,r_squared,n`.
    Correlations,
    /// `state,year,nodes,core_npi,gini_cp,core_entropy,states_reached,cross_referrals`.
    CpStates,
    /// `from,to,flow` over the 50 states.
    GravityFlows,
    /// `outcome,term,estimate,se,p_value`.
    Coefficients,
    /// `state,year,reciprocity,triad_g...`.
    Extras,
}

impl TableId {
    pub const ALL: [TableId; 8] = [
        TableId::Triads,
        TableId::PowerlawStates,
        TableId::Features,
        TableId::Correlations,
        TableId::CpStates,
        TableId::GravityFlows,
        TableId::Coefficients,
        TableId::Extras,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableId::Triads => "triads",
            TableId::PowerlawStates => "powerlaw-states",
            TableId::Features => "features",
            TableId::Correlations => "correlations",
            TableId::CpStates => "cp-states",
            TableId::GravityFlows => "gravity-flows",
            TableId::Coefficients => "coefficients",
            TableId::Extras => "extras",
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TableId {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match TableId::ALL.iter().find(|t| t.name() == s) {
            Some(t) => Ok(*t),
            None => bail!("unknown table id {s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub id: TableId,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest representation that parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl Table {
    pub fn new(id: TableId, header: Vec<String>) -> Table {
        Table { id, header, rows: Vec::new() }
    }

    /// CSV text; the first line is a `#` comment carrying the manifest digest.
    pub fn to_csv(&self, digest: &str) -> Result<Vec<u8>> {
        let mut out = format!("# table={} manifest_digest={digest}\n", self.id).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.header)?;
            for r in &self.rows {
                if r.len() != self.header.len() {
                    bail!("table {}: row has {} cells, header {}", self.id, r.len(), self.header.len());
                }
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path, digest: &str) -> Result<()> {
        write_atomic(path, &self.to_csv(digest)?)
    }
}

pub fn triads_table(rows: &[(String, &TriadCensus)]) -> Table {
    let mut header = vec!["network".to_string()];
    header.extend((1..=16).map(|k| format!("T{k}")));
    let mut t = Table::new(TableId::Triads, header);
    for (label, c) in rows {
        let mut row = vec![label.clone()];
        row.extend(c.proportions().iter().map(|&p| num(p)));
        t.rows.push(row);
    }
    t
}

/// Triad tallies with standard errors, one row per class.
pub fn triad_detail_table(c: &TriadCensus) -> Table {
    let header = ["class", "name", "tally", "count", "std_error", "proportion"].map(String::from).to_vec();
    let mut t = Table::new(TableId::Triads, header);
    let p = c.proportions();
    for k in 0..16 {
        t.rows.push(vec![
            (k + 1).to_string(),
            TRIAD_NAMES[k].to_string(),
            c.tallies[k].to_string(),
            num(c.counts[k]),
            num(c.std_errors[k]),
            num(p[k]),
        ]);
    }
    t
}

/// `values[(state, year)]` laid out with years as columns, plus a final
/// row counting states with p > 0.05 per year.
pub fn powerlaw_states_table(values: &BTreeMap<(String, u16), Option<f64>>) -> Table {
    let years: BTreeSet<u16> = values.keys().map(|k| k.1).collect();
    let states: BTreeSet<&String> = values.keys().map(|k| &k.0).collect();
    let mut header = vec!["state".to_string()];
    header.extend(years.iter().map(|y| y.to_string()));
    let mut t = Table::new(TableId::PowerlawStates, header);
    for s in &states {
        let mut row = vec![s.to_string()];
        row.extend(years.iter().map(|&y| opt(values.get(&(s.to_string(), y)).copied().flatten())));
        t.rows.push(row);
    }
    let mut count = vec!["#states p>0.05".to_string()];
    count.extend(
        years
            .iter()
            .map(|&y| values.iter().filter(|(k, v)| k.1 == y && v.is_some_and(|p| p > 0.05)).count().to_string()),
    );
    t.rows.push(count);
    t
}

pub fn features_table(vectors: &[StateFeatureVector]) -> Table {
    let mut header = vec!["state".to_string(), "year".to_string()];
    header.extend((0..N_FEATURES).map(feature_name));
    let mut t = Table::new(TableId::Features, header);
    for v in vectors {
        let mut row = vec![v.state.to_string(), v.year.to_string()];
        row.extend(v.values.iter().map(|x| opt(*x)));
        t.rows.push(row);
    }
    t
}

pub fn correlations_table(cells: &[CorrelationCell]) -> Table {
    let header = ["feature", "attribute", "r", "r_squared", "n"].map(String::from).to_vec();
    let mut t = Table::new(TableId::Correlations, header);
    for c in cells {
        t.rows.push(vec![c.feature.clone(), c.attribute.clone(), num(c.r), num(c.r_squared), c.n.to_string()]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use refnet::graph::RefGraph;
    use refnet::motifs::triad_census_exact;

    #[test]
    fn triad_table_has_sixteen_class_columns_in_id_order() {
        let g = RefGraph::from_edges(4, vec![(0, 1, 1), (1, 2, 1), (2, 0, 1), (2, 3, 1)]).unwrap();
        let c = triad_census_exact(&g).unwrap();
        let t = triads_table(&[("national".into(), &c)]);
        assert_eq!(t.header.len(), 17);
        assert_eq!(t.header[1], "T1");
        assert_eq!(t.header[16], "T16");
        let csv = String::from_utf8(t.to_csv("abc").unwrap()).unwrap();
        assert!(csv.starts_with("# table=triads manifest_digest=abc\nnetwork,T1,"));
    }

    #[test]
    fn years_become_columns() {
        let mut v = BTreeMap::new();
        v.insert(("CA".to_string(), 2010), Some(0.2));
        v.insert(("CA".to_string(), 2009), Some(0.01));
        v.insert(("NY".to_string(), 2009), None);
        let t = powerlaw_states_table(&v);
        assert_eq!(t.header, vec!["state", "2009", "2010"]);
        assert_eq!(t.rows[0], vec!["CA", "0.01", "0.2"]);
        assert_eq!(t.rows[1], vec!["NY", "", ""]);
        assert_eq!(t.rows[2], vec!["#states p>0.05", "0", "1"]);
    }

    #[test]
    fn features_columns_follow_catalogue_order() {
        let t = features_table(&[]);
        assert_eq!(t.header[2], "f1");
        assert_eq!(t.header[32], "f31");
    }

    #[test]
    fn unknown_table_id_is_rejected() {
        assert!("triads".parse::<TableId>().is_ok());
        assert!("no-such-table".parse::<TableId>().is_err());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
