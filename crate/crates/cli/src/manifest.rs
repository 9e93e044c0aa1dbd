//! Run manifests: what was run, on which inputs, with which seeds.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub wall_clock_secs: f64,
    /// Peak resident set size in kB, where the platform reports it.
    pub peak_rss_kb: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    /// SHA-256 of each input file, keyed by path as given.
    pub inputs: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub toolkit_version: String,
    /// Digest of the fields above except the command line; outputs embed it.
    pub digest: String,
    pub stats: Option<RunStats>,
    #[serde(skip)]
    started: Option<Instant>,
}

#[derive(Serialize)]
struct DigestView<'a> {
    config: &'a serde_json::Value,
    inputs: Vec<&'a String>,
    seeds: &'a BTreeMap<String, u64>,
    toolkit_version: &'a str,
}

impl RunManifest {
    /// `config` should leave out output locations so reruns into another
    /// directory share a digest. Inputs are keyed by file name in the digest.
    pub fn new(config: serde_json::Value, inputs: &[&Path], seeds: BTreeMap<String, u64>) -> Result<RunManifest> {
        let mut digests = BTreeMap::new();
        for p in inputs {
            digests.insert(p.display().to_string(), file_sha256(p)?);
        }
        let mut m = RunManifest {
            command_line: std::env::args().collect(),
            config,
            inputs: digests,
            seeds,
            toolkit_version: TOOLKIT_VERSION.to_string(),
            digest: String::new(),
            stats: None,
            started: Some(Instant::now()),
        };
        let view = DigestView {
            config: &m.config,
            inputs: m.inputs.values().collect(),
            seeds: &m.seeds,
            toolkit_version: &m.toolkit_version,
        };
        m.digest = sha256_hex(&serde_json::to_vec(&view)?);
        Ok(m)
    }

    pub fn finish(&mut self) {
        let wall = self.started.map(|t| t.elapsed().as_secs_f64()).unwrap_or(0.0);
        self.stats = Some(RunStats { wall_clock_secs: wall, peak_rss_kb: peak_rss_kb() });
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let mut f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = f.read(&mut buf).with_context(|| format!("reading {}", path.display()))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}
