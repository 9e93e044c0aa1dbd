//! Synthetic inputs and helpers for driving the `refnet` binary.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const STATES: [&str; 50] = [
    "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "IA", "ID", "IL", "IN", "KS", "KY", "LA", "MA",
    "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ", "NM", "NV", "NY", "OH", "OK", "OR", "PA",
    "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA", "WI", "WV", "WY",
];

/// A population of physicians over the first `states` states; state sizes
/// vary between half and one and a half times `per_state`.
#[derive(Debug, Clone)]
pub struct Synth {
    pub states: usize,
    pub per_state: usize,
    /// Referral rows per year.
    pub rows: usize,
    /// Share of rows whose target lies in another state.
    pub interstate: f64,
}

impl Synth {
    pub fn size(&self, state: usize) -> usize {
        self.per_state / 2 + self.per_state * ((state * 7) % 11) / 10
    }

    fn offset(&self, state: usize) -> usize {
        (0..state).map(|s| self.size(s)).sum()
    }

    pub fn physicians(&self) -> usize {
        self.offset(self.states)
    }

    pub fn npi(&self, state: usize, i: usize) -> u64 {
        1_000_000_000 + (self.offset(state) + i) as u64
    }

    /// Skewed pick in `0..n`: low indices are popular.
    fn popular(rng: &mut ChaCha8Rng, n: usize) -> usize {
        let u: f64 = rng.gen();
        ((n as f64 * u.powi(3)) as usize).min(n - 1)
    }

    /// Rows in the five-column public layout (`from,to,pairs,patients,same_day`).
    pub fn write_referrals(&self, path: &Path, year: u16) -> io::Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(u64::from(year));
        let offsets: Vec<usize> = (0..self.states).map(|st| self.offset(st)).collect();
        let npi = |st: usize, i: usize| 1_000_000_000 + (offsets[st] + i) as u64;
        let mut w = BufWriter::with_capacity(1 << 20, File::create(path)?);
        for _ in 0..self.rows {
            let s = rng.gen_range(0..self.states);
            let fi = rng.gen_range(0..self.size(s));
            let t = if self.states > 1 && rng.gen::<f64>() < self.interstate {
                (s + 1 + rng.gen_range(0..self.states - 1)) % self.states
            } else {
                s
            };
            let mut ti = Self::popular(&mut rng, self.size(t));
            if t == s && ti == fi {
                ti = (ti + 1) % self.size(t);
            }
            let (from, to) = (npi(s, fi), npi(t, ti));
            let patients: u32 = 11 + rng.gen_range(0..40);
            let pairs = patients + rng.gen_range(0..20);
            writeln!(w, "{from},{to},{pairs},{patients},{}", rng.gen_range(0..patients))?;
        }
        w.flush()
    }

    pub fn write_states(&self, path: &Path) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "npi,state")?;
        for s in 0..self.states {
            for i in 0..self.size(s) {
                writeln!(w, "{},{}", self.npi(s, i), STATES[s])?;
            }
        }
        w.flush()
    }

    /// Two attributes per state and year: one trending with a state effect, one pure noise.
    pub fn write_health(&self, path: &Path, years: &[u16]) -> io::Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "state,year,attribute,value")?;
        for s in 0..self.states {
            let effect: f64 = rng.gen_range(-1.0..1.0);
            for (k, y) in years.iter().enumerate() {
                let a = 10.0 + effect + 0.2 * k as f64 + rng.gen_range(-0.3..0.3);
                writeln!(w, "{},{y},mortality,{a}", STATES[s])?;
                writeln!(w, "{},{y},noise,{}", STATES[s], rng.gen_range(-1.0..1.0))?;
            }
        }
        w.flush()
    }

    /// Writes referrals per year, states and health into `dir`, plus a pipeline
    /// configuration with relative paths. `extra` is appended verbatim.
    pub fn write_project(&self, dir: &Path, years: &[u16], analyses: &[&str], extra: &str) -> io::Result<PathBuf> {
        let mut cfg = String::from("seed = 11\n");
        let list: Vec<String> = analyses.iter().map(|a| format!("{a:?}")).collect();
        cfg += &format!("analyses = [{}]\n", list.join(", "));
        cfg += "health = \"health.csv\"\n\n";
        for &y in years {
            let name = format!("referrals-{y}.csv");
            if !dir.join(&name).exists() {
                self.write_referrals(&dir.join(&name), y)?;
            }
            cfg += &format!("[[referrals]]\npath = \"{name}\"\nformat = \"cms\"\nyear = {y}\n\n");
        }
        cfg += "[[states]]\npath = \"states.csv\"\n\n";
        self.write_states(&dir.join("states.csv"))?;
        self.write_health(&dir.join("health.csv"), years)?;
        cfg += extra;
        let path = dir.join("pipeline.toml");
        std::fs::write(&path, cfg)?;
        Ok(path)
    }
}

/// Budgets small enough for a test run.
pub const SMALL_BUDGET: &str = "\
[budget]
bootstrap = 100
cp_iterations = 40
diameter_samples = 8
state_triad_samples = 20000

[cp]
alpha_grid = [0.5]
beta_grid = [0.3, 0.6]
";

pub fn refnet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_refnet"))
}

pub fn run(args: &[&str]) -> Output {
    refnet().args(args).output().expect("spawn refnet")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every file under `dir`, as paths relative to it, sorted.
pub fn files_under(dir: &Path) -> Vec<PathBuf> {
    fn walk(base: &Path, d: &Path, out: &mut Vec<PathBuf>) {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                out.push(p.strip_prefix(base).unwrap().to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}
