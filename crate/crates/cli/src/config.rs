//! Pipeline configuration (TOML).

use crate::input::input_error;
use anyhow::Result;
use refnet::coreperiphery::CpConfig;
use refnet::statelab::{AverageDegree, CpNetwork, EntryCorrection, DEFAULT_EXCLUDED_YEARS};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Metrics,
    Powerlaw,
    Cp,
    Triads,
    Smallworld,
    Gravity,
    Features,
    Regress,
}

pub const ALL_ANALYSES: [Analysis; 8] = [
    Analysis::Metrics,
    Analysis::Powerlaw,
    Analysis::Cp,
    Analysis::Triads,
    Analysis::Smallworld,
    Analysis::Gravity,
    Analysis::Features,
    Analysis::Regress,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferralInput {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
    pub year: u16,
}

fn default_format() -> String {
    "default".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatesInput {
    pub path: PathBuf,
    /// Year this listing applies to; rows carry their own year when absent.
    pub year: Option<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budget {
    pub bootstrap: usize,
    pub cp_iterations: usize,
    /// Sampled triples for the national census; exact when it fits, 10^6 draws otherwise.
    pub triad_samples: Option<u64>,
    pub diameter_samples: usize,
    /// Draws for state censuses too large to run exactly.
    pub state_triad_samples: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            bootstrap: refnet::powerlaw::DEFAULT_BOOTSTRAP,
            cp_iterations: 10_000,
            triad_samples: None,
            diameter_samples: refnet::graph::DEFAULT_DIAMETER_SAMPLES,
            state_triad_samples: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CpOptions {
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub weighted: bool,
    /// Score the induced state network instead of the intrastate one.
    pub network: CpNetwork,
}

impl Default for CpOptions {
    fn default() -> Self {
        let d = CpConfig::default();
        CpOptions { alpha_grid: d.alpha_grid, beta_grid: d.beta_grid, weighted: false, network: CpNetwork::Intrastate }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureOptions {
    pub average_degree: AverageDegree,
    pub weighted_degrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressOptions {
    /// Health attributes to model; all of them when empty.
    pub outcomes: Vec<String>,
    pub select: bool,
    pub per_year_interactions: bool,
    pub alpha: f64,
    pub entry_correction: EntryCorrection,
    /// Add triad-group and reciprocity candidates.
    pub extras: bool,
    pub factors: usize,
    pub clusters: usize,
    pub restarts: usize,
}

impl Default for RegressOptions {
    fn default() -> Self {
        RegressOptions {
            outcomes: Vec::new(),
            select: true,
            per_year_interactions: false,
            alpha: 0.05,
            entry_correction: EntryCorrection::Bonferroni,
            extras: true,
            factors: 2,
            clusters: 2,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmallworldOptions {
    pub clustering_ratio: f64,
    pub path_factor: f64,
}

impl Default for SmallworldOptions {
    fn default() -> Self {
        SmallworldOptions { clustering_ratio: 10.0, path_factor: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    /// Years to analyse; every year with referral files when empty.
    #[serde(default)]
    pub years: Vec<u16>,
    #[serde(default = "all_analyses")]
    pub analyses: Vec<Analysis>,
    #[serde(default = "default_excluded")]
    pub exclude_years: Vec<u16>,
    #[serde(default)]
    pub referrals: Vec<ReferralInput>,
    #[serde(default)]
    pub states: Vec<StatesInput>,
    pub health: Option<PathBuf>,
    /// Output directory; `--out` overrides it.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub cp: CpOptions,
    #[serde(default)]
    pub features: FeatureOptions,
    #[serde(default)]
    pub regress: RegressOptions,
    #[serde(default)]
    pub smallworld: SmallworldOptions,
}

fn all_analyses() -> Vec<Analysis> {
    ALL_ANALYSES.to_vec()
}

fn default_excluded() -> Vec<u16> {
    DEFAULT_EXCLUDED_YEARS.to_vec()
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<PipelineConfig> {
        let c: PipelineConfig = toml::from_str(text).map_err(|e| input_error(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
        PipelineConfig::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.referrals.is_empty() {
            return Err(input_error("config: no [[referrals]] entries"));
        }
        if self.regress.factors == 0 || self.regress.clusters == 0 {
            return Err(input_error("config: regress.factors and regress.clusters must be positive"));
        }
        Ok(())
    }

    pub fn runs(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }

    /// Years to analyse, ascending.
    pub fn years(&self) -> Vec<u16> {
        let mut y =
            if self.years.is_empty() { self.referrals.iter().map(|r| r.year).collect() } else { self.years.clone() };
        y.sort_unstable();
        y.dedup();
        y
    }

    /// Resolves relative input paths against `base`.
    pub fn resolve(&self, base: &Path) -> PipelineConfig {
        let fix = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        let mut c = self.clone();
        c.referrals.iter_mut().for_each(|r| r.path = fix(&r.path));
        c.states.iter_mut().for_each(|s| s.path = fix(&s.path));
        c.health = c.health.as_ref().map(fix);
        c.out = c.out.as_ref().map(fix);
        c
    }

    pub fn cp_config(&self, seed: u64) -> CpConfig {
        CpConfig {
            alpha_grid: self.cp.alpha_grid.clone(),
            beta_grid: self.cp.beta_grid.clone(),
            iterations_per_node: self.budget.cp_iterations,
            seed,
            weighted: self.cp.weighted,
            ..CpConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
analyses = ["metrics"]

[[referrals]]
path = "r2009.csv"
year = 2009
"#;

    #[test]
    fn guide_example_parses() {
        let page = include_str!("../../../book/src/pipeline.md");
        let body = page.split("```toml\n").nth(1).unwrap().split("```").next().unwrap();
        let c = PipelineConfig::parse(body).unwrap();
        assert_eq!(c.analyses, ALL_ANALYSES.to_vec());
        assert_eq!(c.years(), vec![2009, 2010, 2011]);
        assert_eq!(c.cp.beta_grid.len(), 9);
    }

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.years(), vec![2009]);
        assert!(c.runs(Analysis::Metrics) && !c.runs(Analysis::Cp));
        assert_eq!(c.exclude_years, vec![2015]);
        assert_eq!(c.budget, Budget::default());
        assert_eq!(c.referrals[0].format, "default");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = PipelineConfig::parse(&format!("{MINIMAL}\nbogus = 1\n")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = PipelineConfig::parse("[budget]\nbootstrapp = 3\n[[referrals]]\npath='a'\nyear=1\n").unwrap_err();
        assert!(err.to_string().contains("bootstrapp"), "{err}");
    }

    #[test]
    fn paths_resolve_against_the_config_directory() {
        let c = PipelineConfig::parse(MINIMAL).unwrap().resolve(Path::new("/data/run"));
        assert_eq!(c.referrals[0].path, Path::new("/data/run/r2009.csv"));
    }

    #[test]
    fn nested_enums_use_snake_case() {
        let c = PipelineConfig::parse(&format!(
            "{MINIMAL}\n[features]\naverage_degree = \"mean_out_degree\"\n[cp]\nnetwork = \"induced\"\n"
        ))
        .unwrap();
        assert_eq!(c.features.average_degree, AverageDegree::MeanOutDegree);
        assert_eq!(c.cp.network, CpNetwork::Induced);
    }
}
