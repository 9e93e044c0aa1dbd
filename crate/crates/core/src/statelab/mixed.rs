//! Random-intercept linear mixed model fitted by maximum likelihood:
//! `Y_it = α_i + λ_t + β₁ᵀX_it + β₂ᵀX_it·t + ε_it`, `α_i ~ N(β₀, τ²)`,
//! `ε_it ~ N(0, σ²)`.
//!
//! The likelihood is profiled over `γ = τ²/σ²`. For fixed `γ` the GLS
//! estimate is OLS on quasi-demeaned data (`z − θ_i·z̄_i` with
//! `θ_i = 1 − 1/√(1 + n_i γ)`), and `σ²` has a closed form.

use super::features::{feature_index, StateFeatureVector};
use crate::ingest::StateHealthRecord;
use crate::states::StateCode;
use crate::stats::{chi2_sf, ols, standardize, OlsError, OlsFit};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MixedError {
    #[error("singular design: {0}")]
    Singular(#[from] OlsError),
    #[error("need at least two groups with two or more observations")]
    TooFewGroups,
    #[error("input lengths differ")]
    Ragged,
    #[error("unknown predictor {0}")]
    UnknownPredictor(String),
    #[error("outcome {0:?} has no usable observations")]
    NoData(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub name: String,
    /// Standardized to mean 0, sd 1.
    pub values: Vec<f64>,
}

/// Long-format panel: one row per (group, year).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub y: Vec<f64>,
    pub group: Vec<usize>,
    pub group_labels: Vec<String>,
    pub year: Vec<u16>,
    pub predictors: Vec<Predictor>,
    /// Rows dropped because their group had a single observation.
    pub dropped_singletons: usize,
}

impl Panel {
    /// Builds a panel, dropping groups with fewer than two rows and
    /// standardizing every predictor over the kept rows.
    pub fn new(
        y: Vec<f64>,
        groups: Vec<String>,
        years: Vec<u16>,
        predictors: Vec<(String, Vec<f64>)>,
    ) -> Result<Panel, MixedError> {
        let n = y.len();
        if groups.len() != n || years.len() != n || predictors.iter().any(|(_, v)| v.len() != n) {
            return Err(MixedError::Ragged);
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for g in &groups {
            *counts.entry(g).or_default() += 1;
        }
        let keep: Vec<usize> = (0..n).filter(|&i| counts[groups[i].as_str()] >= 2).collect();
        let labels: Vec<String> = counts.iter().filter(|(_, &c)| c >= 2).map(|(g, _)| g.to_string()).collect();
        if labels.len() < 2 {
            return Err(MixedError::TooFewGroups);
        }
        let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
        Ok(Panel {
            y: keep.iter().map(|&i| y[i]).collect(),
            group: keep.iter().map(|&i| index[groups[i].as_str()]).collect(),
            year: keep.iter().map(|&i| years[i]).collect(),
            predictors: predictors
                .into_iter()
                .map(|(name, v)| Predictor {
                    name,
                    values: standardize(&keep.iter().map(|&i| v[i]).collect::<Vec<_>>()),
                })
                .collect(),
            group_labels: labels,
            dropped_singletons: n - keep.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn predictor_index(&self, name: &str) -> Option<usize> {
        self.predictors.iter().position(|p| p.name == name)
    }

    pub fn years(&self) -> Vec<u16> {
        self.year.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelReport {
    pub rows_joined: usize,
    pub rows_incomplete: usize,
    pub rows_excluded_year: usize,
    pub dropped_singletons: usize,
}

/// A named predictor outside f1..f31, keyed by (state, year).
pub type ExtraColumn = (String, BTreeMap<(StateCode, u16), f64>);

/// Joins features with one health attribute by (state, year). Rows missing
/// the outcome or any listed feature are dropped (complete case).
pub fn panel_from_features(
    features: &[StateFeatureVector],
    attributes: &[StateHealthRecord],
    outcome: &str,
    feature_names: &[String],
    exclude_years: &[u16],
) -> Result<(Panel, PanelReport), MixedError> {
    panel_from_features_with(features, &[], attributes, outcome, feature_names, exclude_years)
}

/// As [`panel_from_features`], with `names` drawn from f1..f31 or `extras`.
pub fn panel_from_features_with(
    features: &[StateFeatureVector],
    extras: &[ExtraColumn],
    attributes: &[StateHealthRecord],
    outcome: &str,
    names: &[String],
    exclude_years: &[u16],
) -> Result<(Panel, PanelReport), MixedError> {
    enum Source<'a> {
        Feature(usize),
        Extra(&'a BTreeMap<(StateCode, u16), f64>),
    }
    let sources: Vec<Source> = names
        .iter()
        .map(|n| match feature_index(n) {
            Some(k) => Ok(Source::Feature(k)),
            None => extras
                .iter()
                .find(|(name, _)| name == n)
                .map(|(_, col)| Source::Extra(col))
                .ok_or_else(|| MixedError::UnknownPredictor(n.clone())),
        })
        .collect::<Result<_, _>>()?;
    let ys: BTreeMap<(StateCode, u16), f64> =
        attributes.iter().filter(|a| a.attribute_name == outcome).map(|a| ((a.state, a.year), a.value)).collect();
    let (mut y, mut g, mut t) = (Vec::new(), Vec::new(), Vec::new());
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); sources.len()];
    let (mut joined, mut incomplete, mut excluded) = (0, 0, 0);
    for f in features {
        let key = (f.state, f.year);
        let Some(&yv) = ys.get(&key) else { continue };
        joined += 1;
        if exclude_years.contains(&f.year) {
            excluded += 1;
            continue;
        }
        let vals: Option<Vec<f64>> = sources
            .iter()
            .map(|s| match s {
                Source::Feature(k) => f.values[*k],
                Source::Extra(col) => col.get(&key).copied().filter(|v| v.is_finite()),
            })
            .collect();
        let Some(vals) = vals else {
            incomplete += 1;
            continue;
        };
        y.push(yv);
        g.push(f.state.to_string());
        t.push(f.year);
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    if y.is_empty() {
        return Err(MixedError::NoData(outcome.to_string()));
    }
    let panel = Panel::new(y, g, t, names.iter().cloned().zip(cols).collect())?;
    let report = PanelReport {
        rows_joined: joined,
        rows_incomplete: incomplete,
        rows_excluded_year: excluded,
        dropped_singletons: panel.dropped_singletons,
    };
    Ok((panel, report))
}

/// Which predictors enter as main effects and which also interact with time.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub main: Vec<usize>,
    pub interactions: Vec<usize>,
    /// Interact with a dummy per non-reference year instead of linear time.
    pub per_year_interactions: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    /// Two-sided Wald p-value.
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedModelFit {
    pub beta0: Coefficient,
    pub tau2: f64,
    pub sigma2: f64,
    /// Year effects relative to the first year.
    pub lambda: Vec<Coefficient>,
    pub beta1: Vec<Coefficient>,
    pub beta2: Vec<Coefficient>,
    pub loglik: f64,
    /// `τ²/σ²` at the optimum.
    pub gamma: f64,
    /// `dℓ/dγ` at the optimum (one-sided at the boundary).
    pub profile_gradient: f64,
    /// Best log-likelihood after each optimizer stage.
    pub loglik_trace: Vec<f64>,
    pub predictors: Vec<String>,
    pub n_obs: usize,
    pub n_groups: usize,
    pub reference_year: u16,
}

impl MixedModelFit {
    /// Number of fixed-effect parameters plus the two variance components.
    pub fn n_params(&self) -> usize {
        1 + self.lambda.len() + self.beta1.len() + self.beta2.len() + 2
    }
}

struct Design {
    x: DMatrix<f64>,
    names: Vec<String>,
    n_years: usize,
    n_main: usize,
}

fn design(panel: &Panel, spec: &ModelSpec) -> Design {
    let years = panel.years();
    let first = years[0];
    let n = panel.len();
    let mut cols: Vec<(String, Vec<f64>)> = vec![("(intercept)".into(), vec![1.0; n])];
    for &t in &years[1..] {
        cols.push((format!("year{t}"), panel.year.iter().map(|&y| (y == t) as u8 as f64).collect()));
    }
    for &k in &spec.main {
        let p = &panel.predictors[k];
        cols.push((p.name.clone(), p.values.clone()));
    }
    for &k in &spec.interactions {
        let p = &panel.predictors[k];
        if spec.per_year_interactions {
            for &t in &years[1..] {
                let v = p.values.iter().zip(&panel.year).map(|(x, &y)| if y == t { *x } else { 0.0 }).collect();
                cols.push((format!("{}:year{t}", p.name), v));
            }
        } else {
            let v = p.values.iter().zip(&panel.year).map(|(x, &y)| x * (y - first) as f64).collect();
            cols.push((format!("{}:t", p.name), v));
        }
    }
    let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j].1[i]);
    Design { x, names: cols.into_iter().map(|c| c.0).collect(), n_years: years.len(), n_main: spec.main.len() }
}

struct Profile<'a> {
    panel: &'a Panel,
    x: &'a DMatrix<f64>,
    sizes: Vec<f64>,
    xbar: DMatrix<f64>,
    ybar: Vec<f64>,
}

impl<'a> Profile<'a> {
    fn new(panel: &'a Panel, x: &'a DMatrix<f64>) -> Self {
        let g = panel.group_labels.len();
        let mut sizes = vec![0.0; g];
        let mut xbar = DMatrix::zeros(g, x.ncols());
        let mut ybar = vec![0.0; g];
        for i in 0..panel.len() {
            let gi = panel.group[i];
            sizes[gi] += 1.0;
            ybar[gi] += panel.y[i];
            for j in 0..x.ncols() {
                xbar[(gi, j)] += x[(i, j)];
            }
        }
        for gi in 0..g {
            ybar[gi] /= sizes[gi];
            for j in 0..x.ncols() {
                xbar[(gi, j)] /= sizes[gi];
            }
        }
        Profile { panel, x, sizes, xbar, ybar }
    }

    /// GLS fit and profiled log-likelihood at `γ`.
    fn eval(&self, gamma: f64) -> Result<(f64, OlsFit), OlsError> {
        let n = self.panel.len();
        let theta: Vec<f64> = self.sizes.iter().map(|&m| 1.0 - 1.0 / (1.0 + m * gamma).sqrt()).collect();
        let xs = DMatrix::from_fn(n, self.x.ncols(), |i, j| {
            let g = self.panel.group[i];
            self.x[(i, j)] - theta[g] * self.xbar[(g, j)]
        });
        let ys = DVector::from_fn(n, |i, _| {
            let g = self.panel.group[i];
            self.panel.y[i] - theta[g] * self.ybar[g]
        });
        let fit = ols(&xs, &ys)?;
        let s2 = fit.rss / n as f64;
        let logdet: f64 = self.sizes.iter().map(|&m| (1.0 + m * gamma).ln()).sum();
        let ll = -0.5 * n as f64 * ((2.0 * std::f64::consts::PI).ln() + s2.ln() + 1.0) - 0.5 * logdet;
        Ok((ll, fit))
    }

    fn ll(&self, gamma: f64) -> f64 {
        self.eval(gamma).map(|r| r.0).unwrap_or(f64::NEG_INFINITY)
    }
}

const GOLDEN_TOL: f64 = 1e-8;

/// Maximizes the profile over `γ ≥ 0`; returns `(γ, trace)`.
fn maximize(p: &Profile) -> (f64, Vec<f64>) {
    let grid: Vec<f64> = (0..=48).map(|k| 10f64.powf(-6.0 + 0.25 * k as f64)).collect();
    let vals: Vec<f64> = grid.iter().map(|&g| p.ll(g)).collect();
    let k = (0..grid.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let mut trace = vec![vals[k]];
    // golden section on ln γ over the bracketing grid cell pair
    let (mut a, mut b) = (grid[k.saturating_sub(1)].ln(), grid[(k + 1).min(grid.len() - 1)].ln());
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (p.ll(c.exp()), p.ll(d.exp()));
    while b - a > GOLDEN_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = p.ll(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = p.ll(d.exp());
        }
    }
    let mut gamma = (0.5 * (a + b)).exp();
    let mut best = p.ll(gamma);
    if best < vals[k] {
        gamma = grid[k];
        best = vals[k];
    }
    trace.push(best);
    // Newton polish on γ with finite differences
    for _ in 0..5 {
        let h = 1e-4 * gamma;
        let (lm, lp) = (p.ll(gamma - h), p.ll(gamma + h));
        let g1 = (lp - lm) / (2.0 * h);
        let g2 = (lp - 2.0 * best + lm) / (h * h);
        if !(g2 < 0.0) {
            break;
        }
        let cand = gamma - g1 / g2;
        if !(cand > 0.0) {
            break;
        }
        let lc = p.ll(cand);
        if lc >= best {
            gamma = cand;
            best = lc;
        } else {
            break;
        }
    }
    trace.push(best);
    let l0 = p.ll(0.0);
    if l0 >= best {
        gamma = 0.0;
        best = l0;
    }
    trace.push(best);
    (gamma, trace)
}

fn gradient(p: &Profile, gamma: f64) -> f64 {
    if gamma == 0.0 {
        let h = 1e-7;
        (p.ll(h) - p.ll(0.0)) / h
    } else {
        let h = 1e-4 * gamma;
        (p.ll(gamma + h) - p.ll(gamma - h)) / (2.0 * h)
    }
}

pub fn fit_mixed_model(panel: &Panel, spec: &ModelSpec) -> Result<MixedModelFit, MixedError> {
    if panel.group_labels.len() < 2 {
        return Err(MixedError::TooFewGroups);
    }
    let d = design(panel, spec);
    let prof = Profile::new(panel, &d.x);
    prof.eval(0.0)?;
    let (gamma, trace) = maximize(&prof);
    let (loglik, fit) = prof.eval(gamma)?;
    let n = panel.len() as f64;
    let sigma2 = fit.rss / n;
    let coef = |j: usize| {
        let se = (sigma2 * fit.xtx_inv[(j, j)]).sqrt();
        let z = fit.coef[j] / se;
        Coefficient { name: d.names[j].clone(), estimate: fit.coef[j], se, p_value: chi2_sf(z * z, 1.0) }
    };
    let ny = d.n_years;
    let main_end = ny + d.n_main;
    Ok(MixedModelFit {
        beta0: coef(0),
        tau2: gamma * sigma2,
        sigma2,
        lambda: (1..ny).map(coef).collect(),
        beta1: (ny..main_end).map(coef).collect(),
        beta2: (main_end..d.names.len()).map(coef).collect(),
        loglik,
        gamma,
        profile_gradient: gradient(&prof, gamma),
        loglik_trace: trace,
        predictors: spec.main.iter().map(|&k| panel.predictors[k].name.clone()).collect(),
        n_obs: panel.len(),
        n_groups: panel.group_labels.len(),
        reference_year: panel.years()[0],
    })
}

/// Likelihood-ratio test of `small` nested in `big`: `(statistic, df, p)`.
pub fn lr_test(big: &MixedModelFit, small: &MixedModelFit) -> (f64, usize, f64) {
    let stat = (2.0 * (big.loglik - small.loglik)).max(0.0);
    let df = big.n_params() - small.n_params();
    (stat, df, chi2_sf(stat, df as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normal(rng: &mut impl Rng) -> f64 {
        rng.sample(StandardNormal)
    }

    fn simulate(seed: u64, tau: f64, sigma: f64, beta: f64) -> Panel {
        let mut rng = stream_rng(seed, 0);
        let (mut y, mut g, mut t, mut x) = (vec![], vec![], vec![], vec![]);
        for s in 0..50 {
            let a = 2.0 + tau * normal(&mut rng);
            for year in 2009..2015u16 {
                let xv = normal(&mut rng);
                y.push(a + 0.1 * (year - 2009) as f64 + beta * xv + sigma * normal(&mut rng));
                g.push(format!("s{s:02}"));
                t.push(year);
                x.push(xv);
            }
        }
        Panel::new(y, g, t, vec![("x".into(), x)]).unwrap()
    }

    #[test]
    fn recovers_components() {
        let p = simulate(1, 1.0, 0.5, 0.7);
        let f = fit_mixed_model(&p, &ModelSpec { main: vec![0], ..Default::default() }).unwrap();
        assert!((f.tau2 - 1.0).abs() < 0.5, "{}", f.tau2);
        assert!((f.sigma2 - 0.25).abs() < 0.06, "{}", f.sigma2);
        assert!(f.profile_gradient.abs() < 1e-6, "{}", f.profile_gradient);
        assert!(f.loglik_trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(f.lambda.len(), 5);
    }

    #[test]
    fn drops_singleton_groups() {
        let p = Panel::new(
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec!["a".into(), "a".into(), "b".into(), "b".into(), "c".into()],
            vec![2009, 2010, 2009, 2010, 2009],
            vec![],
        )
        .unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.dropped_singletons, 1);
    }

    #[test]
    fn interactions_are_named() {
        let p = simulate(2, 0.5, 1.0, 0.3);
        let f = fit_mixed_model(&p, &ModelSpec { main: vec![0], interactions: vec![0], per_year_interactions: false })
            .unwrap();
        assert_eq!(f.beta2[0].name, "x:t");
        let f = fit_mixed_model(&p, &ModelSpec { main: vec![0], interactions: vec![0], per_year_interactions: true })
            .unwrap();
        assert_eq!(f.beta2.len(), 5);
    }
}
