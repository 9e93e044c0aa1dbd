//! Forward selection of main effects, then backward elimination of time
//! interactions, both by likelihood-ratio tests on ML fits.

use super::mixed::{fit_mixed_model, lr_test, MixedError, MixedModelFit, ModelSpec, Panel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryCorrection {
    /// Each forward step tests at `alpha / remaining candidates`.
    #[default]
    Bonferroni,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseConfig {
    pub alpha: f64,
    pub entry_correction: EntryCorrection,
    pub per_year_interactions: bool,
}

impl Default for StepwiseConfig {
    fn default() -> Self {
        StepwiseConfig { alpha: 0.05, entry_correction: EntryCorrection::default(), per_year_interactions: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    Add,
    Reject,
    Drop,
    Keep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub action: StepAction,
    pub term: String,
    pub lr_stat: f64,
    pub df: usize,
    pub p_value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseResult {
    pub selected: Vec<String>,
    pub interactions: Vec<String>,
    pub steps: Vec<Step>,
    pub fit: MixedModelFit,
}

pub fn stepwise_select(
    panel: &Panel,
    candidates: &[usize],
    config: &StepwiseConfig,
) -> Result<StepwiseResult, MixedError> {
    let mut spec = ModelSpec { per_year_interactions: config.per_year_interactions, ..Default::default() };
    let mut current = fit_mixed_model(panel, &spec)?;
    let mut steps = Vec::new();
    let mut remaining: Vec<usize> = candidates.to_vec();
    while !remaining.is_empty() {
        let mut best: Option<(usize, MixedModelFit, (f64, usize, f64))> = None;
        for (pos, &k) in remaining.iter().enumerate() {
            let mut trial = spec.clone();
            trial.main.push(k);
            // collinear candidates cannot enter
            let Ok(fit) = fit_mixed_model(panel, &trial) else { continue };
            let test = lr_test(&fit, &current);
            if best.as_ref().map_or(true, |b| test.0 > b.2 .0) {
                best = Some((pos, fit, test));
            }
        }
        let Some((pos, fit, (stat, df, p))) = best else { break };
        let threshold = match config.entry_correction {
            EntryCorrection::Bonferroni => config.alpha / remaining.len() as f64,
            EntryCorrection::None => config.alpha,
        };
        let term = panel.predictors[remaining[pos]].name.clone();
        if p < threshold {
            steps.push(Step { action: StepAction::Add, term, lr_stat: stat, df, p_value: p, threshold });
            spec.main.push(remaining.remove(pos));
            current = fit;
        } else {
            steps.push(Step { action: StepAction::Reject, term, lr_stat: stat, df, p_value: p, threshold });
            break;
        }
    }
    if !spec.main.is_empty() {
        spec.interactions = spec.main.clone();
        current = fit_mixed_model(panel, &spec)?;
        while !spec.interactions.is_empty() {
            let mut weakest: Option<(usize, MixedModelFit, (f64, usize, f64))> = None;
            for pos in 0..spec.interactions.len() {
                let mut trial = spec.clone();
                trial.interactions.remove(pos);
                let fit = fit_mixed_model(panel, &trial)?;
                let test = lr_test(&current, &fit);
                if weakest.as_ref().map_or(true, |w| test.2 > w.2 .2) {
                    weakest = Some((pos, fit, test));
                }
            }
            let (pos, fit, (stat, df, p)) = weakest.unwrap();
            let name = panel.predictors[spec.interactions[pos]].name.clone();
            let term = if config.per_year_interactions { format!("{name}:year") } else { format!("{name}:t") };
            if p >= config.alpha {
                steps.push(Step {
                    action: StepAction::Drop,
                    term,
                    lr_stat: stat,
                    df,
                    p_value: p,
                    threshold: config.alpha,
                });
                spec.interactions.remove(pos);
                current = fit;
            } else {
                steps.push(Step {
                    action: StepAction::Keep,
                    term,
                    lr_stat: stat,
                    df,
                    p_value: p,
                    threshold: config.alpha,
                });
                break;
            }
        }
    }
    Ok(StepwiseResult {
        selected: spec.main.iter().map(|&k| panel.predictors[k].name.clone()).collect(),
        interactions: spec.interactions.iter().map(|&k| panel.predictors[k].name.clone()).collect(),
        steps,
        fit: current,
    })
}
