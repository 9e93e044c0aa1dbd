//! Univariate Pearson correlations between features and health attributes.

use super::features::{feature_name, StateFeatureVector, N_FEATURES};
use crate::ingest::StateHealthRecord;
use crate::stats::pearson;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub const MIN_PAIRS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub feature: String,
    pub attribute: String,
    pub r: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Pairwise-complete correlations over matching (state, year) rows. Cells with
/// fewer than three pairs or a constant margin are omitted.
pub fn pearson_table(features: &[StateFeatureVector], attributes: &[StateHealthRecord]) -> Vec<CorrelationCell> {
    let mut by_key: BTreeMap<(String, u16, &str), f64> = BTreeMap::new();
    let mut names = BTreeSet::new();
    for a in attributes {
        by_key.insert((a.state.to_string(), a.year, a.attribute_name.as_str()), a.value);
        names.insert(a.attribute_name.as_str());
    }
    let mut out = Vec::new();
    for k in 0..N_FEATURES {
        for &attr in &names {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for f in features {
                if let (Some(fx), Some(&ay)) = (f.values[k], by_key.get(&(f.state.to_string(), f.year, attr))) {
                    x.push(fx);
                    y.push(ay);
                }
            }
            if x.len() < MIN_PAIRS {
                continue;
            }
            if let Some(r) = pearson(&x, &y) {
                out.push(CorrelationCell {
                    feature: feature_name(k),
                    attribute: attr.to_string(),
                    r,
                    r_squared: r * r,
                    n: x.len(),
                });
            }
        }
    }
    out
}
