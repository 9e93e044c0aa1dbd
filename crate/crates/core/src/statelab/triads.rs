//! Per-state triad composition and weight reciprocity: the regression
//! candidates beyond f1..f31.

use super::factor::{correlation_matrix, factor_analysis, FactorError, FactorLoadings};
use super::mixed::ExtraColumn;
use crate::graph::{extract_subnetwork, PhysicianRegistry, RefGraph, SubnetworkKind};
use crate::metrics::reciprocity;
use crate::motifs::{choose3, triad_census_exact, triad_census_mc, EXACT_TRIPLE_LIMIT, TRIAD_NAMES};
use crate::rng::derive_seed;
use crate::states::StateCode;
use crate::stats::{mean, standardize};
use serde::{Deserialize, Serialize};

/// Classes entering the factor analysis (1-based ids).
pub const FACTOR_CLASSES: std::ops::RangeInclusive<u8> = 4..=16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTriadProfile {
    pub state: StateCode,
    pub year: u16,
    /// Share of all triples in each class of the intrastate network.
    pub proportions: [f64; 16],
    pub exact: bool,
    /// Weight reciprocity correlation over mutual pairs.
    pub reciprocity: Option<f64>,
}

/// Triad shares and reciprocity of one intrastate network. The census is
/// exact up to `EXACT_TRIPLE_LIMIT` triples, sampled with `mc_samples` draws
/// beyond it.
pub fn state_triad_profile(
    national: &RefGraph,
    registry: &PhysicianRegistry,
    state: StateCode,
    year: u16,
    mc_samples: u64,
    seed: u64,
) -> Result<StateTriadProfile, String> {
    let sub = extract_subnetwork(national, registry, SubnetworkKind::Intrastate(state)).map_err(|e| e.to_string())?;
    let g = &sub.graph;
    let census = if choose3(g.node_count()) <= EXACT_TRIPLE_LIMIT {
        triad_census_exact(g)
    } else {
        let label = u64::from(u16::from_be_bytes(state.bytes()));
        triad_census_mc(g, mc_samples, derive_seed(seed, label))
    }
    .map_err(|e| e.to_string())?;
    Ok(StateTriadProfile {
        state,
        year,
        proportions: census.proportions(),
        exact: census.is_exact(),
        reciprocity: reciprocity(g).corr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriadFactorGroups {
    /// Rows follow `FACTOR_CLASSES`.
    pub loadings: FactorLoadings,
    /// Class ids grouped by the factor on which they load most.
    pub groups: Vec<Vec<u8>>,
}

/// Principal-axis factoring of the class-share correlations across profiles.
pub fn triad_factor_groups(profiles: &[StateTriadProfile], n_factors: usize) -> Result<TriadFactorGroups, FactorError> {
    let columns: Vec<Vec<f64>> =
        FACTOR_CLASSES.map(|c| profiles.iter().map(|p| p.proportions[c as usize - 1]).collect()).collect();
    let loadings = factor_analysis(&correlation_matrix(&columns), n_factors)?;
    let mut groups = vec![Vec::new(); n_factors];
    for (row, f) in loadings.dominant_factor().into_iter().enumerate() {
        groups[f].push(*FACTOR_CLASSES.start() + row as u8);
    }
    Ok(TriadFactorGroups { loadings, groups })
}

/// One predictor per non-empty group, `triad_g<k>`: the mean standardized
/// share of its classes.
pub fn triad_group_columns(profiles: &[StateTriadProfile], groups: &TriadFactorGroups) -> Vec<ExtraColumn> {
    let z: Vec<Vec<f64>> =
        (0..16).map(|k| standardize(&profiles.iter().map(|p| p.proportions[k]).collect::<Vec<_>>())).collect();
    groups
        .groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(f, g)| {
            let col = profiles
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let v: Vec<f64> = g.iter().map(|&c| z[c as usize - 1][i]).collect();
                    ((p.state, p.year), mean(&v))
                })
                .filter(|(_, v)| v.is_finite())
                .collect();
            (format!("triad_g{}", f + 1), col)
        })
        .collect()
}

pub fn reciprocity_column(profiles: &[StateTriadProfile]) -> ExtraColumn {
    let col = profiles.iter().filter_map(|p| p.reciprocity.map(|r| ((p.state, p.year), r))).collect();
    ("reciprocity".to_string(), col)
}

/// Class names in `FACTOR_CLASSES` order, for labelling loadings.
pub fn factor_class_names() -> Vec<String> {
    FACTOR_CLASSES.map(|c| format!("T{c} ({})", TRIAD_NAMES[c as usize - 1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(state: &str, shares: [f64; 16]) -> StateTriadProfile {
        StateTriadProfile {
            state: StateCode::new(state).unwrap(),
            year: 2010,
            proportions: shares,
            exact: true,
            reciprocity: Some(0.5),
        }
    }

    #[test]
    fn two_latent_blocks_split_into_two_groups() {
        // classes 4..9 follow u, classes 10..16 follow v
        let states = ["AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "ID"];
        let profiles: Vec<_> = states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let u = (i as f64 * 1.7).sin();
                let v = (i as f64 * 0.9).cos();
                let mut p = [0.0; 16];
                for c in 4..=16usize {
                    let jitter = ((i * 31 + c * 17) % 7) as f64 * 1e-3;
                    p[c - 1] = if c <= 9 { 1.0 + u } else { 1.0 + v } + jitter;
                }
                profile(s, p)
            })
            .collect();
        let g = triad_factor_groups(&profiles, 2).unwrap();
        let mut sets: Vec<Vec<u8>> = g.groups.clone();
        sets.sort();
        assert_eq!(sets, vec![(4..=9).collect::<Vec<u8>>(), (10..=16).collect::<Vec<u8>>()]);
        let cols = triad_group_columns(&profiles, &g);
        assert_eq!(cols.len(), 2);
        assert_eq!(cols[0].1.len(), states.len());
        assert_eq!(reciprocity_column(&profiles).1.len(), states.len());
    }
}
