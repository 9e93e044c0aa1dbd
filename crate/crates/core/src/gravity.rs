//! Interstate referral flows and the gravity law
//! `F_ij = G · M_i^β_i · M_j^β_j / D_ij^β_d`, fitted by OLS on logs.
//!
//! Flows count referrals (edge weights), not distinct patients; the source
//! data carries no patient identifiers.

use crate::graph::{PhysicianRegistry, RefGraph};
use crate::states::{capital_coordinates, haversine_km, StateCode, UnknownState, STATES_50};
use crate::stats::{f_sf, ols, OlsError};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const N_STATES: usize = 50;
pub const MIN_POSITIVE_PAIRS: usize = 30;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GravityError {
    #[error("need at least {MIN_POSITIVE_PAIRS} positive-flow pairs, got {0}")]
    TooFewPairs(usize),
    #[error(transparent)]
    Ols(#[from] OlsError),
    #[error(transparent)]
    UnknownState(#[from] UnknownState),
    #[error("no flow matrices to combine")]
    NoYears,
}

fn state_index(s: StateCode) -> Option<usize> {
    STATES_50.iter().position(|c| *c == s.as_str())
}

/// Interstate flows among the 50 states, with the weight that did not enter them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFlowMatrix {
    /// Row-major `F[i][j]`, states in alphabetical order; diagonal zero.
    pub flows: Vec<f64>,
    /// Physicians labelled with each state.
    pub physicians: Vec<f64>,
    pub years: Vec<u16>,
    /// Weight on edges whose endpoints share a state.
    pub intrastate_weight: u64,
    /// Weight on edges with an unlabelled or non-state endpoint.
    pub excluded_weight: u64,
    pub excluded_edges: u64,
}

impl StateFlowMatrix {
    pub fn states() -> Vec<StateCode> {
        StateCode::all_states()
    }

    pub fn flow(&self, from: StateCode, to: StateCode) -> f64 {
        match (state_index(from), state_index(to)) {
            (Some(i), Some(j)) => self.flows[i * N_STATES + j],
            _ => 0.0,
        }
    }

    pub fn total_flow(&self) -> f64 {
        self.flows.iter().sum()
    }

    /// Sums flows across years; physician counts are averaged.
    pub fn sum_years(matrices: &[StateFlowMatrix]) -> Result<StateFlowMatrix, GravityError> {
        let first = matrices.first().ok_or(GravityError::NoYears)?;
        let mut out = first.clone();
        for m in &matrices[1..] {
            for (a, b) in out.flows.iter_mut().zip(&m.flows) {
                *a += b;
            }
            for (a, b) in out.physicians.iter_mut().zip(&m.physicians) {
                *a += b;
            }
            out.years.extend(&m.years);
            out.intrastate_weight += m.intrastate_weight;
            out.excluded_weight += m.excluded_weight;
            out.excluded_edges += m.excluded_edges;
        }
        let k = matrices.len() as f64;
        for p in out.physicians.iter_mut() {
            *p /= k;
        }
        out.years.sort_unstable();
        Ok(out)
    }
}

pub fn aggregate_flows(graph: &RefGraph, registry: &PhysicianRegistry, year: u16) -> StateFlowMatrix {
    let idx: Vec<Option<usize>> = registry.states().iter().map(|s| s.and_then(state_index)).collect();
    let mut physicians = vec![0.0; N_STATES];
    for i in idx.iter().flatten() {
        physicians[*i] += 1.0;
    }
    let (flows, intra, excl_w, excl_e) = (0..graph.node_count())
        .into_par_iter()
        .fold(
            || (vec![0u64; N_STATES * N_STATES], 0u64, 0u64, 0u64),
            |(mut f, mut intra, mut ew, mut ee), u| {
                for (&v, &w) in graph.out_targets(u).iter().zip(graph.out_weights(u)) {
                    match (idx[u], idx[v as usize]) {
                        (Some(a), Some(b)) if a == b => intra += w,
                        (Some(a), Some(b)) => f[a * N_STATES + b] += w,
                        _ => {
                            ew += w;
                            ee += 1;
                        }
                    }
                }
                (f, intra, ew, ee)
            },
        )
        .reduce(
            || (vec![0u64; N_STATES * N_STATES], 0, 0, 0),
            |mut a, b| {
                for (x, y) in a.0.iter_mut().zip(b.0) {
                    *x += y;
                }
                (a.0, a.1 + b.1, a.2 + b.2, a.3 + b.3)
            },
        );
    StateFlowMatrix {
        flows: flows.into_iter().map(|x| x as f64).collect(),
        physicians,
        years: vec![year],
        intrastate_weight: intra,
        excluded_weight: excl_w,
        excluded_edges: excl_e,
    }
}

/// Great-circle distance between two state capitals, km.
pub fn capital_distance(a: StateCode, b: StateCode) -> Result<f64, UnknownState> {
    let pa = capital_coordinates(a).ok_or_else(|| UnknownState(a.to_string()))?;
    let pb = capital_coordinates(b).ok_or_else(|| UnknownState(b.to_string()))?;
    Ok(haversine_km(pa, pb))
}

/// Capital distances for the 50 states, row-major in alphabetical order.
pub fn distance_matrix() -> Vec<f64> {
    let s = StateCode::all_states();
    let mut d = vec![0.0; N_STATES * N_STATES];
    for i in 0..N_STATES {
        for j in 0..N_STATES {
            d[i * N_STATES + j] = capital_distance(s[i], s[j]).expect("all 50 states have capitals");
        }
    }
    d
}

/// One directed state pair entering the regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GravityObservation {
    pub flow: f64,
    pub mass_from: f64,
    pub mass_to: f64,
    pub distance_km: f64,
}

/// Off-diagonal pairs of `matrix` with the given distances.
pub fn observations(matrix: &StateFlowMatrix, distances: &[f64]) -> Vec<GravityObservation> {
    let mut out = Vec::with_capacity(N_STATES * (N_STATES - 1));
    for i in 0..N_STATES {
        for j in 0..N_STATES {
            if i != j {
                out.push(GravityObservation {
                    flow: matrix.flows[i * N_STATES + j],
                    mass_from: matrix.physicians[i],
                    mass_to: matrix.physicians[j],
                    distance_km: distances[i * N_STATES + j],
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravityFit {
    /// `ln G`.
    pub g_log: f64,
    pub beta_i: f64,
    pub beta_j: f64,
    /// Distance-decay exponent; positive means flows fall with distance.
    pub beta_d: f64,
    /// Standard errors of `(g_log, beta_i, beta_j, beta_d)`.
    pub std_errors: [f64; 4],
    pub r_squared: f64,
    pub residual_se: f64,
    /// Overall F-test p-value.
    pub p_value_overall: f64,
    pub n_pairs: usize,
    /// Pairs dropped for zero flow (or zero mass).
    pub n_zero_excluded: usize,
    pub flow_measure: String,
}

pub fn fit_gravity(obs: &[GravityObservation]) -> Result<GravityFit, GravityError> {
    let used: Vec<&GravityObservation> =
        obs.iter().filter(|o| o.flow > 0.0 && o.mass_from > 0.0 && o.mass_to > 0.0 && o.distance_km > 0.0).collect();
    let n = used.len();
    if n < MIN_POSITIVE_PAIRS {
        return Err(GravityError::TooFewPairs(n));
    }
    let x = DMatrix::from_fn(n, 4, |r, c| match c {
        0 => 1.0,
        1 => used[r].mass_from.ln(),
        2 => used[r].mass_to.ln(),
        _ => used[r].distance_km.ln(),
    });
    let y = DVector::from_iterator(n, used.iter().map(|o| o.flow.ln()));
    let f = ols(&x, &y)?;
    let ess = f.tss - f.rss;
    let p_value =
        if f.rss <= 0.0 { 0.0 } else { f_sf((ess / 3.0) / (f.rss / f.df_resid as f64), 3.0, f.df_resid as f64) };
    Ok(GravityFit {
        g_log: f.coef[0],
        beta_i: f.coef[1],
        beta_j: f.coef[2],
        beta_d: -f.coef[3],
        std_errors: [f.std_errors[0], f.std_errors[1], f.std_errors[2], f.std_errors[3]],
        r_squared: f.r_squared,
        residual_se: f.sigma2.sqrt(),
        p_value_overall: p_value,
        n_pairs: n,
        n_zero_excluded: obs.len() - n,
        flow_measure: "referral count (proxy for distinct patients)".into(),
    })
}

/// Fits the pairs of several years as separate observations.
pub fn fit_gravity_pooled(matrices: &[StateFlowMatrix]) -> Result<GravityFit, GravityError> {
    let d = distance_matrix();
    let obs: Vec<GravityObservation> = matrices.iter().flat_map(|m| observations(m, &d)).collect();
    fit_gravity(&obs)
}
