//! Principal-axis factor analysis of a correlation matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub const MAX_ITERATIONS: usize = 100;
pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FactorError {
    #[error("correlation matrix must be square and symmetric")]
    NotSymmetric,
    #[error("need 1 <= n_factors < {vars}, got {got}")]
    BadFactorCount { got: usize, vars: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorLoadings {
    pub n_factors: usize,
    /// `loadings[v][f]`: variable `v` on factor `f`.
    pub loadings: Vec<Vec<f64>>,
    pub communalities: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest off-diagonal `|R − LLᵀ|`.
    pub max_residual: f64,
}

impl FactorLoadings {
    /// Factor with the largest absolute loading, per variable.
    pub fn dominant_factor(&self) -> Vec<usize> {
        self.loadings
            .iter()
            .map(|row| (0..row.len()).max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs())).unwrap_or(0))
            .collect()
    }
}

/// Correlation matrix of equal-length columns (pairwise Pearson; 0 off the
/// diagonal for constant columns).
pub fn correlation_matrix(columns: &[Vec<f64>]) -> DMatrix<f64> {
    let p = columns.len();
    DMatrix::from_fn(
        p,
        p,
        |i, j| {
            if i == j {
                1.0
            } else {
                crate::stats::pearson(&columns[i], &columns[j]).unwrap_or(0.0)
            }
        },
    )
}

fn initial_communalities(r: &DMatrix<f64>) -> Vec<f64> {
    let p = r.nrows();
    match r.clone().try_inverse() {
        Some(inv) if (0..p).all(|i| inv[(i, i)] >= 1.0 - 1e-12) => {
            (0..p).map(|i| (1.0 - 1.0 / inv[(i, i)]).clamp(0.0, 1.0)).collect()
        }
        // singular: largest absolute correlation in each row
        _ => (0..p).map(|i| (0..p).filter(|&j| j != i).map(|j| r[(i, j)].abs()).fold(0.0, f64::max)).collect(),
    }
}

pub fn factor_analysis(r: &DMatrix<f64>, n_factors: usize) -> Result<FactorLoadings, FactorError> {
    let p = r.nrows();
    if r.ncols() != p || (0..p).any(|i| (0..i).any(|j| (r[(i, j)] - r[(j, i)]).abs() > 1e-10)) {
        return Err(FactorError::NotSymmetric);
    }
    if n_factors == 0 || n_factors >= p {
        return Err(FactorError::BadFactorCount { got: n_factors, vars: p });
    }
    let mut h2 = initial_communalities(r);
    let mut loadings = DMatrix::zeros(p, n_factors);
    let (mut iterations, mut converged) = (0, false);
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut reduced = r.clone();
        for i in 0..p {
            reduced[(i, i)] = h2[i];
        }
        let eig = SymmetricEigen::new(reduced);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for (f, &k) in order.iter().take(n_factors).enumerate() {
            let scale = eig.eigenvalues[k].max(0.0).sqrt();
            for v in 0..p {
                loadings[(v, f)] = eig.eigenvectors[(v, k)] * scale;
            }
        }
        let next: Vec<f64> = (0..p).map(|v| loadings.row(v).norm_squared().min(1.0)).collect();
        let change = next.iter().zip(&h2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        h2 = next;
        if change < TOLERANCE {
            converged = true;
            break;
        }
    }
    for f in 0..n_factors {
        let col = loadings.column(f);
        let k = (0..p).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs())).unwrap();
        if col[k] < 0.0 {
            loadings.column_mut(f).neg_mut();
        }
    }
    let fitted = &loadings * loadings.transpose();
    let mut max_residual = 0.0f64;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                max_residual = max_residual.max((r[(i, j)] - fitted[(i, j)]).abs());
            }
        }
    }
    Ok(FactorLoadings {
        n_factors,
        loadings: (0..p).map(|v| loadings.row(v).iter().copied().collect()).collect(),
        communalities: h2,
        iterations,
        converged,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_no_common_factor() {
        let f = factor_analysis(&DMatrix::identity(6, 6), 2).unwrap();
        assert!(f.loadings.iter().flatten().all(|x| x.abs() < 1e-9));
        assert!(f.communalities.iter().all(|h| h.abs() < 1e-9));
    }

    #[test]
    fn single_latent_factor_is_recovered() {
        let v = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4];
        let r = DMatrix::from_fn(6, 6, |i, j| if i == j { 1.0 } else { v[i] * v[j] });
        let f = factor_analysis(&r, 2).unwrap();
        assert!(f.converged);
        for i in 0..6 {
            assert!((f.loadings[i][0] - v[i]).abs() < 1e-3, "{:?}", f.loadings);
        }
        assert!(f.max_residual < 1e-3);
    }

    #[test]
    fn rejects_bad_input() {
        let mut r = DMatrix::identity(3, 3);
        r[(0, 1)] = 0.5;
        assert_eq!(factor_analysis(&r, 1), Err(FactorError::NotSymmetric));
        assert!(factor_analysis(&DMatrix::identity(3, 3), 3).is_err());
    }
}
