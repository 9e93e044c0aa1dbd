//! Classical (Torgerson) multidimensional scaling.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MdsError {
    #[error("distance matrix must be square, symmetric and zero on the diagonal")]
    BadMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdsResult {
    /// `coords[i]` has `dim` entries.
    pub coords: Vec<Vec<f64>>,
    pub dim: usize,
    /// Eigenvalues of the doubly centred matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Fewer than the requested dimensions had positive eigenvalues.
    pub reduced: bool,
}

pub fn classical_mds(d: &DMatrix<f64>, dim: usize) -> Result<MdsResult, MdsError> {
    let n = d.nrows();
    if d.ncols() != n || (0..n).any(|i| d[(i, i)].abs() > 1e-12 || (0..i).any(|j| (d[(i, j)] - d[(j, i)]).abs() > 1e-9))
    {
        return Err(MdsError::BadMatrix);
    }
    let d2 = d.map(|x| x * x);
    let row_means: Vec<f64> = (0..n).map(|i| d2.row(i).mean()).collect();
    let grand = d2.mean();
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (d2[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let keep: Vec<usize> =
        order.iter().copied().take(dim).filter(|&k| eig.eigenvalues[k] > 1e-9 * top.max(1e-300)).collect();
    let mut coords = vec![vec![0.0; keep.len()]; n];
    for (c, &k) in keep.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        let col: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, k)] * s).collect();
        // orientation: first point with a nonzero coordinate is non-negative
        let flip = col.iter().find(|x| x.abs() > 1e-12).is_some_and(|&x| x < 0.0);
        for i in 0..n {
            coords[i][c] = if flip { -col[i] } else { col[i] };
        }
    }
    Ok(MdsResult {
        dim: keep.len(),
        reduced: keep.len() < dim,
        coords,
        eigenvalues: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
    })
}

/// Euclidean distance matrix of row vectors.
pub fn euclidean_distances(points: &[Vec<f64>]) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}
