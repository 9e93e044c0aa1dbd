//! K-means with k-means++ seeding and restarts.

use crate::rng::stream_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KMeansError {
    #[error("need 1 <= k <= {n} points, got k = {k}")]
    BadK { k: usize, n: usize },
    #[error("points must share one nonzero dimension")]
    Ragged,
    #[error("n_restarts must be at least 1")]
    NoRestarts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares.
    pub sse: f64,
    /// Index of the input point closest to each centroid.
    pub nearest_point: Vec<usize>,
    /// SSE after each Lloyd iteration of the winning restart.
    pub sse_trace: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.gen_range(0..n)].clone()];
    let mut d: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &di) in d.iter().enumerate() {
                if u < di {
                    pick = i;
                    break;
                }
                u -= di;
            }
            pick
        };
        centroids.push(points[next].clone());
        for (di, p) in d.iter_mut().zip(points) {
            *di = di.min(dist2(p, centroids.last().unwrap()));
        }
    }
    centroids
}

/// Labels, centroids, final within-cluster sum of squares, its per-iteration trace.
type Run = (Vec<usize>, Vec<Vec<f64>>, f64, Vec<f64>);

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> Run {
    let (n, k, dim) = (points.len(), centroids.len(), points[0].len());
    let mut assign = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k).min_by(|&a, &b| dist2(p, &centroids[a]).total_cmp(&dist2(p, &centroids[b]))).unwrap();
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assign) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // empty clusters take the point farthest from its own centroid
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist2(&points[a], &centroids[assign[a]]).total_cmp(&dist2(&points[b], &centroids[assign[b]]))
                    })
                    .unwrap();
                counts[assign[far]] -= 1;
                assign[far] = c;
                counts[c] = 1;
                centroids[c] = points[far].clone();
                changed = true;
            }
        }
        trace.push(points.iter().zip(&assign).map(|(p, &a)| dist2(p, &centroids[a])).sum());
        if !changed {
            break;
        }
    }
    let sse = *trace.last().unwrap();
    (assign, centroids, sse, trace)
}

/// Best of `n_restarts` runs by SSE. Points are processed in lexicographic
/// order internally, so the result does not depend on input row order.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, n_restarts: usize) -> Result<KMeansResult, KMeansError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(KMeansError::BadK { k, n });
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(KMeansError::Ragged);
    }
    if n_restarts == 0 {
        return Err(KMeansError::NoRestarts);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points[a].iter().zip(&points[b]).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.cmp(&b))
    });
    let sorted: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();
    let mut best: Option<Run> = None;
    for r in 0..n_restarts {
        let mut rng = stream_rng(seed, r as u64);
        let run = lloyd(&sorted, plus_plus(&sorted, k, &mut rng));
        if best.as_ref().map_or(true, |b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (assign_sorted, centroids, sse, sse_trace) = best.unwrap();
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = assign_sorted[pos];
    }
    let nearest_point = centroids
        .iter()
        .map(|c| (0..n).min_by(|&a, &b| dist2(&points[a], c).total_cmp(&dist2(&points[b], c)).then(a.cmp(&b))).unwrap())
        .collect();
    Ok(KMeansResult { assignments, centroids, sse, nearest_point, sse_trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_equals_n() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let r = kmeans(&pts, 6, 1, 3).unwrap();
        assert!(r.sse.abs() < 1e-12);
        let mut a = r.assignments.clone();
        a.sort();
        a.dedup();
        assert_eq!(a.len(), 6);
    }

    #[test]
    fn sse_never_increases() {
        let mut rng = stream_rng(3, 0);
        let pts: Vec<Vec<f64>> = (0..80).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
        let r = kmeans(&pts, 4, 7, 5).unwrap();
        assert!(r.sse_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn row_order_does_not_matter() {
        let mut rng = stream_rng(4, 0);
        let pts: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let mut rev = pts.clone();
        rev.reverse();
        let a = kmeans(&pts, 3, 11, 4).unwrap();
        let b = kmeans(&rev, 3, 11, 4).unwrap();
        assert_eq!(a.sse, b.sse);
        let mut ba = b.assignments.clone();
        ba.reverse();
        assert_eq!(a.assignments, ba);
    }

    #[test]
    fn bad_arguments() {
        assert!(kmeans(&[vec![1.0]], 2, 0, 1).is_err());
        assert!(kmeans(&[vec![1.0], vec![1.0, 2.0]], 1, 0, 1).is_err());
        assert!(kmeans(&[vec![1.0]], 1, 0, 0).is_err());
    }
}
