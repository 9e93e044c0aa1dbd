//! Undirected connectivity: weak components and sampled double-sweep diameter.

use super::{GraphError, NodeId, RefGraph, Undirected};
use crate::rng::stream_rng;
use rayon::prelude::*;
use std::collections::VecDeque;

pub const DEFAULT_DIAMETER_SAMPLES: usize = 64;

/// Weakly connected components, largest first (ties by smallest member).
pub fn weak_components(graph: &RefGraph) -> Vec<Vec<NodeId>> {
    let und = graph.undirected();
    let n = und.node_count();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        queue.push_back(s);
        let mut comp = Vec::new();
        while let Some(u) = queue.pop_front() {
            comp.push(NodeId(u as u32));
            for &v in und.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    queue.push_back(v as usize);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

/// BFS from `s`; returns (eccentricity, a farthest node). `dist` must be all u32::MAX
/// on entry and is restored before returning.
fn bfs_far(und: &Undirected, s: usize, dist: &mut [u32], queue: &mut Vec<u32>) -> (u32, usize) {
    queue.clear();
    dist[s] = 0;
    queue.push(s as u32);
    let mut head = 0;
    let (mut ecc, mut far) = (0u32, s);
    while head < queue.len() {
        let u = queue[head] as usize;
        head += 1;
        let du = dist[u];
        if du > ecc || (du == ecc && u < far) {
            ecc = du;
            far = u;
        }
        for &v in und.neighbors(u) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = du + 1;
                queue.push(v);
            }
        }
    }
    for &u in queue.iter() {
        dist[u as usize] = u32::MAX;
    }
    (ecc, far)
}

/// Lower bound on the undirected diameter by double-sweep BFS.
///
/// `sample_size` start nodes are drawn without replacement from a stream seeded
/// by `seed`; from each start the farthest node is found and swept again. When
/// `sample_size >= node_count` every node is a start and the result is exact.
/// Eccentricities are taken within each start's component.
pub fn approx_diameter(graph: &RefGraph, sample_size: usize, seed: u64) -> Result<u32, GraphError> {
    let n = graph.node_count();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let und = graph.undirected();
    let starts: Vec<usize> = if sample_size >= n {
        (0..n).collect()
    } else {
        let mut rng = stream_rng(seed, 0);
        let mut v = rand::seq::index::sample(&mut rng, n, sample_size.max(1)).into_vec();
        v.sort_unstable();
        v
    };
    let best = starts
        .par_iter()
        .map_init(
            || (vec![u32::MAX; n], Vec::new()),
            |(dist, queue), &s| {
                let (e1, far) = bfs_far(und, s, dist, queue);
                let (e2, _) = bfs_far(und, far, dist, queue);
                e1.max(e2)
            },
        )
        .max()
        .unwrap_or(0);
    Ok(best)
}
