//! Quotient pseudometric and k-NN geodesic metric.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{euclidean, pairwise_distances, DistanceMatrix};
use crate::overlap::OverlapDecomposition;

/// All-pairs shortest paths over the complete graph weighted by `d`.
pub fn shortest_path_completion(d: &DistanceMatrix) -> DistanceMatrix {
    let n = d.len();
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dense_dijkstra(d, s)).collect();
    DistanceMatrix::from_fn(n, |i, j| rows[i][j].min(rows[j][i]))
}

fn dense_dijkstra(d: &DistanceMatrix, source: usize) -> Vec<f64> {
    let n = d.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for v in 0..n {
            if !done[v] && dist[v] < best {
                best = dist[v];
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        let row = d.row(u);
        for v in 0..n {
            if !done[v] {
                let alt = best + row[v];
                if alt < dist[v] {
                    dist[v] = alt;
                }
            }
        }
    }
    dist
}

/// Input-space Euclidean distances with every overlap class collapsed to
/// distance zero, completed by shortest paths.
pub fn quotient_pseudometric(points: &[Vec<f64>], od: &OverlapDecomposition) -> Result<DistanceMatrix> {
    let n = points.len();
    if let Some(m) = od.max_index() {
        if m >= n {
            return Err(Error::InvalidArgument(format!(
                "overlap class refers to point {m} but only {n} points were given"
            )));
        }
    }
    pairwise_distances(points)?;
    // Shortest paths between classes (singletons included); every point
    // reaches its class-mates for free.
    let labels = od.labels(n);
    let mut class_ids = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for p in 0..n {
        if labels[p] == p {
            class_ids[p] = reps.len();
            reps.push(p);
        }
    }
    let class_of: Vec<usize> = (0..n).map(|p| class_ids[labels[p]]).collect();
    let m = reps.len();
    let mut w = vec![f64::INFINITY; m * m];
    for i in 0..m {
        w[i * m + i] = 0.0;
    }
    let class_weights: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut best = vec![f64::INFINITY; m];
            for q in 0..n {
                let (cp, cq) = (class_of[p], class_of[q]);
                if cp != cq {
                    let dpq = euclidean(&points[p], &points[q]);
                    if dpq < best[cq] {
                        best[cq] = dpq;
                    }
                }
            }
            best.into_iter().enumerate().filter(|(_, v)| v.is_finite()).collect()
        })
        .collect();
    for (p, entries) in class_weights.into_iter().enumerate() {
        let cp = class_of[p];
        for (cq, v) in entries {
            if v < w[cp * m + cq] {
                w[cp * m + cq] = v;
                w[cq * m + cp] = v;
            }
        }
    }
    let class_matrix = DistanceMatrix::from_fn(m, |i, j| w[i * m + j]);
    let completed = shortest_path_completion(&class_matrix);
    Ok(DistanceMatrix::from_fn(n, |i, j| completed.get(class_of[i], class_of[j])))
}

/// Shortest-path distances in the symmetrised k-nearest-neighbour graph.
/// Disconnected pairs get `10 x` the largest finite distance.
pub fn knn_geodesic_metric(points: &[Vec<f64>], k: usize) -> Result<DistanceMatrix> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("k must satisfy 1 <= k < n (k={k}, n={n})")));
    }
    let d = pairwise_distances(points)?;
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| d.get(i, a).total_cmp(&d.get(i, b)).then(a.cmp(&b)));
        for &j in &order[..k] {
            adj[i].push((j, d.get(i, j)));
            adj[j].push((i, d.get(i, j)));
        }
    }
    for a in &mut adj {
        a.sort_by_key(|&(j, _)| j);
        a.dedup_by_key(|&mut (j, _)| j);
    }
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| heap_dijkstra(&adj, s)).collect();
    let max_finite = rows
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let sentinel = 10.0 * max_finite;
    Ok(DistanceMatrix::from_fn(n, |i, j| {
        let v = rows[i][j].min(rows[j][i]);
        if v.is_finite() { v } else { sentinel }
    }))
}

struct Key(f64);
impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn heap_dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Key(0.0), source)));
    while let Some(Reverse((Key(du), u))) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let alt = du + w;
            if alt < dist[v] {
                dist[v] = alt;
                heap.push(Reverse((Key(alt), v)));
            }
        }
    }
    dist
}
