//! Vietoris–Rips persistent homology over Z/2 and the metrics fed into it.

pub mod metric;
pub mod reduction;
pub mod rips;

pub use metric::{knn_geodesic_metric, quotient_pseudometric, shortest_path_completion};
pub use reduction::{
    betti_at_scale, persistent_homology, persistent_homology_with, Bar, Barcode, ReductionOptions,
};
pub use rips::{rips_filtration, rips_filtration_capped, Filtration, Simplex, DEFAULT_SIMPLEX_CAP};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::DistanceMatrix;
use crate::overlap::{OverlapDecomposition, UnionFind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomologyOptions {
    /// Highest homology dimension reported.
    pub max_dim: usize,
    pub max_scale: f64,
    pub simplex_cap: usize,
    pub clearing: bool,
}

impl HomologyOptions {
    pub fn new(max_dim: usize, max_scale: f64) -> Self {
        Self {
            max_dim,
            max_scale,
            simplex_cap: DEFAULT_SIMPLEX_CAP,
            clearing: false,
        }
    }
}

/// Barcode of the Rips filtration of `d` in dimensions `0..=opts.max_dim`.
///
/// Points at distance zero from each other are merged first; in a
/// pseudometric satisfying the triangle inequality this only removes
/// zero-length bars.
pub fn metric_homology(d: &DistanceMatrix, opts: &HomologyOptions) -> Result<Barcode> {
    let (reduced, merged) = collapse_zero_distances(d);
    let f = rips_filtration_capped(&reduced, opts.max_dim + 1, opts.max_scale, opts.simplex_cap)?;
    let mut b = persistent_homology_with(
        &f,
        ReductionOptions {
            clearing: opts.clearing,
        },
    )
    .truncated(opts.max_dim);
    b.zero_length[0] += merged;
    Ok(b)
}

/// Drops every point at distance zero from an earlier point. Returns the
/// reduced matrix and the number of points dropped.
pub fn collapse_zero_distances(d: &DistanceMatrix) -> (DistanceMatrix, usize) {
    let n = d.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in 0..i {
            if d.get(i, j) == 0.0 {
                uf.union(i, j);
            }
        }
    }
    let keep: Vec<usize> = uf.classes(1).into_iter().map(|c| c[0]).collect();
    let dropped = n - keep.len();
    if dropped == 0 {
        return (d.clone(), 0);
    }
    (DistanceMatrix::from_fn(keep.len(), |i, j| d.get(keep[i], keep[j])), dropped)
}

/// Betti numbers `0..=max_dim` of the Rips complex of `d` at scale `epsilon`.
///
/// Vertices whose closed neighbourhood at that scale is contained in a
/// neighbour's are removed first; this does not change the homotopy type of
/// the flag complex, and keeps dense clusters small.
pub fn rips_betti_at(d: &DistanceMatrix, max_dim: usize, epsilon: f64, simplex_cap: usize) -> Result<Vec<usize>> {
    let (d, _) = collapse_zero_distances(d);
    let keep = undominated_vertices(&d, epsilon);
    let core = DistanceMatrix::from_fn(keep.len(), |i, j| d.get(keep[i], keep[j]));
    let f = rips_filtration_capped(&core, max_dim + 1, epsilon, simplex_cap)?;
    let b = persistent_homology_with(&f, ReductionOptions { clearing: true }).truncated(max_dim);
    Ok(betti_at_scale(&b, epsilon))
}

fn undominated_vertices(d: &DistanceMatrix, epsilon: f64) -> Vec<usize> {
    let n = d.len();
    let words = n.div_ceil(64);
    let mut nbhd = vec![0u64; n * words];
    for i in 0..n {
        for j in 0..n {
            if i == j || d.get(i, j) <= epsilon {
                nbhd[i * words + j / 64] |= 1 << (j % 64);
            }
        }
    }
    let mut alive = vec![true; n];
    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..n {
            if !alive[v] {
                continue;
            }
            let nv = &nbhd[v * words..(v + 1) * words];
            let dominated = (0..n).any(|u| {
                u != v
                    && alive[u]
                    && nv[u / 64] >> (u % 64) & 1 == 1
                    && nv.iter().zip(&nbhd[u * words..(u + 1) * words]).all(|(a, b)| a & !b == 0)
            });
            if dominated {
                alive[v] = false;
                for w in 0..n {
                    nbhd[w * words + v / 64] &= !(1 << (v % 64));
                }
                changed = true;
            }
        }
    }
    (0..n).filter(|&v| alive[v]).collect()
}

/// Persistent homology of the quotient pseudometric, which estimates the
/// homology of the dataset with its overlap classes identified.
pub fn quotient_homology(
    points: &[Vec<f64>],
    od: &OverlapDecomposition,
    max_dim: usize,
    max_scale: f64,
) -> Result<Barcode> {
    let d = quotient_pseudometric(points, od)?;
    metric_homology(&d, &HomologyOptions::new(max_dim, max_scale))
}

/// Persistent homology of the Euclidean distances between `points`.
pub fn point_cloud_homology(points: &[Vec<f64>], max_dim: usize, max_scale: f64) -> Result<Barcode> {
    let d = crate::linalg::pairwise_distances(points)?;
    metric_homology(&d, &HomologyOptions::new(max_dim, max_scale))
}
