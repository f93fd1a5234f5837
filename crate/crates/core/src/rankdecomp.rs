//! Ranks of the per-region affine maps over populated regions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::numerical_rank;
use crate::network::{GlobalCodeword, Mlp};
use crate::polyhedra::PopulatedDecomposition;

/// Numerical rank of the linear part of the region map of `j` at `layer`.
pub fn region_rank(net: &Mlp, j: &GlobalCodeword, layer: usize, tol: f64) -> Result<usize> {
    let map = net.region_affine_map(j, layer)?;
    Ok(numerical_rank(map.linear(), tol))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankProfile {
    pub layer: usize,
    pub input_dim: usize,
    pub ranks: BTreeMap<GlobalCodeword, usize>,
    /// Rank value -> number of regions.
    pub histogram: BTreeMap<usize, usize>,
}

impl RankProfile {
    pub fn num_regions(&self) -> usize {
        self.ranks.len()
    }

    /// Fraction of regions whose rank is below the input dimension.
    pub fn low_rank_fraction(&self) -> f64 {
        if self.ranks.is_empty() {
            return 0.0;
        }
        let low = self.ranks.values().filter(|&&r| r < self.input_dim).count();
        low as f64 / self.ranks.len() as f64
    }
}

/// One rank per populated region of `decomp` (which fixes the layer).
pub fn rank_profile(net: &Mlp, decomp: &PopulatedDecomposition, tol: f64) -> Result<RankProfile> {
    let layer = decomp.layer;
    let ranks = decomp
        .regions()
        .par_iter()
        .map(|r| Ok((r.codeword.clone(), region_rank(net, &r.codeword, layer, tol)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut histogram = BTreeMap::new();
    for (_, r) in &ranks {
        *histogram.entry(*r).or_insert(0) += 1;
    }
    Ok(RankProfile {
        layer,
        input_dim: net.input_dim(),
        ranks: ranks.into_iter().collect(),
        histogram,
    })
}

/// Rank profile of the regions populated by `inputs` at `layer`.
pub fn rank_histogram(net: &Mlp, inputs: &[Vec<f64>], layer: usize, tol: f64) -> Result<RankProfile> {
    net.check_layer(layer)?;
    let mut ranks = BTreeMap::new();
    for x in inputs {
        let j = net.global_codeword(x, layer)?;
        ranks.entry(j).or_insert(0usize);
    }
    let computed = ranks
        .keys()
        .cloned()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| Ok((region_rank(net, &j, layer, tol)?, j)))
        .collect::<Result<Vec<_>>>()?;
    let mut histogram = BTreeMap::new();
    for (r, j) in computed {
        *histogram.entry(r).or_insert(0) += 1;
        ranks.insert(j, r);
    }
    Ok(RankProfile {
        layer,
        input_dim: net.input_dim(),
        ranks,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_RANK_TOL;
    use crate::network::tests::abs_net;

    #[test]
    fn all_zero_codeword_has_rank_zero() {
        let net = Mlp::init_kaiming(&[3, 6, 6, 2], 1).unwrap();
        let j = GlobalCodeword::from_layers(&[vec![false; 6], vec![false; 6]]);
        assert_eq!(region_rank(&net, &j, 2, DEFAULT_RANK_TOL).unwrap(), 0);
        let ones = GlobalCodeword::from_layers(&[vec![true; 6], vec![true; 6]]);
        assert_eq!(region_rank(&net, &ones, 2, DEFAULT_RANK_TOL).unwrap(), 3);
    }

    #[test]
    fn bottleneck_caps_rank() {
        let net = Mlp::init_kaiming(&[4, 8, 1, 8, 3], 2).unwrap();
        let inputs: Vec<Vec<f64>> = (0..50)
            .map(|i| (0..4).map(|k| ((i * 7 + k * 3) as f64 * 0.37).sin()).collect())
            .collect();
        let p = rank_histogram(&net, &inputs, 4, DEFAULT_RANK_TOL).unwrap();
        assert!(p.ranks.values().all(|&r| r <= 1));
        assert_eq!(p.histogram.values().sum::<usize>(), p.num_regions());
    }

    #[test]
    fn abs_net_ranks() {
        let net = abs_net();
        let grid: Vec<Vec<f64>> = vec![vec![-1.0], vec![-0.5], vec![0.5], vec![1.0]];
        let p = rank_histogram(&net, &grid, 2, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(p.num_regions(), 2);
        assert_eq!(p.histogram, BTreeMap::from([(1, 2)]));
        assert_eq!(p.low_rank_fraction(), 0.0);
    }
}
