//! H-representations of activation regions, membership, and region volumes.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::lp::{self, FeasibilityProblem, SolverOptions};
use crate::network::{GlobalCodeword, Mlp};

pub const DEFAULT_BOX_HALF_WIDTH: f64 = 100.0;
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-7;

/// `{x | A x <= b}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPolyhedron {
    a: Matrix,
    b: Vec<f64>,
}

impl HPolyhedron {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::dims("polyhedron rhs", a.rows(), b.len()));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("polyhedron rhs"));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    /// Largest constraint violation `max(Ax - b)` (negative inside).
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::dims("polyhedron point", self.dim(), x.len()));
        }
        Ok((0..self.b.len())
            .map(|i| dot(self.a.row(i), x) - self.b[i])
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.max_violation(x)? <= tol)
    }

    pub fn is_feasible(&self, tol: f64) -> Result<bool> {
        let p = FeasibilityProblem::inequalities(self.a.clone(), self.b.clone())?;
        Ok(lp::solve_feasibility(&p, tol)?.is_feasible())
    }
}

pub fn contains(p: &HPolyhedron, x: &[f64], tol: f64) -> Result<bool> {
    p.contains(x, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dims("bounding box", lower.len(), upper.len()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidArgument(
                "bounding box needs finite lower < upper in every coordinate".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    /// `[-half_width, half_width]^dim`.
    pub fn symmetric(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn default_for(dim: usize) -> Self {
        Self::symmetric(dim, DEFAULT_BOX_HALF_WIDTH).expect("valid default box")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    /// Rows `x_i <= u_i`, `-x_i <= -l_i` for each coordinate in turn.
    fn push_rows(&self, rows: &mut Vec<f64>, b: &mut Vec<f64>) {
        let n = self.dim();
        for i in 0..n {
            for (sign, bound) in [(1.0, self.upper[i]), (-1.0, -self.lower[i])] {
                let mut r = vec![0.0; n];
                r[i] = sign;
                rows.extend(r);
                b.push(bound);
            }
        }
    }
}

/// H-representation of the region of codeword `j` up to `upto_layer`,
/// intersected with `bbox`. Bit 1 gives `-(w.x + c) <= 0`, bit 0 gives
/// `w.x + c <= 0`.
pub fn build_hrep(
    net: &Mlp,
    j: &GlobalCodeword,
    upto_layer: usize,
    bbox: &BoundingBox,
) -> Result<HPolyhedron> {
    let n = net.input_dim();
    if bbox.dim() != n {
        return Err(Error::dims("bounding box", n, bbox.dim()));
    }
    let maps = net.region_preactivation_maps(j, upto_layer)?;
    let mut rows = Vec::new();
    let mut b = Vec::new();
    for (k, map) in maps.iter().enumerate() {
        let bits = j.layer(k + 1);
        for (i, &bit) in bits.iter().enumerate() {
            let w = map.linear().row(i);
            let c = map.offset()[i];
            if bit {
                rows.extend(w.iter().map(|v| -v));
                b.push(c);
            } else {
                rows.extend_from_slice(w);
                b.push(-c);
            }
        }
    }
    bbox.push_rows(&mut rows, &mut b);
    let m = b.len();
    HPolyhedron::new(Matrix::new(m, n, rows)?, b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub codeword: GlobalCodeword,
    pub hrep: HPolyhedron,
    /// Dataset indices, increasing.
    pub points: Vec<usize>,
}

/// Populated regions of a network at one layer, keyed by global codeword.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulatedDecomposition {
    pub layer: usize,
    pub bbox: BoundingBox,
    regions: Vec<Region>,
    /// Region index of every dataset point.
    assignment: Vec<usize>,
}

impl PopulatedDecomposition {
    /// Regions sorted by codeword.
    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn num_points(&self) -> usize {
        self.assignment.len()
    }

    /// Index into [`Self::regions`] of the region holding point `i`.
    pub fn region_of(&self, point: usize) -> usize {
        self.assignment[point]
    }

    pub fn find(&self, j: &GlobalCodeword) -> Option<&Region> {
        self.regions
            .binary_search_by(|r| r.codeword.cmp(j))
            .ok()
            .map(|i| &self.regions[i])
    }
}

pub fn populate_decomposition(
    net: &Mlp,
    inputs: &[Vec<f64>],
    upto_layer: usize,
    bbox: &BoundingBox,
) -> Result<PopulatedDecomposition> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("dataset is empty".into()));
    }
    net.check_layer(upto_layer)?;
    if bbox.dim() != net.input_dim() {
        return Err(Error::dims("bounding box", net.input_dim(), bbox.dim()));
    }
    if let Some(i) = inputs.iter().position(|x| !bbox.contains(x)) {
        if inputs[i].len() != net.input_dim() {
            return Err(Error::dims("dataset point", net.input_dim(), inputs[i].len()));
        }
        return Err(Error::InvalidArgument(format!(
            "dataset point {i} lies outside the bounding box"
        )));
    }
    let codewords = inputs
        .par_iter()
        .map(|x| net.global_codeword(x, upto_layer))
        .collect::<Result<Vec<_>>>()?;
    let mut groups: BTreeMap<GlobalCodeword, Vec<usize>> = BTreeMap::new();
    for (i, j) in codewords.into_iter().enumerate() {
        groups.entry(j).or_default().push(i);
    }
    let groups: Vec<(GlobalCodeword, Vec<usize>)> = groups.into_iter().collect();
    let regions = groups
        .into_par_iter()
        .map(|(codeword, points)| {
            let hrep = build_hrep(net, &codeword, upto_layer, bbox)?;
            Ok(Region {
                codeword,
                hrep,
                points,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut assignment = vec![0; inputs.len()];
    for (r, region) in regions.iter().enumerate() {
        for &p in &region.points {
            assignment[p] = r;
        }
    }
    Ok(PopulatedDecomposition {
        layer: upto_layer,
        bbox: bbox.clone(),
        regions,
        assignment,
    })
}

/// Monte-Carlo volume: LP bounds on each coordinate, then the hit rate of
/// uniform samples in that axis-aligned box.
pub fn estimate_volume(p: &HPolyhedron, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let n = p.dim();
    let opts = SolverOptions::default();
    if !p.is_feasible(opts.tol)? {
        return Ok(0.0);
    }
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let mut c = vec![0.0; n];
        c[i] = 1.0;
        lower[i] = lp::minimize(&c, p.a(), p.b(), &opts)?.0;
        c[i] = -1.0;
        upper[i] = -lp::minimize(&c, p.a(), p.b(), &opts)?.0;
    }
    let box_volume: f64 = lower.iter().zip(&upper).map(|(l, u)| (u - l).max(0.0)).product();
    if box_volume == 0.0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..samples {
        for (k, v) in x.iter_mut().enumerate() {
            *v = lower[k] + (upper[k] - lower[k]) * rng.random::<f64>();
        }
        if p.contains(&x, 0.0)? {
            hits += 1;
        }
    }
    Ok(box_volume * hits as f64 / samples as f64)
}

/// Occupancy count of every populated region, ascending.
pub fn points_per_region_histogram(decomp: &PopulatedDecomposition) -> Vec<usize> {
    let mut counts: Vec<usize> = decomp.regions.iter().map(|r| r.points.len()).collect();
    counts.sort_unstable();
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::AffineMap;
    use crate::network::tests::abs_net;

    fn one_neuron() -> Mlp {
        Mlp::new(vec![AffineMap::new(Matrix::identity(1), vec![0.0]).unwrap()]).unwrap()
    }

    #[test]
    fn single_neuron_hrep() {
        let net = one_neuron();
        let j = GlobalCodeword::from_layers(&[vec![true]]);
        let p = build_hrep(&net, &j, 1, &BoundingBox::default_for(1)).unwrap();
        assert_eq!(p.a().data(), &[-1.0, 1.0, -1.0]);
        assert_eq!(p.b(), &[0.0, 100.0, 100.0]);
        assert!(p.contains(&[50.0], 1e-7).unwrap());
        assert!(p.contains(&[-1e-12], 1e-9).unwrap());
        assert!(!p.contains(&[-1.0], 1e-7).unwrap());
        assert!(p.contains(&[1.0, 2.0], 1e-7).is_err());
    }

    #[test]
    fn abs_net_regions() {
        let net = abs_net();
        let bbox = BoundingBox::default_for(1);
        let j = GlobalCodeword::from_layers(&[vec![true, false], vec![true]]);
        let p = build_hrep(&net, &j, 2, &bbox).unwrap();
        assert!(p.contains(&[3.0], 0.0).unwrap());
        assert!(!p.contains(&[-3.0], 1e-7).unwrap());

        let grid: Vec<Vec<f64>> = (0..10).map(|i| vec![-0.9 + 0.2 * i as f64]).collect();
        let d = populate_decomposition(&net, &grid, 2, &bbox).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(points_per_region_histogram(&d), vec![5, 5]);
        for (i, x) in grid.iter().enumerate() {
            let r = &d.regions()[d.region_of(i)];
            assert!(r.hrep.contains(x, DEFAULT_MEMBERSHIP_TOL).unwrap());
        }
    }

    #[test]
    fn zero_goes_to_the_active_side() {
        let net = abs_net();
        let grid: Vec<Vec<f64>> = (0..21).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
        let d = populate_decomposition(&net, &grid, 1, &BoundingBox::default_for(1)).unwrap();
        // 0 activates both neurons: its own degenerate region
        assert_eq!(d.len(), 3);
        let zero = d.regions()[d.region_of(10)].codeword.to_string();
        assert_eq!(zero, "11");
    }

    #[test]
    fn points_outside_box_rejected() {
        let net = one_neuron();
        assert!(populate_decomposition(&net, &[vec![200.0]], 1, &BoundingBox::default_for(1)).is_err());
        assert!(populate_decomposition(&net, &[], 1, &BoundingBox::default_for(1)).is_err());
    }

    #[test]
    fn volumes() {
        let sq = HPolyhedron::new(
            Matrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap(),
            vec![1.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        assert!((estimate_volume(&sq, 100_000, 1).unwrap() - 1.0).abs() < 0.02);
        let tri = HPolyhedron::new(
            Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]]).unwrap(),
            vec![0.0, 0.0, 1.0],
        )
        .unwrap();
        let v = estimate_volume(&tri, 100_000, 2).unwrap();
        assert!((v - 0.5).abs() < 0.02, "{v}");
        assert_eq!(estimate_volume(&tri, 100, 2).unwrap(), estimate_volume(&tri, 100, 2).unwrap());
        let empty = HPolyhedron::new(Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(), vec![-1.0, -1.0]).unwrap();
        assert_eq!(estimate_volume(&empty, 1000, 0).unwrap(), 0.0);
        assert!(estimate_volume(&sq, 0, 0).is_err());
    }

    #[test]
    fn bbox_validation() {
        assert!(BoundingBox::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoundingBox::new(vec![0.0], vec![f64::INFINITY]).is_err());
        assert_eq!(BoundingBox::symmetric(2, 1.0).unwrap().volume(), 4.0);
    }
}
