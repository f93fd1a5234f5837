//! Overlap detection between populated regions and the resulting partition of
//! the dataset.
//!
//! For two regions `P_i`, `P_j` a point `y` of `P_i` is overlap-positive
//! against `P_j` when `Φ(y)` lies in the image `Φ_j(P_j)`, decided by a
//! feasibility LP. Only points whose output is within `delta` of some output
//! of `P_j` are tested. All positive points of both sides of a region pair are
//! merged into one class.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::euclidean;
use crate::lp::{PreimageProblem, SolverOptions, DEFAULT_FEASIBILITY_TOL};
use crate::network::{GlobalCodeword, Mlp};
use crate::polyhedra::{self, BoundingBox, PopulatedDecomposition};

/// Disjoint sets with union by rank and path compression.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns true if `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }

    /// All sets with at least `min_size` members, each sorted, ordered by
    /// smallest member.
    pub fn classes(&mut self, min_size: usize) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.len() {
            let r = self.find(i);
            by_root.entry(r).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = by_root
            .into_values()
            .filter(|c| c.len() >= min_size)
            .collect();
        out.sort_by_key(|c| c[0]);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapClass {
    /// Sorted point indices; the first is the representative.
    pub points: Vec<usize>,
    /// Codewords of the regions whose overlaps produced this class.
    pub regions: Vec<GlobalCodeword>,
}

impl OverlapClass {
    pub fn representative(&self) -> usize {
        self.points[0]
    }
}

/// Classes of size at least 2, ordered by representative. Points not listed
/// are singletons.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapDecomposition {
    classes: Vec<OverlapClass>,
}

impl OverlapDecomposition {
    pub fn new(mut classes: Vec<OverlapClass>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &mut classes {
            c.points.sort_unstable();
            c.points.dedup();
            if c.points.len() < 2 {
                return Err(Error::InvalidArgument("overlap classes need at least two points".into()));
            }
            for &p in &c.points {
                if !seen.insert(p) {
                    return Err(Error::InvalidArgument(format!("point {p} appears in two classes")));
                }
            }
            c.regions.sort();
            c.regions.dedup();
        }
        classes.sort_by_key(|c| c.points[0]);
        Ok(Self { classes })
    }

    pub fn classes(&self) -> &[OverlapClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Largest point index mentioned, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.classes.iter().flat_map(|c| c.points.last()).max().copied()
    }

    /// Class label per point for `n` points: points in class `k` get the
    /// representative of that class, singletons get their own index.
    pub fn labels(&self, n: usize) -> Vec<usize> {
        let mut labels: Vec<usize> = (0..n).collect();
        for c in &self.classes {
            for &p in &c.points {
                if p < n {
                    labels[p] = c.representative();
                }
            }
        }
        labels
    }
}

/// Transitive closure of `pairs`. Classes carry no region information.
pub fn merge_to_decomposition(pairs: &[(usize, usize)]) -> OverlapDecomposition {
    let n = pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
    let mut uf = UnionFind::new(n);
    for &(a, b) in pairs {
        uf.union(a, b);
    }
    let classes = uf
        .classes(2)
        .into_iter()
        .map(|points| OverlapClass {
            points,
            regions: Vec::new(),
        })
        .collect();
    OverlapDecomposition { classes }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapOptions {
    /// Output-space prefilter radius (inclusive).
    pub delta: f64,
    /// LP feasibility and boundary-membership tolerance.
    pub tol: f64,
    /// Let a point also act as a member of every other populated region
    /// whose closed polyhedron contains it within `tol`.
    pub boundary_membership: bool,
}

impl Default for OverlapOptions {
    fn default() -> Self {
        Self {
            delta: 1.0,
            tol: DEFAULT_FEASIBILITY_TOL,
            boundary_membership: true,
        }
    }
}

impl OverlapOptions {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            delta,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || self.delta.is_nan() {
            return Err(Error::InvalidArgument(format!("delta must be > 0, got {}", self.delta)));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance must be finite and >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Overlap-positive points of both sides of one region pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapGroup {
    /// Region indices into the populated decomposition, `first < second`.
    pub first: usize,
    pub second: usize,
    /// Members of `first` whose output lies in the image of `second`.
    pub first_points: Vec<usize>,
    /// Members of `second` whose output lies in the image of `first`.
    pub second_points: Vec<usize>,
}

impl OverlapGroup {
    pub fn points(&self) -> impl Iterator<Item = usize> + '_ {
        self.first_points.iter().chain(&self.second_points).copied()
    }
}

/// Region memberships of every point: its own region first, then (with
/// boundary membership) every other populated region containing it.
fn memberships(
    net: &Mlp,
    inputs: &[Vec<f64>],
    decomp: &PopulatedDecomposition,
    opts: &OverlapOptions,
) -> Result<Vec<Vec<usize>>> {
    let layer = decomp.layer;
    inputs
        .par_iter()
        .enumerate()
        .map(|(p, x)| {
            let home = decomp.region_of(p);
            let mut m = vec![home];
            if !opts.boundary_membership {
                return Ok(m);
            }
            // A point can only sit in another region's closure if one of its
            // preactivations is within tol of zero.
            let trace = net.forward(x)?;
            let near_boundary = trace.preactivations[..layer]
                .iter()
                .flatten()
                .any(|z| z.abs() <= opts.tol);
            if near_boundary {
                for (r, region) in decomp.regions().iter().enumerate() {
                    if r != home && region.hrep.contains(x, opts.tol)? {
                        m.push(r);
                    }
                }
            }
            Ok(m)
        })
        .collect()
}

struct PointTests {
    /// Regions `j` (not containing the point) whose image contains its output.
    positive: Vec<usize>,
}

/// All overlap groups of a populated decomposition, sorted by region pair.
pub fn detect_overlap_groups(
    net: &Mlp,
    inputs: &[Vec<f64>],
    decomp: &PopulatedDecomposition,
    opts: &OverlapOptions,
) -> Result<Vec<OverlapGroup>> {
    opts.validate()?;
    if inputs.len() != decomp.num_points() {
        return Err(Error::dims("overlap dataset", decomp.num_points(), inputs.len()));
    }
    let layer = decomp.layer;
    let regions = decomp.regions();
    let outputs = inputs
        .par_iter()
        .map(|x| net.representation(x, layer))
        .collect::<Result<Vec<_>>>()?;
    let member_of = memberships(net, inputs, decomp, opts)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); regions.len()];
    for (p, m) in member_of.iter().enumerate() {
        for &r in m {
            members[r].push(p);
        }
    }
    let lp_opts = SolverOptions::with_tol(opts.tol);
    let preimages = regions
        .par_iter()
        .map(|r| {
            let map = net.region_affine_map(&r.codeword, layer)?;
            PreimageProblem::new(r.hrep.a(), r.hrep.b(), &map, lp_opts)
        })
        .collect::<Result<Vec<_>>>()?;

    let tests = (0..inputs.len())
        .into_par_iter()
        .map(|p| {
            let own = &member_of[p];
            let mut near = vec![false; regions.len()];
            for (q, out_q) in outputs.iter().enumerate() {
                if euclidean(&outputs[p], out_q) <= opts.delta {
                    for &r in &member_of[q] {
                        near[r] = true;
                    }
                }
            }
            let mut positive = Vec::new();
            for (j, &is_near) in near.iter().enumerate() {
                if !is_near || own.contains(&j) {
                    continue;
                }
                let res = preimages[j].solve(&outputs[p]).map_err(|e| match e {
                    Error::SolverStall { pivots, context } => Error::SolverStall {
                        pivots,
                        context: format!(
                            "{context} (point {p}, region {} vs region {})",
                            regions[own[0]].codeword, regions[j].codeword
                        ),
                    },
                    other => other,
                })?;
                if res.is_feasible() {
                    positive.push(j);
                }
            }
            Ok(PointTests { positive })
        })
        .collect::<Result<Vec<_>>>()?;

    // (first, second) -> (first side, second side, has non-boundary evidence)
    let mut acc: BTreeMap<(usize, usize), (BTreeSet<usize>, BTreeSet<usize>, bool)> = BTreeMap::new();
    let mut add = |i: usize, j: usize, p: usize, genuine: bool| {
        let key = (i.min(j), i.max(j));
        let e = acc.entry(key).or_default();
        if i < j {
            e.0.insert(p);
        } else {
            e.1.insert(p);
        }
        e.2 |= genuine;
    };
    for (p, t) in tests.iter().enumerate() {
        let own = &member_of[p];
        for &i in own {
            for &j in &t.positive {
                add(i, j, p, true);
            }
            // a point shared by two closed regions matches itself trivially
            for &j in own {
                if j != i {
                    add(i, j, p, false);
                }
            }
        }
    }
    Ok(acc
        .into_iter()
        .filter(|(_, (a, b, genuine))| *genuine && !a.is_empty() && !b.is_empty())
        .map(|((first, second), (a, b, _))| OverlapGroup {
            first,
            second,
            first_points: a.into_iter().collect(),
            second_points: b.into_iter().collect(),
        })
        .collect())
}

/// Every pair in `B_y x B_z` over all overlap groups, sorted and deduplicated.
pub fn detect_overlap_pairs(
    net: &Mlp,
    inputs: &[Vec<f64>],
    decomp: &PopulatedDecomposition,
    opts: &OverlapOptions,
) -> Result<Vec<(usize, usize)>> {
    let groups = detect_overlap_groups(net, inputs, decomp, opts)?;
    let mut pairs = BTreeSet::new();
    for g in &groups {
        for &y in &g.first_points {
            for &z in &g.second_points {
                if y != z {
                    pairs.insert((y.min(z), y.max(z)));
                }
            }
        }
    }
    Ok(pairs.into_iter().collect())
}

/// Union-find over the groups. Each group is merged through a star on its
/// smallest point, which gives the same classes as its full pair product.
pub fn merge_groups(
    groups: &[OverlapGroup],
    decomp: &PopulatedDecomposition,
) -> OverlapDecomposition {
    let mut uf = UnionFind::new(decomp.num_points());
    for g in groups {
        let mut pts = g.points();
        if let Some(hub) = pts.next() {
            for p in pts {
                uf.union(hub, p);
            }
        }
    }
    let classes = uf.classes(2);
    let mut class_of = vec![usize::MAX; decomp.num_points()];
    for (k, c) in classes.iter().enumerate() {
        for &p in c {
            class_of[p] = k;
        }
    }
    let mut regions: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); classes.len()];
    for g in groups {
        let Some(p) = g.points().next() else { continue };
        let k = class_of[p];
        if k != usize::MAX {
            regions[k].insert(g.first);
            regions[k].insert(g.second);
        }
    }
    let classes = classes
        .into_iter()
        .zip(regions)
        .map(|(points, rs)| OverlapClass {
            points,
            regions: rs
                .into_iter()
                .map(|r| decomp.regions()[r].codeword.clone())
                .collect(),
        })
        .collect();
    OverlapDecomposition { classes }
}

/// Overlap classes of `inputs` under `net` at `layer`.
pub fn overlap_decomposition(
    net: &Mlp,
    layer: usize,
    inputs: &[Vec<f64>],
    delta: f64,
    bbox: &BoundingBox,
) -> Result<OverlapDecomposition> {
    let decomp = polyhedra::populate_decomposition(net, inputs, layer, bbox)?;
    overlap_decomposition_with(net, inputs, &decomp, &OverlapOptions::with_delta(delta))
}

pub fn overlap_decomposition_with(
    net: &Mlp,
    inputs: &[Vec<f64>],
    decomp: &PopulatedDecomposition,
    opts: &OverlapOptions,
) -> Result<OverlapDecomposition> {
    let groups = detect_overlap_groups(net, inputs, decomp, opts)?;
    Ok(merge_groups(&groups, decomp))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionVolume {
    pub codeword: GlobalCodeword,
    pub volume: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapStatistics {
    pub n_classes: usize,
    pub class_sizes: Vec<usize>,
    /// Estimated volume of every distinct region involved in some class.
    pub overlap_region_volumes: Vec<RegionVolume>,
    /// Per class, the volumes of its involved regions.
    pub class_region_volumes: Vec<Vec<f64>>,
}

impl OverlapStatistics {
    pub fn median_region_volume(&self) -> Option<f64> {
        median(self.overlap_region_volumes.iter().map(|r| r.volume).collect())
    }
}

pub fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub fn overlap_statistics(
    od: &OverlapDecomposition,
    decomp: &PopulatedDecomposition,
    volume_samples: usize,
    seed: u64,
) -> Result<OverlapStatistics> {
    let involved: BTreeSet<&GlobalCodeword> = od.classes().iter().flat_map(|c| &c.regions).collect();
    let involved: Vec<&GlobalCodeword> = involved.into_iter().collect();
    let volumes = involved
        .par_iter()
        .enumerate()
        .map(|(k, j)| {
            let region = decomp.find(j).ok_or_else(|| {
                Error::InvalidArgument(format!("region {j} is not in the decomposition"))
            })?;
            let volume = polyhedra::estimate_volume(&region.hrep, volume_samples, seed.wrapping_add(k as u64))?;
            Ok(RegionVolume {
                codeword: (*j).clone(),
                volume,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lookup: BTreeMap<&GlobalCodeword, f64> = volumes.iter().map(|r| (&r.codeword, r.volume)).collect();
    let class_region_volumes = od
        .classes()
        .iter()
        .map(|c| c.regions.iter().map(|j| lookup[j]).collect())
        .collect();
    Ok(OverlapStatistics {
        n_classes: od.len(),
        class_sizes: od.classes().iter().map(|c| c.points.len()).collect(),
        overlap_region_volumes: volumes,
        class_region_volumes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{AffineMap, Matrix};
    use crate::network::tests::abs_net;

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(6);
        assert!(uf.union(1, 2));
        assert!(uf.union(2, 3));
        assert!(!uf.union(1, 3));
        assert_eq!(uf.find(3), uf.find(1));
        assert_eq!(uf.classes(2), vec![vec![1, 2, 3]]);
        assert_eq!(uf.classes(1).len(), 4);
    }

    #[test]
    fn merge_examples() {
        let od = merge_to_decomposition(&[(1, 2), (2, 3)]);
        assert_eq!(od.classes()[0].points, vec![1, 2, 3]);
        assert!(merge_to_decomposition(&[]).is_empty());
        let od = merge_to_decomposition(&[(5, 4), (0, 1), (4, 6), (1, 2)]);
        assert_eq!(od.len(), 2);
        assert_eq!(od.classes()[0].points, vec![0, 1, 2]);
        assert_eq!(od.classes()[1].points, vec![4, 5, 6]);
        assert_eq!(od.labels(8), vec![0, 0, 0, 3, 4, 4, 4, 7]);
    }

    #[test]
    fn abs_net_four_points() {
        let net = abs_net();
        let grid = vec![vec![-1.0], vec![-0.5], vec![0.5], vec![1.0]];
        let decomp = polyhedra::populate_decomposition(&net, &grid, 2, &BoundingBox::default_for(1)).unwrap();
        let pairs = detect_overlap_pairs(&net, &grid, &decomp, &OverlapOptions::default()).unwrap();
        assert_eq!(pairs, vec![(0, 2), (0, 3), (1, 2), (1, 3)]);
        let od = merge_to_decomposition(&pairs);
        assert_eq!(od.classes()[0].points, vec![0, 1, 2, 3]);
    }

    #[test]
    fn abs_net_grid_with_zero() {
        let net = abs_net();
        let grid: Vec<Vec<f64>> = (0..21).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
        let bbox = BoundingBox::default_for(1);
        let od = overlap_decomposition(&net, 2, &grid, 1.0, &bbox).unwrap();
        assert_eq!(od.len(), 1);
        assert_eq!(od.classes()[0].points, (0..21).collect::<Vec<_>>());

        let decomp = polyhedra::populate_decomposition(&net, &grid, 2, &bbox).unwrap();
        let literal = OverlapOptions {
            boundary_membership: false,
            ..Default::default()
        };
        let od = overlap_decomposition_with(&net, &grid, &decomp, &literal).unwrap();
        assert_eq!(od.classes()[0].points.len(), 20);

        let stats = overlap_statistics(&od, &decomp, 20_000, 3).unwrap();
        assert_eq!(stats.n_classes, 1);
        assert_eq!(stats.class_sizes, vec![20]);
        for r in &stats.overlap_region_volumes {
            assert!((r.volume - 100.0).abs() < 1e-6, "{}", r.volume);
        }
    }

    #[test]
    fn injective_and_far_apart() {
        let net = Mlp::new(vec![AffineMap::new(Matrix::from_rows(&[vec![2.0, 1.0], vec![-1.0, 1.0]]).unwrap(), vec![0.0, 0.0]).unwrap()]).unwrap();
        let pts: Vec<Vec<f64>> = (0..12).map(|i| vec![(i as f64 * 0.7).sin() * 3.0, (i as f64 * 1.3).cos() * 2.0]).collect();
        let od = overlap_decomposition(&net, 1, &pts, 1.0, &BoundingBox::default_for(2)).unwrap();
        assert!(od.is_empty());

        // |x| net with a tiny delta and a grid whose outputs are all distinct
        let net = abs_net();
        let grid = vec![vec![-1.0], vec![0.5]];
        let od = overlap_decomposition(&net, 2, &grid, 0.1, &BoundingBox::default_for(1)).unwrap();
        assert!(od.is_empty());
        assert!(overlap_decomposition(&net, 2, &grid, 0.0, &BoundingBox::default_for(1)).is_err());
    }

    #[test]
    fn statistics_of_empty_decomposition() {
        let net = abs_net();
        let grid = vec![vec![0.5], vec![1.0]];
        let decomp = polyhedra::populate_decomposition(&net, &grid, 2, &BoundingBox::default_for(1)).unwrap();
        let stats = overlap_statistics(&OverlapDecomposition::default(), &decomp, 100, 0).unwrap();
        assert_eq!(stats.n_classes, 0);
        assert_eq!(stats.median_region_volume(), None);
    }

    #[test]
    fn decomposition_validation() {
        let c = |p: Vec<usize>| OverlapClass { points: p, regions: vec![] };
        assert!(OverlapDecomposition::new(vec![c(vec![1])]).is_err());
        assert!(OverlapDecomposition::new(vec![c(vec![1, 2]), c(vec![2, 3])]).is_err());
        let od = OverlapDecomposition::new(vec![c(vec![5, 3]), c(vec![2, 1])]).unwrap();
        assert_eq!(od.classes()[0].points, vec![1, 2]);
        assert_eq!(od.max_index(), Some(5));
    }
}
