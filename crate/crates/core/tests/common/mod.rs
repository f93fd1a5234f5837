//! Brute-force oracles shared by the property and acceptance tests. None of
//! them call into the solver, filtration or reduction code they check.
#![allow(dead_code)]

/// Betti numbers `0..=max_dim` over Z/2 of the Rips complex of `d` at scale
/// `eps`, from ranks of explicit boundary matrices over all vertex subsets.
pub fn gf2_betti(d: &[Vec<f64>], eps: f64, max_dim: usize) -> Vec<usize> {
    let n = d.len();
    assert!(n <= 16);
    // simplices of each dimension as vertex bitmasks
    let mut by_dim: Vec<Vec<u32>> = vec![Vec::new(); max_dim + 2];
    for mask in 1u32..(1 << n) {
        let k = mask.count_ones() as usize - 1;
        if k > max_dim + 1 {
            continue;
        }
        let vs: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let ok = vs.iter().all(|&i| vs.iter().all(|&j| d[i][j] <= eps));
        if ok {
            by_dim[k].push(mask);
        }
    }
    // rank of the boundary map from dimension k to k - 1
    let boundary_rank = |k: usize| -> usize {
        if k == 0 || by_dim[k].is_empty() || by_dim[k - 1].is_empty() {
            return 0;
        }
        let index: std::collections::HashMap<u32, usize> =
            by_dim[k - 1].iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let rows: Vec<Vec<u64>> = by_dim[k]
            .iter()
            .map(|&m| {
                let mut row = vec![0u64; by_dim[k - 1].len().div_ceil(64)];
                for v in 0..n {
                    if m >> v & 1 == 1 {
                        let f = index[&(m & !(1 << v))];
                        row[f / 64] ^= 1 << (f % 64);
                    }
                }
                row
            })
            .collect();
        gf2_rank(rows)
    };
    let ranks: Vec<usize> = (0..=max_dim + 1).map(boundary_rank).collect();
    (0..=max_dim)
        .map(|k| by_dim[k].len() - ranks[k] - ranks[k + 1])
        .collect()
}

pub fn gf2_rank(mut rows: Vec<Vec<u64>>) -> usize {
    let mut rank = 0;
    let width = rows.first().map_or(0, |r| r.len() * 64);
    for col in 0..width {
        let (w, b) = (col / 64, col % 64);
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] >> b & 1 == 1) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[w] >> b & 1 == 1 {
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// All-pairs shortest paths (Floyd-Warshall).
pub fn floyd(mut d: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = d.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Whether `{(x, y) : a_i . (x, y) <= b_i + slack_i}` meets the lattice
/// `x = -half + k * step` inside `[-half, half]^2`, with the y-range at each
/// lattice x computed exactly. `slack_i = |a_i0| * step / 2` accounts for the
/// x-rounding of a true feasible point.
pub fn lattice_feasible(a: &[[f64; 2]], b: &[f64], half: f64, step: f64) -> bool {
    let steps = (2.0 * half / step).round() as i64;
    for k in 0..=steps {
        let x = -half + k as f64 * step;
        let (mut lo, mut hi) = (-half, half);
        for (row, &rhs) in a.iter().zip(b) {
            let rhs = rhs + row[0].abs() * step / 2.0 + 1e-9;
            let r = rhs - row[0] * x;
            if row[1] > 0.0 {
                hi = hi.min(r / row[1]);
            } else if row[1] < 0.0 {
                lo = lo.max(r / row[1]);
            } else if r < 0.0 {
                lo = f64::INFINITY;
            }
        }
        if lo <= hi {
            return true;
        }
    }
    false
}

/// Vertices of the bounded polygon `{x : a x <= b}` in the plane.
pub fn polygon_vertices(a: &[[f64; 2]], b: &[f64], tol: f64) -> Vec<[f64; 2]> {
    // unit-norm rows so `tol` is a distance
    let rows: Vec<([f64; 2], f64)> = a
        .iter()
        .zip(b)
        .filter_map(|(r, &c)| {
            let n = r[0].hypot(r[1]);
            (n > 1e-14).then(|| ([r[0] / n, r[1] / n], c / n))
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (p, q) = (rows[i], rows[j]);
            let det = p.0[0] * q.0[1] - p.0[1] * q.0[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (p.1 * q.0[1] - p.0[1] * q.1) / det;
            let y = (p.0[0] * q.1 - p.1 * q.0[0]) / det;
            if rows.iter().all(|(r, c)| r[0] * x + r[1] * y <= c + tol) {
                out.push([x, y]);
            }
        }
    }
    out
}

/// Convex hull, counter-clockwise, collinear points dropped.
pub fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Euclidean distance from `p` to the convex polygon `hull` (0 inside).
pub fn hull_distance(hull: &[[f64; 2]], p: [f64; 2]) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => (p[0] - hull[0][0]).hypot(p[1] - hull[0][1]),
        2 => segment_distance(p, hull[0], hull[1]),
        n => {
            let inside = (0..n).all(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % n]);
                (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
            });
            if inside {
                0.0
            } else {
                (0..n)
                    .map(|i| segment_distance(p, hull[i], hull[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Partition of `0..n` as sorted classes of size >= 2, for comparisons.
pub fn canonical_classes(mut classes: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for c in &mut classes {
        c.sort_unstable();
    }
    classes.retain(|c| c.len() >= 2);
    classes.sort();
    classes
}

/// Plain union-find returning classes of size >= 2.
pub fn components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for x in 0..n {
        let r = root(&mut parent, x);
        groups.entry(r).or_default().push(x);
    }
    canonical_classes(groups.into_values().collect())
}

/// Vertices of a populated region in one or two input dimensions.
pub fn region_vertices(p: &relu_overlap::polyhedra::HPolyhedron) -> Vec<Vec<f64>> {
    let a = p.a();
    match p.dim() {
        1 => {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for (i, &b) in p.b().iter().enumerate() {
                let c = a.get(i, 0);
                if c > 0.0 {
                    hi = hi.min(b / c);
                } else if c < 0.0 {
                    lo = lo.max(b / c);
                }
            }
            if lo <= hi {
                vec![vec![lo], vec![hi]]
            } else {
                Vec::new()
            }
        }
        2 => {
            let rows: Vec<[f64; 2]> = (0..a.rows()).map(|i| [a.get(i, 0), a.get(i, 1)]).collect();
            polygon_vertices(&rows, p.b(), 1e-9).into_iter().map(|v| v.to_vec()).collect()
        }
        d => panic!("no vertex oracle in {d} dimensions"),
    }
}

fn as_plane(v: &[f64]) -> [f64; 2] {
    match v.len() {
        1 => [v[0], 0.0],
        2 => [v[0], v[1]],
        d => panic!("no hull oracle in {d} dimensions"),
    }
}

/// Overlap classes recomputed from region images as convex hulls of mapped
/// vertices, with the same prefilter and membership rules as the library.
pub struct OverlapOracle {
    pub classes: Vec<Vec<usize>>,
    /// Point/region tests whose hull distance fell in `(decide, ambiguous)`.
    pub ambiguous: usize,
}

pub fn overlap_oracle(
    net: &relu_overlap::network::Mlp,
    inputs: &[Vec<f64>],
    layer: usize,
    bbox: &relu_overlap::polyhedra::BoundingBox,
    delta: f64,
    boundary_tol: Option<f64>,
    decide: f64,
    ambiguous: f64,
) -> OverlapOracle {
    use relu_overlap::polyhedra::build_hrep;
    let n = inputs.len();
    let mut codes = Vec::new();
    let mut home = Vec::new();
    for x in inputs {
        let j = net.global_codeword(x, layer).unwrap();
        let k = codes.iter().position(|c| c == &j).unwrap_or_else(|| {
            codes.push(j.clone());
            codes.len() - 1
        });
        home.push(k);
    }
    let hreps: Vec<_> = codes.iter().map(|j| build_hrep(net, j, layer, bbox).unwrap()).collect();
    let hulls: Vec<Vec<[f64; 2]>> = codes
        .iter()
        .zip(&hreps)
        .map(|(j, h)| {
            let map = net.region_affine_map(j, layer).unwrap();
            convex_hull(region_vertices(h).iter().map(|v| as_plane(&map.apply(v).unwrap())).collect())
        })
        .collect();
    let member: Vec<Vec<usize>> = (0..n)
        .map(|p| {
            let mut m = vec![home[p]];
            if let Some(tol) = boundary_tol {
                for (r, h) in hreps.iter().enumerate() {
                    if r != home[p] && h.contains(&inputs[p], tol).unwrap() {
                        m.push(r);
                    }
                }
            }
            m
        })
        .collect();
    let outputs: Vec<Vec<f64>> = inputs.iter().map(|x| net.representation(x, layer).unwrap()).collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let r = codes.len();
    // sides[(i, j)] = (points added from region i, from region j, genuine)
    let mut sides: std::collections::BTreeMap<(usize, usize), (Vec<usize>, Vec<usize>, bool)> = Default::default();
    let mut add = |i: usize, j: usize, p: usize, genuine: bool| {
        let e = sides.entry((i.min(j), i.max(j))).or_default();
        if i < j { e.0.push(p) } else { e.1.push(p) }
        e.2 |= genuine;
    };
    let mut amb = 0;
    for p in 0..n {
        let mut near = vec![false; r];
        for q in 0..n {
            if dist(&outputs[p], &outputs[q]) <= delta {
                for &m in &member[q] {
                    near[m] = true;
                }
            }
        }
        for j in 0..r {
            if !near[j] || member[p].contains(&j) {
                continue;
            }
            let d = hull_distance(&hulls[j], as_plane(&outputs[p]));
            if d > decide && d < ambiguous {
                amb += 1;
            }
            if d <= decide {
                for &i in &member[p] {
                    add(i, j, p, true);
                }
            }
        }
        for &i in &member[p] {
            for &j in &member[p] {
                if i != j {
                    add(i, j, p, false);
                }
            }
        }
    }
    let mut edges = Vec::new();
    for (a, b, genuine) in sides.values() {
        if *genuine && !a.is_empty() && !b.is_empty() {
            let hub = a[0];
            edges.extend(a.iter().chain(b).map(|&p| (hub, p)));
        }
    }
    OverlapOracle { classes: components(n, &edges), ambiguous: amb }
}
