//! Dense row-major matrices, affine maps, numerical rank and distance kernels.
//!
//! Everything here is plain `f64`. Decompositions (SVD, QR) are delegated to
//! `nalgebra`; the types in this module are what the rest of the crate sees.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-7;

/// Dense row-major matrix with finite entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims("matrix data length", rows * cols, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            data[i * n + i] = d;
        }
        Self::new(n, n, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::dims("matrix row length", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dims("matrix product", self.cols, other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dims("matrix-vector product", self.cols, x.len()));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(m[(r, c)]);
            }
        }
        Self { rows, cols, data }
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows == 0 || self.cols == 0 {
            return Vec::new();
        }
        let mut sv: Vec<f64> = self.to_nalgebra().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank(m: &Matrix, tol: f64) -> usize {
    let sv = m.singular_values();
    match sv.first() {
        Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > tol * top).count(),
        _ => 0,
    }
}

/// The map `x -> linear * x + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    linear: Matrix,
    offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(linear: Matrix, offset: Vec<f64>) -> Result<Self> {
        if offset.len() != linear.rows() {
            return Err(Error::dims("affine offset length", linear.rows(), offset.len()));
        }
        if offset.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine offset"));
        }
        Ok(Self { linear, offset })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            linear: Matrix::identity(n),
            offset: vec![0.0; n],
        }
    }

    pub fn linear(&self) -> &Matrix {
        &self.linear
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn input_dim(&self) -> usize {
        self.linear.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.linear.rows()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.linear.matvec(x)?;
        for (yi, bi) in y.iter_mut().zip(&self.offset) {
            *yi += bi;
        }
        Ok(y)
    }

    /// Zero the rows whose mask entry is false.
    pub(crate) fn mask_rows(&mut self, mask: &[bool]) {
        for (r, &keep) in mask.iter().enumerate() {
            if !keep {
                self.linear.row_mut(r).iter_mut().for_each(|v| *v = 0.0);
                self.offset[r] = 0.0;
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn into_parts(self) -> (Matrix, Vec<f64>) {
        (self.linear, self.offset)
    }
}

/// `outer ∘ inner`.
pub fn compose_affine(outer: &AffineMap, inner: &AffineMap) -> Result<AffineMap> {
    if outer.input_dim() != inner.output_dim() {
        return Err(Error::dims(
            "affine composition",
            outer.input_dim(),
            inner.output_dim(),
        ));
    }
    let linear = outer.linear.matmul(&inner.linear)?;
    let mut offset = outer.linear.matvec(&inner.offset)?;
    for (o, b) in offset.iter_mut().zip(&outer.offset) {
        *o += b;
    }
    AffineMap::new(linear, offset)
}

/// Symmetric matrix of pairwise distances (possibly a pseudometric).
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds from a full square matrix, checking symmetry, zero diagonal and non-negativity.
    pub fn from_full(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::dims("distance matrix", n * n, data.len()));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "distance matrix diagonal entry {i} is not zero"
                )));
            }
            for j in 0..i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "distance ({i},{j}) = {a} is not a finite non-negative number"
                    )));
                }
                if a != b {
                    return Err(Error::InvalidArgument(format!(
                        "distance matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Symmetric matrix with zero diagonal; `f` is called for `j < i` only.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Reorders rows/columns: entry (i, j) of the result is entry (perm[i], perm[j]).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.n, |i, j| self.get(perm[i], perm[j]))
    }
}

/// Euclidean distance matrix for a set of points of equal dimension.
pub fn pairwise_distances(points: &[Vec<f64>]) -> Result<DistanceMatrix> {
    if let Some(first) = points.first() {
        let d = first.len();
        if let Some(bad) = points.iter().find(|p| p.len() != d) {
            return Err(Error::dims("point dimension", d, bad.len()));
        }
    }
    Ok(DistanceMatrix::from_fn(points.len(), |i, j| {
        euclidean(&points[i], &points[j])
    }))
}

/// Least-squares structure of a linear system `M x = t`: a pseudo-inverse and
/// an orthonormal basis of the null space, computed once per matrix.
#[derive(Clone, Debug)]
pub(crate) struct LinearSolveStructure {
    /// n x k pseudo-inverse.
    pub pinv: Matrix,
    /// n x (n - rank), columns orthonormal.
    pub null_basis: Matrix,
    pub rank: usize,
}

impl LinearSolveStructure {
    pub fn new(m: &Matrix) -> Self {
        let (k, n) = (m.rows(), m.cols());
        if k == 0 || n == 0 {
            return Self {
                pinv: Matrix::zeros(n, k),
                null_basis: Matrix::identity(n),
                rank: 0,
            };
        }
        // Work with an n x n problem so V is always complete.
        let a = m.to_nalgebra();
        let ata_dim = n.max(k);
        let mut padded = DMatrix::<f64>::zeros(ata_dim, n);
        padded.view_mut((0, 0), (k, n)).copy_from(&a);
        let svd = padded.svd(true, true);
        let u = svd.u.expect("svd u");
        let vt = svd.v_t.expect("svd v_t");
        let sv = &svd.singular_values;
        let top = sv.iter().copied().fold(0.0, f64::max);
        let cutoff = top * f64::EPSILON * (ata_dim as f64) * 16.0;
        let mut pinv = DMatrix::<f64>::zeros(n, k);
        let mut keep = Vec::new();
        let mut null_cols = Vec::new();
        for i in 0..sv.len() {
            if sv[i] > cutoff && top > 0.0 {
                keep.push(i);
                let vi = vt.row(i).transpose();
                let ui = u.column(i).rows(0, k).into_owned();
                pinv += (vi * ui.transpose()) / sv[i];
            } else {
                null_cols.push(i);
            }
        }
        let rank = keep.len();
        let mut null_basis = Matrix::zeros(n, null_cols.len());
        for (c, &i) in null_cols.iter().enumerate() {
            for r in 0..n {
                null_basis.data[r * null_cols.len() + c] = vt[(i, r)];
            }
        }
        Self {
            pinv: Matrix::from_nalgebra(&pinv),
            null_basis,
            rank,
        }
    }
}

/// Orthonormal factor of a thin QR decomposition of a tall (rows >= cols) matrix,
/// with column signs fixed so that the R factor has a non-negative diagonal.
pub(crate) fn thin_q(m: &Matrix) -> Matrix {
    let qr = m.to_nalgebra().qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..q.ncols() {
        if r[(c, c)] < 0.0 {
            for v in q.column_mut(c).iter_mut() {
                *v = -*v;
            }
        }
    }
    Matrix::from_nalgebra(&q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag2(a: f64, b: f64) -> Matrix {
        Matrix::from_diagonal(&[a, b]).unwrap()
    }

    #[test]
    fn identity_outer_is_neutral() {
        let inner = AffineMap::new(
            Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(),
            vec![5.0, 6.0],
        )
        .unwrap();
        let c = compose_affine(&AffineMap::identity(2), &inner).unwrap();
        assert_eq!(c, inner);
    }

    #[test]
    fn scaled_composition() {
        let outer = AffineMap::new(diag2(2.0, 2.0), vec![0.0, 0.0]).unwrap();
        let inner = AffineMap::new(Matrix::identity(2), vec![1.0, 1.0]).unwrap();
        let c = compose_affine(&outer, &inner).unwrap();
        assert_eq!(c.linear(), &diag2(2.0, 2.0));
        assert_eq!(c.offset(), &[2.0, 2.0]);
        // hand evaluation at [0,0] and [1,0]
        assert_eq!(c.apply(&[0.0, 0.0]).unwrap(), vec![2.0, 2.0]);
        assert_eq!(c.apply(&[1.0, 0.0]).unwrap(), vec![4.0, 2.0]);
    }

    #[test]
    fn constant_outer_absorbs() {
        let outer = AffineMap::new(Matrix::zeros(2, 3), vec![7.0, -1.0]).unwrap();
        let inner = AffineMap::new(
            Matrix::from_rows(&[vec![1.0, 2.0], vec![0.5, 0.0], vec![3.0, 1.0]]).unwrap(),
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let c = compose_affine(&outer, &inner).unwrap();
        assert_eq!(c.linear(), &Matrix::zeros(2, 2));
        assert_eq!(c.offset(), &[7.0, -1.0]);
    }

    #[test]
    fn composition_dimension_mismatch() {
        let outer = AffineMap::identity(3);
        let inner = AffineMap::identity(2);
        assert!(matches!(
            compose_affine(&outer, &inner),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&Matrix::identity(5), 1e-9), 5);
        assert_eq!(numerical_rank(&diag2(1.0, 1e-15), 1e-9), 1);
        assert_eq!(numerical_rank(&Matrix::zeros(3, 4), 1e-9), 0);
        assert_eq!(numerical_rank(&Matrix::zeros(0, 0), 1e-9), 0);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        let d = pairwise_distances(&[vec![0.0], vec![3.0]]).unwrap();
        assert_eq!(d.as_slice(), &[0.0, 3.0, 3.0, 0.0]);
        let d = pairwise_distances(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        assert!(pairwise_distances(&[vec![0.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn solve_structure_full_rank_and_deficient() {
        let m = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let s = LinearSolveStructure::new(&m);
        assert_eq!(s.rank, 2);
        assert_eq!(s.null_basis.cols(), 0);
        let x = s.pinv.matvec(&[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);

        let m = Matrix::from_rows(&[vec![1.0, 1.0, 0.0]]).unwrap();
        let s = LinearSolveStructure::new(&m);
        assert_eq!(s.rank, 1);
        assert_eq!(s.null_basis.cols(), 2);
        for c in 0..2 {
            let v: Vec<f64> = (0..3).map(|r| s.null_basis.get(r, c)).collect();
            assert!(m.matvec(&v).unwrap()[0].abs() < 1e-12);
        }
    }
}
