//! Vietoris–Rips filtrations of a (pseudo)metric.

use std::cmp::Ordering;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::linalg::DistanceMatrix;

pub const DEFAULT_SIMPLEX_CAP: usize = 5_000_000;

pub type Vertices = SmallVec<[u32; 4]>;

#[derive(Clone, Debug, PartialEq)]
pub struct Simplex {
    /// Increasing vertex indices.
    pub vertices: Vertices,
    /// Largest pairwise distance among the vertices.
    pub value: f64,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Simplices sorted by (value, dimension, vertex tuple).
#[derive(Clone, Debug, PartialEq)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    max_dim: usize,
    max_scale: f64,
    num_vertices: usize,
}

impl Filtration {
    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Largest simplex dimension included.
    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn max_scale(&self) -> f64 {
        self.max_scale
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Number of simplices of each dimension with value `<= scale`.
    pub fn counts_at(&self, scale: f64) -> Vec<usize> {
        let mut counts = vec![0; self.max_dim + 1];
        for s in self.simplices.iter().take_while(|s| s.value <= scale) {
            counts[s.dim()] += 1;
        }
        counts
    }
}

fn filtration_order(a: &Simplex, b: &Simplex) -> Ordering {
    a.value
        .total_cmp(&b.value)
        .then(a.vertices.len().cmp(&b.vertices.len()))
        .then_with(|| a.vertices.cmp(&b.vertices))
}

pub fn rips_filtration(d: &DistanceMatrix, max_dim: usize, max_scale: f64) -> Result<Filtration> {
    rips_filtration_capped(d, max_dim, max_scale, DEFAULT_SIMPLEX_CAP)
}

/// All simplices of dimension `<= max_dim` and diameter `<= max_scale`.
/// Errors with [`Error::SimplexCap`] once more than `cap` simplices are produced.
pub fn rips_filtration_capped(
    d: &DistanceMatrix,
    max_dim: usize,
    max_scale: f64,
    cap: usize,
) -> Result<Filtration> {
    if max_scale.is_nan() || max_scale < 0.0 {
        return Err(Error::InvalidArgument(format!("max_scale must be >= 0, got {max_scale}")));
    }
    let n = d.len();
    if n > u32::MAX as usize {
        return Err(Error::InvalidArgument("too many points".into()));
    }
    let mut builder = Builder {
        d,
        max_dim,
        max_scale,
        cap,
        out: Vec::new(),
    };
    for v in 0..n {
        builder.push(SmallVec::from_slice(&[v as u32]), 0.0)?;
    }
    if max_dim >= 1 {
        for v in 0..n {
            let upper: Vec<u32> = (v + 1..n)
                .filter(|&u| d.get(v, u) <= max_scale)
                .map(|u| u as u32)
                .collect();
            let mut simplex: Vertices = SmallVec::from_slice(&[v as u32]);
            builder.expand(&mut simplex, 0.0, &upper)?;
        }
    }
    let mut simplices = builder.out;
    simplices.sort_by(filtration_order);
    Ok(Filtration {
        simplices,
        max_dim,
        max_scale,
        num_vertices: n,
    })
}

struct Builder<'a> {
    d: &'a DistanceMatrix,
    max_dim: usize,
    max_scale: f64,
    cap: usize,
    out: Vec<Simplex>,
}

impl Builder<'_> {
    fn push(&mut self, vertices: Vertices, value: f64) -> Result<()> {
        if self.out.len() >= self.cap {
            return Err(Error::SimplexCap { cap: self.cap });
        }
        self.out.push(Simplex { vertices, value });
        Ok(())
    }

    /// Adds every coface of `simplex` formed with vertices from `candidates`
    /// (common neighbours above its last vertex).
    fn expand(&mut self, simplex: &mut Vertices, value: f64, candidates: &[u32]) -> Result<()> {
        for (k, &u) in candidates.iter().enumerate() {
            let ui = u as usize;
            let v = simplex
                .iter()
                .map(|&w| self.d.get(w as usize, ui))
                .fold(value, f64::max);
            simplex.push(u);
            self.push(simplex.clone(), v)?;
            if simplex.len() <= self.max_dim {
                let next: Vec<u32> = candidates[k + 1..]
                    .iter()
                    .copied()
                    .filter(|&w| self.d.get(ui, w as usize) <= self.max_scale)
                    .collect();
                if !next.is_empty() {
                    self.expand(simplex, v, &next)?;
                }
            }
            simplex.pop();
        }
        Ok(())
    }
}
