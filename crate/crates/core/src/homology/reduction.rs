//! Z/2 boundary-matrix reduction and barcodes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::rips::{Filtration, Vertices};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub birth: f64,
    /// `f64::INFINITY` for classes that never die within the filtration.
    pub death: f64,
}

impl Bar {
    pub fn is_infinite(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn alive_at(&self, eps: f64) -> bool {
        self.birth <= eps && eps < self.death
    }
}

/// Bars per homology dimension, each list sorted by (birth, death).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barcode {
    pub bars: Vec<Vec<Bar>>,
    /// Zero-length pairs found per dimension (not listed in `bars`).
    pub zero_length: Vec<usize>,
}

impl Barcode {
    pub fn max_dim(&self) -> usize {
        self.bars.len().saturating_sub(1)
    }

    pub fn dim(&self, k: usize) -> &[Bar] {
        self.bars.get(k).map_or(&[], Vec::as_slice)
    }

    /// Keeps dimensions `0..=max_dim`.
    pub fn truncated(mut self, max_dim: usize) -> Self {
        self.bars.truncate(max_dim + 1);
        self.zero_length.truncate(max_dim + 1);
        self
    }

    /// Multiset comparison helper: all bars as sorted `(dim, birth, death)`.
    pub fn flat(&self) -> Vec<(usize, f64, f64)> {
        self.bars
            .iter()
            .enumerate()
            .flat_map(|(k, bs)| bs.iter().map(move |b| (k, b.birth, b.death)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionOptions {
    /// Reduce higher dimensions first and skip columns known to reduce to zero.
    pub clearing: bool,
}

pub fn persistent_homology(f: &Filtration) -> Barcode {
    persistent_homology_with(f, ReductionOptions::default())
}

pub fn persistent_homology_with(f: &Filtration, opts: ReductionOptions) -> Barcode {
    let simplices = f.simplices();
    let n = simplices.len();
    let index: HashMap<&Vertices, u32> = simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (&s.vertices, i as u32))
        .collect();
    let boundary = |j: usize| -> Vec<u32> {
        let s = &simplices[j].vertices;
        if s.len() == 1 {
            return Vec::new();
        }
        let mut col: Vec<u32> = (0..s.len())
            .map(|skip| {
                let face: Vertices = s
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &v)| v)
                    .collect();
                index[&face]
            })
            .collect();
        col.sort_unstable();
        col
    };

    let order: Vec<usize> = if opts.clearing {
        let mut o: Vec<usize> = (0..n).collect();
        o.sort_by_key(|&j| (std::cmp::Reverse(simplices[j].dim()), j));
        o
    } else {
        (0..n).collect()
    };

    // pivot_of[row] = column whose reduced low is `row`
    let mut pivot_of: Vec<u32> = vec![u32::MAX; n];
    let mut reduced: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut negative = vec![false; n];
    let mut cleared = vec![false; n];
    let mut scratch = Vec::new();
    for &j in &order {
        if cleared[j] {
            continue;
        }
        let mut col = boundary(j);
        while let Some(&low) = col.last() {
            let k = pivot_of[low as usize];
            if k == u32::MAX {
                break;
            }
            symmetric_difference(&col, &reduced[k as usize], &mut scratch);
            std::mem::swap(&mut col, &mut scratch);
        }
        if let Some(&low) = col.last() {
            pivot_of[low as usize] = j as u32;
            negative[j] = true;
            if opts.clearing {
                cleared[low as usize] = true;
            }
            reduced[j] = col;
        }
    }

    let dims = f.max_dim() + 1;
    let mut bars = vec![Vec::new(); dims];
    let mut zero_length = vec![0; dims];
    for i in 0..n {
        if negative[i] {
            continue;
        }
        let birth = simplices[i].value;
        let k = simplices[i].dim();
        let death = match pivot_of[i] {
            u32::MAX => f64::INFINITY,
            j => simplices[j as usize].value,
        };
        if death == birth {
            zero_length[k] += 1;
        } else {
            bars[k].push(Bar { birth, death });
        }
    }
    for b in &mut bars {
        b.sort_by(|x, y| x.birth.total_cmp(&y.birth).then(x.death.total_cmp(&y.death)));
    }
    Barcode { bars, zero_length }
}

fn symmetric_difference(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Number of bars alive at `eps` (`birth <= eps < death`) per dimension.
pub fn betti_at_scale(b: &Barcode, eps: f64) -> Vec<usize> {
    b.bars
        .iter()
        .map(|bs| bs.iter().filter(|bar| bar.alive_at(eps)).count())
        .collect()
}
