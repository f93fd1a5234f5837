//! ReLU multilayer perceptrons, activation codewords and per-region affine maps.
//!
//! Layers are numbered from 1 (first hidden layer) to `L` (output layer).
//! Every layer except the last is followed by a ReLU. A neuron whose
//! preactivation is `>= 0` gets codeword bit 1.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{thin_q, AffineMap, Matrix};

/// A ReLU network given by its layer maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<AffineMap>,
}

/// Preactivations and representations of every layer at one input.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerTrace {
    pub preactivations: Vec<Vec<f64>>,
    pub representations: Vec<Vec<f64>>,
}

impl LayerTrace {
    pub fn output(&self) -> &[f64] {
        self.representations.last().map_or(&[], Vec::as_slice)
    }

    pub fn depth(&self) -> usize {
        self.preactivations.len()
    }
}

/// Stacked activation pattern of layers `1..=l`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalCodeword {
    bits: Vec<bool>,
    layer_sizes: Vec<usize>,
}

impl GlobalCodeword {
    pub fn new(bits: Vec<bool>, layer_sizes: Vec<usize>) -> Result<Self> {
        let total: usize = layer_sizes.iter().sum();
        if total != bits.len() {
            return Err(Error::CodewordStructure(format!(
                "{} bits for layer sizes {:?}",
                bits.len(),
                layer_sizes
            )));
        }
        Ok(Self { bits, layer_sizes })
    }

    /// Builds a codeword from per-layer bit vectors.
    pub fn from_layers(layers: &[Vec<bool>]) -> Self {
        Self {
            bits: layers.iter().flatten().copied().collect(),
            layer_sizes: layers.iter().map(Vec::len).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bits of layer `layer` (1-based).
    pub fn layer(&self, layer: usize) -> &[bool] {
        let start: usize = self.layer_sizes[..layer - 1].iter().sum();
        &self.bits[start..start + self.layer_sizes[layer - 1]]
    }

    /// The codeword restricted to layers `1..=layer`.
    pub fn prefix(&self, layer: usize) -> Self {
        let len: usize = self.layer_sizes[..layer].iter().sum();
        Self {
            bits: self.bits[..len].to_vec(),
            layer_sizes: self.layer_sizes[..layer].to_vec(),
        }
    }

    pub fn with_bit(&self, index: usize, value: bool) -> Self {
        let mut c = self.clone();
        c.bits[index] = value;
        c
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for GlobalCodeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut start = 0;
        for (i, &n) in self.layer_sizes.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for &b in &self.bits[start..start + n] {
                f.write_str(if b { "1" } else { "0" })?;
            }
            start += n;
        }
        Ok(())
    }
}

impl std::str::FromStr for GlobalCodeword {
    type Err = Error;

    /// Parses the `Display` form, e.g. `"01|1"`.
    fn from_str(s: &str) -> Result<Self> {
        let layers = s
            .split('|')
            .map(|part| {
                part.chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::Parse(format!("bad codeword character {other:?}"))),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_layers(&layers))
    }
}

impl Serialize for GlobalCodeword {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GlobalCodeword {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sign pattern of a preactivation vector under the `>= 0` convention.
pub fn sign_bits(preactivation: &[f64]) -> Vec<bool> {
    preactivation.iter().map(|&v| v >= 0.0).collect()
}

/// Bits of `layer` (1-based) from a trace.
pub fn precodeword(trace: &LayerTrace, layer: usize) -> Result<Vec<bool>> {
    if layer == 0 || layer > trace.depth() {
        return Err(Error::InvalidArgument(format!(
            "layer {layer} outside 1..={}",
            trace.depth()
        )));
    }
    Ok(sign_bits(&trace.preactivations[layer - 1]))
}

impl Mlp {
    pub fn new(layers: Vec<AffineMap>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[1].input_dim() != w[0].output_dim() {
                return Err(Error::dims("layer chaining", w[0].output_dim(), w[1].input_dim()));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[AffineMap] {
        &self.layers
    }

    #[cfg(test)]
    pub(crate) fn layers_mut(&mut self) -> &mut [AffineMap] {
        &mut self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Layer widths including the input: `[n_0, n_1, ..., n_L]`.
    pub fn shape(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(AffineMap::output_dim))
            .collect()
    }

    pub fn width(&self, layer: usize) -> usize {
        self.layers[layer - 1].output_dim()
    }

    pub(crate) fn check_layer(&self, layer: usize) -> Result<()> {
        if layer == 0 || layer > self.depth() {
            return Err(Error::InvalidArgument(format!(
                "layer {layer} outside 1..={}",
                self.depth()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<LayerTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::dims("network input", self.input_dim(), x.len()));
        }
        let last = self.depth() - 1;
        let mut pre = Vec::with_capacity(self.depth());
        let mut rep: Vec<Vec<f64>> = Vec::with_capacity(self.depth());
        for (k, layer) in self.layers.iter().enumerate() {
            let input = if k == 0 { x } else { rep[k - 1].as_slice() };
            let z = layer.apply(input)?;
            let a = if k == last {
                z.clone()
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            pre.push(z);
            rep.push(a);
        }
        Ok(LayerTrace {
            preactivations: pre,
            representations: rep,
        })
    }

    /// Representation `Φ^l(x)` at a layer (1-based).
    pub fn representation(&self, x: &[f64], layer: usize) -> Result<Vec<f64>> {
        self.check_layer(layer)?;
        let trace = self.forward(x)?;
        Ok(trace.representations[layer - 1].clone())
    }

    pub fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.representation(x, self.depth())
    }

    pub fn global_codeword(&self, x: &[f64], upto_layer: usize) -> Result<GlobalCodeword> {
        self.check_layer(upto_layer)?;
        let trace = self.forward(x)?;
        Ok(codeword_from_trace(&trace, upto_layer))
    }

    pub(crate) fn check_codeword(&self, j: &GlobalCodeword, upto_layer: usize) -> Result<()> {
        self.check_layer(upto_layer)?;
        let expected: Vec<usize> = (1..=upto_layer).map(|l| self.width(l)).collect();
        if j.layer_sizes() != expected.as_slice() {
            return Err(Error::CodewordStructure(format!(
                "layer sizes {:?}, network expects {:?}",
                j.layer_sizes(),
                expected
            )));
        }
        Ok(())
    }

    /// The affine map the network applies on the region with codeword `j`,
    /// up to `upto_layer`. Masks are applied after every activated layer;
    /// the output layer is never masked.
    pub fn region_affine_map(&self, j: &GlobalCodeword, upto_layer: usize) -> Result<AffineMap> {
        self.check_codeword(j, upto_layer)?;
        let mut current = AffineMap::identity(self.input_dim());
        for layer in 1..=upto_layer {
            current = crate::linalg::compose_affine(&self.layers[layer - 1], &current)?;
            if layer < self.depth() {
                current.mask_rows(j.layer(layer));
            }
        }
        Ok(current)
    }

    /// Preactivation maps `T_k ∘ Φ^{k-1}_J` for `k = 1..=upto_layer`, as
    /// functions of the network input on the region of `j`.
    pub fn region_preactivation_maps(
        &self,
        j: &GlobalCodeword,
        upto_layer: usize,
    ) -> Result<Vec<AffineMap>> {
        self.check_codeword(j, upto_layer)?;
        let mut current = AffineMap::identity(self.input_dim());
        let mut out = Vec::with_capacity(upto_layer);
        for layer in 1..=upto_layer {
            let pre = crate::linalg::compose_affine(&self.layers[layer - 1], &current)?;
            current = pre.clone();
            if layer < self.depth() {
                current.mask_rows(j.layer(layer));
            }
            out.push(pre);
        }
        Ok(out)
    }

    /// Network with i.i.d. `Normal(0, 2 / fan_in)` weights and zero biases.
    /// `shape` lists widths including the input, e.g. `[2, 25, 25, 2]`.
    pub fn init_kaiming(shape: &[usize], seed: u64) -> Result<Self> {
        check_shape(shape)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = shape
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("valid std");
                let data: Vec<f64> = (0..fan_in * fan_out).map(|_| normal.sample(&mut rng)).collect();
                AffineMap::new(Matrix::new(fan_out, fan_in, data)?, vec![0.0; fan_out])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    /// Network whose weight matrices have orthonormal rows or columns
    /// (QR of a Gaussian matrix) and zero biases.
    pub fn init_orthogonal(shape: &[usize], seed: u64) -> Result<Self> {
        check_shape(shape)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).expect("valid std");
        let layers = shape
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let (tall, short) = (fan_in.max(fan_out), fan_in.min(fan_out));
                let g: Vec<f64> = (0..tall * short).map(|_| normal.sample(&mut rng)).collect();
                let q = thin_q(&Matrix::new(tall, short, g)?);
                let weights = if fan_out >= fan_in { q } else { q.transpose() };
                AffineMap::new(weights, vec![0.0; fan_out])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.len() < 2 || shape.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "network shape {shape:?} needs at least two positive widths"
        )));
    }
    Ok(())
}

pub(crate) fn codeword_from_trace(trace: &LayerTrace, upto_layer: usize) -> GlobalCodeword {
    let layers: Vec<Vec<bool>> = trace.preactivations[..upto_layer]
        .iter()
        .map(|z| sign_bits(z))
        .collect();
    GlobalCodeword::from_layers(&layers)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two hidden units computing ReLU(x) and ReLU(-x), summed: |x|.
    pub(crate) fn abs_net() -> Mlp {
        Mlp::new(vec![
            AffineMap::new(Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(), vec![0.0, 0.0])
                .unwrap(),
            AffineMap::new(Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(), vec![0.0]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn single_layer_is_unactivated() {
        let net = Mlp::new(vec![
            AffineMap::new(Matrix::from_rows(&[vec![1.0]]).unwrap(), vec![0.0]).unwrap(),
        ])
        .unwrap();
        let t = net.forward(&[-2.0]).unwrap();
        assert_eq!(t.preactivations[0], vec![-2.0]);
        assert_eq!(t.output(), &[-2.0]);
    }

    #[test]
    fn abs_net_forward_and_codewords() {
        let net = abs_net();
        assert_eq!(net.output(&[-0.5]).unwrap(), vec![0.5]);
        let bits = |x: f64| net.global_codeword(&[x], 1).unwrap().bits().to_vec();
        assert_eq!(bits(-0.5), vec![false, true]);
        assert_eq!(bits(0.5), vec![true, false]);
    }

    #[test]
    fn precodeword_sign_convention() {
        let trace = LayerTrace {
            preactivations: vec![vec![2.0, -3.0, 0.0]],
            representations: vec![vec![2.0, 0.0, 0.0]],
        };
        assert_eq!(precodeword(&trace, 1).unwrap(), vec![true, false, true]);
        assert!(precodeword(&trace, 2).is_err());
        let neg = LayerTrace {
            preactivations: vec![vec![-1.0, -2.0]],
            representations: vec![vec![0.0, 0.0]],
        };
        assert_eq!(precodeword(&neg, 1).unwrap(), vec![false, false]);
    }

    #[test]
    fn abs_net_region_map() {
        let net = abs_net();
        let j = GlobalCodeword::from_layers(&[vec![false, true], vec![true]]);
        let map = net.region_affine_map(&j, 2).unwrap();
        assert_eq!(map.linear().data(), &[-1.0]);
        assert_eq!(map.apply(&[-0.5]).unwrap(), vec![0.5]);
    }

    #[test]
    fn all_ones_and_all_zeros_codewords() {
        let net = Mlp::init_kaiming(&[3, 4, 5, 2], 7).unwrap();
        let ones = GlobalCodeword::from_layers(&[vec![true; 4], vec![true; 5], vec![true; 2]]);
        let map = net.region_affine_map(&ones, 3).unwrap();
        let mut plain = AffineMap::identity(3);
        for l in net.layers() {
            plain = crate::linalg::compose_affine(l, &plain).unwrap();
        }
        assert!(map
            .linear()
            .data()
            .iter()
            .zip(plain.linear().data())
            .all(|(a, b)| (a - b).abs() < 1e-12));

        let zeros = GlobalCodeword::from_layers(&[vec![false; 4], vec![false; 5], vec![true; 2]]);
        let map = net.region_affine_map(&zeros, 3).unwrap();
        assert_eq!(map.linear().max_abs(), 0.0);
        assert_eq!(crate::linalg::numerical_rank(map.linear(), 1e-7), 0);
    }

    #[test]
    fn codeword_structure_checked() {
        let net = abs_net();
        let bad = GlobalCodeword::from_layers(&[vec![true]]);
        assert!(matches!(
            net.region_affine_map(&bad, 1),
            Err(Error::CodewordStructure(_))
        ));
    }

    #[test]
    fn orthogonal_square_layers() {
        let net = Mlp::init_orthogonal(&[6, 6, 6], 3).unwrap();
        for l in net.layers() {
            let w = l.linear();
            let wtw = w.transpose().matmul(w).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((wtw.get(i, j) - target).abs() < 1e-10);
                }
            }
            assert!(l.offset().iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn orthogonal_rectangular_layers() {
        let net = Mlp::init_orthogonal(&[3, 8, 2], 11).unwrap();
        // 8x3: orthonormal columns
        let w = net.layers()[0].linear();
        let g = w.transpose().matmul(w).unwrap();
        // 2x8: orthonormal rows
        let v = net.layers()[1].linear();
        let h = v.matmul(&v.transpose()).unwrap();
        for (m, n) in [(&g, 3), (&h, 2)] {
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((m.get(i, j) - target).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn kaiming_variance_and_determinism() {
        let mut total = 0.0;
        let mut count = 0usize;
        for seed in 0..10 {
            let net = Mlp::init_kaiming(&[100, 100], seed).unwrap();
            let w = net.layers()[0].linear().data();
            total += w.iter().map(|v| v * v).sum::<f64>();
            count += w.len();
        }
        let var = total / count as f64;
        assert!((var - 0.02).abs() < 0.2 * 0.02, "variance {var}");
        assert_eq!(
            Mlp::init_kaiming(&[4, 9, 3], 5).unwrap(),
            Mlp::init_kaiming(&[4, 9, 3], 5).unwrap()
        );
        assert_ne!(
            Mlp::init_kaiming(&[4, 9, 3], 5).unwrap(),
            Mlp::init_kaiming(&[4, 9, 3], 6).unwrap()
        );
    }

    #[test]
    fn shape_validation() {
        assert!(Mlp::init_kaiming(&[3], 0).is_err());
        assert!(Mlp::init_kaiming(&[3, 0, 2], 0).is_err());
        let a = AffineMap::identity(2);
        let b = AffineMap::identity(3);
        assert!(Mlp::new(vec![a, b]).is_err());
    }
}
