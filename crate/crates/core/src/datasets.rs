//! Toy dataset generators with known topology.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training targets: real vectors (regression) or class labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Targets {
    Values(Vec<Vec<f64>>),
    Labels(Vec<usize>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Values(v) => v.len(),
            Targets::Labels(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match self {
            Targets::Labels(l) => Some(l),
            Targets::Values(_) => None,
        }
    }

    fn subset(&self, idx: &[usize]) -> Self {
        match self {
            Targets::Values(v) => Targets::Values(idx.iter().map(|&i| v[i].clone()).collect()),
            Targets::Labels(l) => Targets::Labels(idx.iter().map(|&i| l[i]).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: String,
    /// Generator parameters as a JSON object.
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    /// Ground-truth Betti numbers of the sampled space, when known.
    pub betti: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Targets,
    pub metadata: DatasetMeta,
}

impl LabeledDataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Targets, metadata: DatasetMeta) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::dims("dataset targets", inputs.len(), targets.len()));
        }
        if let Some(first) = inputs.first() {
            if let Some(bad) = inputs.iter().find(|p| p.len() != first.len()) {
                return Err(Error::dims("dataset input dimension", first.len(), bad.len()));
            }
        }
        let finite_inputs = inputs.iter().flatten().all(|v| v.is_finite());
        let finite_targets = match &targets {
            Targets::Values(v) => v.iter().flatten().all(|x| x.is_finite()),
            Targets::Labels(_) => true,
        };
        if !finite_inputs || !finite_targets {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Self {
            inputs,
            targets,
            metadata,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    /// Rows `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: self.targets.subset(idx),
            metadata: self.metadata.clone(),
        }
    }
}

/// Points on `[-π, π]` padded as `(θ, 0)`, with targets
/// `[cos(aθ)cos(bθ), cos(aθ)sin(bθ)]`.
pub fn gen_curve(a: f64, b: f64, n: usize) -> Result<LabeledDataset> {
    if n < 2 {
        return Err(Error::InvalidArgument("curve needs at least 2 points".into()));
    }
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        let theta = -PI * (1.0 - t) + PI * t;
        inputs.push(vec![theta, 0.0]);
        let r = (a * theta).cos();
        targets.push(vec![r * (b * theta).cos(), r * (b * theta).sin()]);
    }
    LabeledDataset::new(
        inputs,
        Targets::Values(targets),
        DatasetMeta {
            generator: "curve".into(),
            params: serde_json::json!({ "a": a, "b": b, "n": n }),
            seed: None,
            betti: None,
        },
    )
}

/// Curve with `a, b` drawn from `U[-1, 1]`.
pub fn gen_random_curve(n: usize, seed: u64) -> Result<LabeledDataset> {
    let (a, b) = random_curve_params(seed);
    let mut ds = gen_curve(a, b, n)?;
    ds.metadata.seed = Some(seed);
    Ok(ds)
}

pub fn random_curve_params(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

pub const SPHERE_RADII: [f64; 4] = [1.0, 1.5, 2.0, 2.5];

/// Four concentric `d`-spheres in `R^{d+1}` with radii 1, 1.5, 2, 2.5 and
/// alternating labels 0, 1, 0, 1.
pub fn gen_concentric_spheres(d: usize, n_per_sphere: usize, seed: u64) -> Result<LabeledDataset> {
    if d == 0 || n_per_sphere == 0 {
        return Err(Error::InvalidArgument(
            "sphere dimension and sample count must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(4 * n_per_sphere);
    let mut labels = Vec::with_capacity(4 * n_per_sphere);
    for (s, &radius) in SPHERE_RADII.iter().enumerate() {
        for _ in 0..n_per_sphere {
            let v = loop {
                let v: Vec<f64> = (0..=d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    break v.into_iter().map(|x| radius * x / norm).collect::<Vec<_>>();
                }
            };
            inputs.push(v);
            labels.push(s % 2);
        }
    }
    LabeledDataset::new(
        inputs,
        Targets::Labels(labels),
        DatasetMeta {
            generator: "concentric-spheres".into(),
            params: serde_json::json!({ "d": d, "n_per_sphere": n_per_sphere }),
            seed: Some(seed),
            betti: None,
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Circle,
    AnnulusCloud,
    WedgeOfCircles,
    Interval,
}

impl TopologyKind {
    pub fn betti(self) -> Vec<usize> {
        match self {
            TopologyKind::Circle | TopologyKind::AnnulusCloud => vec![1, 1],
            TopologyKind::WedgeOfCircles => vec![1, 2],
            TopologyKind::Interval => vec![1, 0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Circle => "circle",
            TopologyKind::AnnulusCloud => "annulus-cloud",
            TopologyKind::WedgeOfCircles => "wedge-of-circles",
            TopologyKind::Interval => "interval",
        }
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(TopologyKind::Circle),
            "annulus-cloud" => Ok(TopologyKind::AnnulusCloud),
            "wedge-of-circles" => Ok(TopologyKind::WedgeOfCircles),
            "interval" => Ok(TopologyKind::Interval),
            other => Err(Error::InvalidArgument(format!("unknown topology kind {other}"))),
        }
    }
}

/// Point clouds with documented Betti numbers (stored in the metadata).
///
/// * circle: `n` points on the unit circle at equal angular spacing with a
///   seed-dependent phase.
/// * annulus-cloud: uniform samples of the annulus `1 <= r <= 2`.
/// * wedge-of-circles: two unit circles centred at `(∓1, 0)` touching at the
///   origin, which is sampled exactly once.
/// * interval: `n` increasing points in `[0, 1]` (one-dimensional).
///
/// `noise` is the standard deviation of an isotropic Gaussian perturbation.
pub fn gen_known_topology(
    kind: TopologyKind,
    n: usize,
    noise: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if n < 10 {
        return Err(Error::InvalidArgument("need at least 10 points".into()));
    }
    if !(noise >= 0.0) {
        return Err(Error::InvalidArgument("noise must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<f64>> = match kind {
        TopologyKind::Circle => {
            let phase = rng.random_range(0.0..2.0 * PI);
            (0..n)
                .map(|i| {
                    let t = phase + 2.0 * PI * i as f64 / n as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        TopologyKind::AnnulusCloud => (0..n)
            .map(|_| {
                // area-uniform radius in [1, 2]
                let r = (1.0 + 3.0 * rng.random::<f64>()).sqrt();
                let t = rng.random_range(0.0..2.0 * PI);
                vec![r * t.cos(), r * t.sin()]
            })
            .collect(),
        TopologyKind::WedgeOfCircles => {
            let left = n / 2;
            let right = n - left - 1;
            let phase = rng.random_range(0.0..1.0);
            let mut pts = vec![vec![0.0, 0.0]];
            // left circle centred (-1, 0): the origin sits at angle 0
            for i in 0..left {
                let t = 2.0 * PI * (i as f64 + 0.5 + 0.5 * phase) / (left as f64 + 1.0);
                pts.push(vec![-1.0 + t.cos(), t.sin()]);
            }
            // right circle centred (1, 0): the origin sits at angle π
            for i in 0..right {
                let t = PI + 2.0 * PI * (i as f64 + 0.5 + 0.5 * phase) / (right as f64 + 1.0);
                pts.push(vec![1.0 + t.cos(), t.sin()]);
            }
            pts
        }
        TopologyKind::Interval => {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            v.sort_by(f64::total_cmp);
            v.into_iter().map(|x| vec![x]).collect()
        }
    };
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise).expect("valid std");
        for p in &mut points {
            for v in p.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
        if kind == TopologyKind::Interval {
            points.sort_by(|a, b| a[0].total_cmp(&b[0]));
        }
    }
    let len = points.len();
    LabeledDataset::new(
        points,
        Targets::Labels(vec![0; len]),
        DatasetMeta {
            generator: kind.name().into(),
            params: serde_json::json!({ "n": n, "noise": noise }),
            seed: Some(seed),
            betti: Some(kind.betti()),
        },
    )
}

/// Two-class problem whose class 0 is a scaled [`gen_known_topology`] cloud.
///
/// Class 1 surrounds it with a ring at distance `scale` beyond its largest
/// norm and plugs its holes with small discs, so a classifier has to destroy
/// the loops of class 0. For the interval, class 1 sits on both sides.
/// Metadata records the Betti numbers of class 0.
pub fn gen_two_class_topology(
    kind: TopologyKind,
    n_per_class: usize,
    noise: f64,
    scale: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let inner = gen_known_topology(kind, n_per_class, noise, seed)?;
    let mut inputs: Vec<Vec<f64>> = inner
        .inputs
        .into_iter()
        .map(|p| p.into_iter().map(|v| v * scale).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c1a5_5001);
    let disc = |rng: &mut ChaCha8Rng, cx: f64, cy: f64, r: f64| {
        let rr = r * rng.random::<f64>().sqrt();
        let t = rng.random_range(0.0..2.0 * PI);
        vec![cx + rr * t.cos(), cy + rr * t.sin()]
    };
    let others: Vec<Vec<f64>> = if kind == TopologyKind::Interval {
        (0..n_per_class)
            .map(|i| {
                let u = rng.random::<f64>();
                let x = if i % 2 == 0 { -scale * (0.5 + u) } else { scale * (1.5 + u) };
                vec![x]
            })
            .collect()
    } else {
        let max_norm = inputs.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        let ring = max_norm + scale;
        let holes: Vec<(f64, f64)> = match kind {
            TopologyKind::WedgeOfCircles => vec![(-scale, 0.0), (scale, 0.0)],
            _ => vec![(0.0, 0.0)],
        };
        (0..n_per_class)
            .map(|i| {
                if i % 2 == 0 {
                    let t = rng.random_range(0.0..2.0 * PI);
                    vec![ring * t.cos(), ring * t.sin()]
                } else {
                    let (cx, cy) = holes[(i / 2) % holes.len()];
                    disc(&mut rng, cx, cy, 0.3 * scale)
                }
            })
            .collect()
    };
    inputs.extend(others);
    let labels = (0..2 * n_per_class).map(|i| usize::from(i >= n_per_class)).collect();
    LabeledDataset::new(
        inputs,
        Targets::Labels(labels),
        DatasetMeta {
            generator: format!("two-class-{}", kind.name()),
            params: serde_json::json!({ "n_per_class": n_per_class, "noise": noise, "scale": scale }),
            seed: Some(seed),
            betti: Some(kind.betti()),
        },
    )
}
