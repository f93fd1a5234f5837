//! Concentric spheres classification: overlap statistics before and after
//! training, and rank profiles of the trained networks.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::datasets::{gen_concentric_spheres, LabeledDataset};
use crate::error::Result;
use crate::linalg::DEFAULT_RANK_TOL;
use crate::network::Mlp;
use crate::overlap::{overlap_decomposition_with, overlap_statistics, OverlapOptions};
use crate::polyhedra::{populate_decomposition, BoundingBox};
use crate::rankdecomp::rank_profile;
use crate::train::{train, TrainConfig, TrainReport};

use super::{csv_row, ExperimentOutput, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpheresConfig {
    /// Sphere dimension; inputs live in `d + 1` dimensions.
    pub d: usize,
    pub seeds: Vec<u64>,
    pub n_per_sphere: usize,
    /// Seed of the sampled spheres, shared by all networks.
    pub data_seed: u64,
    pub width: usize,
    pub depth: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: Option<usize>,
    pub delta: f64,
    pub bbox: f64,
    pub volume_samples: usize,
    pub rank_tol: f64,
}

impl Default for SpheresConfig {
    fn default() -> Self {
        let t = TrainConfig::spheres(0);
        Self {
            d: 1,
            seeds: (0..10).collect(),
            n_per_sphere: 500,
            data_seed: 0,
            width: 25,
            depth: 4,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            delta: 1.0,
            bbox: 100.0,
            volume_samples: 20_000,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

impl SpheresConfig {
    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.d + 1];
        s.extend(std::iter::repeat_n(self.width, self.depth));
        s.push(2);
        s
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            ..TrainConfig::spheres(seed)
        }
    }

    pub fn dataset(&self) -> Result<LabeledDataset> {
        gen_concentric_spheres(self.d, self.n_per_sphere, self.data_seed)
    }
}

/// Overlap statistics of one network at its final layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapSnapshot {
    pub n_regions: usize,
    pub n_classes: usize,
    pub class_sizes: Vec<usize>,
    pub n_overlap_regions: usize,
    pub median_region_volume: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRanks {
    pub layer: usize,
    pub n_regions: usize,
    /// `(rank, number of regions)` pairs.
    pub histogram: Vec<(usize, usize)>,
    pub low_rank_regions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereTrial {
    pub seed: u64,
    pub final_loss: f64,
    pub train_accuracy: f64,
    pub before: OverlapSnapshot,
    pub after: OverlapSnapshot,
    /// Ranks of the trained network at every hidden layer.
    pub ranks: Vec<LayerRanks>,
}

impl SphereTrial {
    /// Pooled fraction of hidden-layer regions with rank below the input dimension.
    pub fn low_rank_fraction(&self) -> f64 {
        let total: usize = self.ranks.iter().map(|r| r.n_regions).sum();
        let low: usize = self.ranks.iter().map(|r| r.low_rank_regions).sum();
        if total == 0 {
            0.0
        } else {
            low as f64 / total as f64
        }
    }
}

fn snapshot(net: &Mlp, ds: &LabeledDataset, cfg: &SpheresConfig, seed: u64) -> Result<OverlapSnapshot> {
    let bbox = BoundingBox::symmetric(cfg.d + 1, cfg.bbox)?;
    let decomp = populate_decomposition(net, &ds.inputs, net.depth(), &bbox)?;
    let od = overlap_decomposition_with(net, &ds.inputs, &decomp, &OverlapOptions::with_delta(cfg.delta))?;
    let stats = overlap_statistics(&od, &decomp, cfg.volume_samples, seed)?;
    Ok(OverlapSnapshot {
        n_regions: decomp.len(),
        n_classes: stats.n_classes,
        n_overlap_regions: stats.overlap_region_volumes.len(),
        median_region_volume: stats.median_region_volume(),
        class_sizes: stats.class_sizes,
    })
}

/// Rank profile of every hidden layer over the regions populated by `ds`.
pub fn hidden_ranks(net: &Mlp, ds: &LabeledDataset, cfg: &SpheresConfig) -> Result<Vec<LayerRanks>> {
    let bbox = BoundingBox::symmetric(cfg.d + 1, cfg.bbox)?;
    (1..net.depth())
        .map(|layer| {
            let decomp = populate_decomposition(net, &ds.inputs, layer, &bbox)?;
            let p = rank_profile(net, &decomp, cfg.rank_tol)?;
            Ok(LayerRanks {
                layer,
                n_regions: p.num_regions(),
                low_rank_regions: p.ranks.values().filter(|&&r| r < p.input_dim).count(),
                histogram: p.histogram.into_iter().collect(),
            })
        })
        .collect()
}

pub fn initial_network(cfg: &SpheresConfig, seed: u64) -> Result<Mlp> {
    Mlp::init_kaiming(&cfg.shape(), seed)
}

pub fn train_network(cfg: &SpheresConfig, ds: &LabeledDataset, seed: u64) -> Result<(Mlp, TrainReport)> {
    train(&initial_network(cfg, seed)?, &ds.inputs, &ds.targets, &cfg.train_config(seed))
}

pub fn run_seed(cfg: &SpheresConfig, ds: &LabeledDataset, seed: u64) -> Result<SphereTrial> {
    let init = initial_network(cfg, seed)?;
    let before = snapshot(&init, ds, cfg, seed)?;
    let (net, report) = train(&init, &ds.inputs, &ds.targets, &cfg.train_config(seed))?;
    let after = snapshot(&net, ds, cfg, seed)?;
    Ok(SphereTrial {
        seed,
        final_loss: report.loss_history.last().copied().unwrap_or(f64::NAN),
        train_accuracy: report.accuracy_history.last().copied().unwrap_or(f64::NAN),
        before,
        after,
        ranks: hidden_ranks(&net, ds, cfg)?,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run(cfg: &SpheresConfig) -> Result<ExperimentOutput> {
    let ds = cfg.dataset()?;
    let mut trials = Vec::new();
    let mut rows = Vec::new();
    let mut rank_rows = Vec::new();
    for &seed in &cfg.seeds {
        match run_seed(cfg, &ds, seed) {
            Ok(t) => {
                rows.push(csv_row([
                    seed.to_string(),
                    t.final_loss.to_string(),
                    t.train_accuracy.to_string(),
                    t.before.n_regions.to_string(),
                    t.after.n_regions.to_string(),
                    t.before.n_classes.to_string(),
                    t.after.n_classes.to_string(),
                    t.before.n_overlap_regions.to_string(),
                    t.after.n_overlap_regions.to_string(),
                    fmt_opt(t.before.median_region_volume),
                    fmt_opt(t.after.median_region_volume),
                    String::new(),
                ]));
                for l in &t.ranks {
                    for &(rank, count) in &l.histogram {
                        rank_rows.push(csv_row([
                            seed.to_string(),
                            l.layer.to_string(),
                            rank.to_string(),
                            count.to_string(),
                        ]));
                    }
                }
                let mut v = serde_json::to_value(&t)?;
                v["low_rank_fraction"] = json!(t.low_rank_fraction());
                trials.push(v);
            }
            Err(e) => {
                let mut row = vec![seed.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 10));
                row.push(e.to_string());
                rows.push(row);
                trials.push(json!({ "seed": seed, "error": e.to_string() }));
            }
        }
    }
    Ok(ExperimentOutput {
        results: json!({ "input_dim": cfg.d + 1, "trials": Value::Array(trials) }),
        tables: vec![
            Table::new(
                "spheres.csv",
                &[
                    "seed",
                    "final_loss",
                    "train_accuracy",
                    "regions_before",
                    "regions_after",
                    "classes_before",
                    "classes_after",
                    "overlap_regions_before",
                    "overlap_regions_after",
                    "median_volume_before",
                    "median_volume_after",
                    "error",
                ],
                rows,
            ),
            Table::new("spheres_ranks.csv", &["seed", "layer", "rank", "regions"], rank_rows),
        ],
    })
}
