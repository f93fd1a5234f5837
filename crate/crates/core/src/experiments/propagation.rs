//! Layerwise Betti numbers of a trained classifier: quotient homology from
//! the overlap decomposition against k-NN geodesic persistent homology of the
//! representations.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::datasets::{gen_two_class_topology, LabeledDataset, TopologyKind};
use crate::error::{Error, Result};
use crate::homology::{knn_geodesic_metric, quotient_pseudometric, rips_betti_at, DEFAULT_SIMPLEX_CAP};
use crate::linalg::DEFAULT_RANK_TOL;
use crate::network::Mlp;
use crate::overlap::{overlap_decomposition_with, OverlapOptions};
use crate::polyhedra::{populate_decomposition, BoundingBox};
use crate::rankdecomp::rank_profile;
use crate::train::{train, StopCriterion, TrainConfig};

use super::{csv_row, ExperimentOutput, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationConfig {
    pub kind: TopologyKind,
    pub seeds: Vec<u64>,
    pub n_train_per_class: usize,
    pub n_test_per_class: usize,
    pub noise: f64,
    pub scale: f64,
    pub width: usize,
    pub depth: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: Option<usize>,
    pub stop_accuracy: Option<f64>,
    pub delta: f64,
    pub bbox: f64,
    pub knn_k: usize,
    /// Scale at which both kinds of Betti numbers are read.
    pub epsilon: f64,
    pub max_dim: usize,
    /// Drop misclassified test points before any homology computation.
    pub exclude_misclassified: bool,
    pub rank_tol: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        let t = TrainConfig::propagation(0);
        Self {
            kind: TopologyKind::Circle,
            seeds: (0..10).collect(),
            n_train_per_class: 400,
            n_test_per_class: 150,
            noise: 0.0,
            scale: 3.0,
            width: 15,
            depth: 9,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            stop_accuracy: match t.stop {
                Some(StopCriterion::AccuracyAbove(a)) => Some(a),
                _ => None,
            },
            delta: 10.0,
            bbox: 100.0,
            knn_k: 14,
            epsilon: 2.5,
            max_dim: 1,
            exclude_misclassified: true,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

impl PropagationConfig {
    pub fn input_dim(&self) -> usize {
        if self.kind == TopologyKind::Interval {
            1
        } else {
            2
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(std::iter::repeat_n(self.width, self.depth));
        s.push(2);
        s
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            stop: self.stop_accuracy.map(StopCriterion::AccuracyAbove),
            ..TrainConfig::propagation(seed)
        }
    }

    /// Train and test sets; the test set uses a derived seed.
    pub fn datasets(&self, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
        let train = gen_two_class_topology(self.kind, self.n_train_per_class, self.noise, self.scale, seed)?;
        let test = gen_two_class_topology(
            self.kind,
            self.n_test_per_class,
            self.noise,
            self.scale,
            seed.wrapping_add(1 << 32),
        )?;
        Ok((train, test))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerBetti {
    pub layer: usize,
    pub n_regions: usize,
    pub n_classes: usize,
    pub knn_betti: Vec<usize>,
    pub quotient_betti: Vec<usize>,
    /// `(rank, number of regions)` pairs.
    pub rank_histogram: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationTrial {
    pub seed: u64,
    pub epochs_run: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub excluded_points: usize,
    pub analysed_points: usize,
    /// k-NN geodesic Betti numbers of the analysed inputs.
    pub input_betti: Vec<usize>,
    pub layers: Vec<LayerBetti>,
}

fn predict(net: &Mlp, x: &[f64]) -> Result<usize> {
    let out = net.output(x)?;
    Ok(out
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i))
}

fn analyse_layer(net: &Mlp, points: &[Vec<f64>], layer: usize, cfg: &PropagationConfig) -> Result<LayerBetti> {
    let bbox = BoundingBox::symmetric(cfg.input_dim(), cfg.bbox)?;
    let reps = points
        .iter()
        .map(|x| net.representation(x, layer))
        .collect::<Result<Vec<_>>>()?;
    let knn_betti = rips_betti_at(
        &knn_geodesic_metric(&reps, cfg.knn_k)?,
        cfg.max_dim,
        cfg.epsilon,
        DEFAULT_SIMPLEX_CAP,
    )?;
    let decomp = populate_decomposition(net, points, layer, &bbox)?;
    let od = overlap_decomposition_with(net, points, &decomp, &OverlapOptions::with_delta(cfg.delta))?;
    let quotient_betti = rips_betti_at(
        &quotient_pseudometric(points, &od)?,
        cfg.max_dim,
        cfg.epsilon,
        DEFAULT_SIMPLEX_CAP,
    )?;
    let ranks = rank_profile(net, &decomp, cfg.rank_tol)?;
    Ok(LayerBetti {
        layer,
        n_regions: decomp.len(),
        n_classes: od.len(),
        knn_betti,
        quotient_betti,
        rank_histogram: ranks.histogram.into_iter().collect(),
    })
}

pub fn run_seed(cfg: &PropagationConfig, seed: u64) -> Result<PropagationTrial> {
    let (train_set, test_set) = cfg.datasets(seed)?;
    let init = Mlp::init_kaiming(&cfg.shape(), seed)?;
    let (net, report) = train(&init, &train_set.inputs, &train_set.targets, &cfg.train_config(seed))?;
    let labels = test_set.targets.labels().expect("class labels");
    let mut correct = 0;
    let mut points = Vec::new();
    let mut excluded = 0;
    for (x, &y) in test_set.inputs.iter().zip(labels) {
        let ok = predict(&net, x)? == y;
        correct += usize::from(ok);
        if y == 0 {
            if ok || !cfg.exclude_misclassified {
                points.push(x.clone());
            } else {
                excluded += 1;
            }
        }
    }
    if points.len() <= cfg.knn_k {
        return Err(Error::InvalidArgument(format!(
            "only {} class-0 test points left for homology",
            points.len()
        )));
    }
    let input_betti = rips_betti_at(
        &knn_geodesic_metric(&points, cfg.knn_k)?,
        cfg.max_dim,
        cfg.epsilon,
        DEFAULT_SIMPLEX_CAP,
    )?;
    let layers = (1..=net.depth())
        .map(|l| analyse_layer(&net, &points, l, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(PropagationTrial {
        seed,
        epochs_run: report.loss_history.len(),
        train_accuracy: report.accuracy_history.last().copied().unwrap_or(f64::NAN),
        test_accuracy: correct as f64 / test_set.len() as f64,
        excluded_points: excluded,
        analysed_points: points.len(),
        input_betti,
        layers,
    })
}

fn betti_field(b: &[usize], k: usize) -> String {
    b.get(k).copied().unwrap_or(0).to_string()
}

pub fn run(cfg: &PropagationConfig) -> Result<ExperimentOutput> {
    let mut trials = Vec::new();
    let mut rows = Vec::new();
    let mut rank_rows = Vec::new();
    for &seed in &cfg.seeds {
        match run_seed(cfg, seed) {
            Ok(t) => {
                let input = LayerBetti {
                    layer: 0,
                    n_regions: 1,
                    n_classes: 0,
                    knn_betti: t.input_betti.clone(),
                    quotient_betti: t.input_betti.clone(),
                    rank_histogram: Vec::new(),
                };
                for l in std::iter::once(&input).chain(&t.layers) {
                    rows.push(csv_row([
                        seed.to_string(),
                        l.layer.to_string(),
                        l.n_regions.to_string(),
                        l.n_classes.to_string(),
                        betti_field(&l.knn_betti, 0),
                        betti_field(&l.knn_betti, 1),
                        betti_field(&l.quotient_betti, 0),
                        betti_field(&l.quotient_betti, 1),
                        String::new(),
                    ]));
                    for &(rank, count) in &l.rank_histogram {
                        rank_rows.push(csv_row([
                            seed.to_string(),
                            l.layer.to_string(),
                            rank.to_string(),
                            count.to_string(),
                        ]));
                    }
                }
                trials.push(serde_json::to_value(&t)?);
            }
            Err(e) => {
                let mut row = vec![seed.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(e.to_string());
                rows.push(row);
                trials.push(json!({ "seed": seed, "error": e.to_string() }));
            }
        }
    }
    Ok(ExperimentOutput {
        results: json!({
            "ground_truth_betti": cfg.kind.betti(),
            "trials": Value::Array(trials),
        }),
        tables: vec![
            Table::new(
                "propagation.csv",
                &[
                    "seed", "layer", "regions", "overlap_classes", "knn_b0", "knn_b1", "quotient_b0",
                    "quotient_b1", "error",
                ],
                rows,
            ),
            Table::new("propagation_ranks.csv", &["seed", "layer", "rank", "regions"], rank_rows),
        ],
    })
}
