//! Non-linear curve regression: persistent vs quotient homology of the
//! learned curve.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::datasets::{gen_curve, random_curve_params, LabeledDataset};
use crate::error::Result;
use crate::homology::{quotient_pseudometric, Barcode};
use crate::linalg::{euclidean, pairwise_distances};
use crate::network::Mlp;
use crate::overlap::{overlap_decomposition_with, OverlapDecomposition, OverlapOptions};
use crate::polyhedra::{populate_decomposition, BoundingBox, PopulatedDecomposition};
use crate::train::{train, TrainConfig};

use super::{barcode_and_betti, csv_row, ExperimentOutput, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurvesConfig {
    pub seeds: Vec<u64>,
    /// Fixed curve parameters; drawn per seed from `U[-1, 1]` when absent.
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub n_points: usize,
    pub width: usize,
    pub depth: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub delta: f64,
    pub bbox: f64,
    pub max_dim: usize,
    /// Scale at which Betti numbers of the network outputs are read.
    pub output_epsilon: f64,
    /// Scale at which Betti numbers of the quotient are read.
    pub quotient_epsilon: f64,
}

impl Default for CurvesConfig {
    fn default() -> Self {
        let t = TrainConfig::curves(0);
        Self {
            seeds: (0..20).collect(),
            a: None,
            b: None,
            n_points: 500,
            width: 50,
            depth: 3,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            delta: 1.0,
            bbox: 100.0,
            max_dim: 1,
            output_epsilon: 0.1,
            quotient_epsilon: 0.05,
        }
    }
}

impl CurvesConfig {
    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![2];
        s.extend(std::iter::repeat_n(self.width, self.depth));
        s.push(2);
        s
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            ..TrainConfig::curves(seed)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTrial {
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    pub final_loss: f64,
    pub epochs_run: usize,
    pub n_regions: usize,
    pub class_sizes: Vec<usize>,
    /// Output-space distance between the images of the two interval ends.
    pub end_gap: f64,
    pub ends_glued: bool,
    pub persistent_betti: Vec<usize>,
    pub quotient_betti: Vec<usize>,
}

/// Everything computed for one seed.
pub struct CurveRun {
    pub trial: CurveTrial,
    pub dataset: LabeledDataset,
    pub net: Mlp,
    pub decomp: PopulatedDecomposition,
    pub od: OverlapDecomposition,
    pub outputs: Vec<Vec<f64>>,
    /// Absent when the filtration exceeded the simplex cap.
    pub persistent: Option<Barcode>,
    pub quotient: Option<Barcode>,
}

pub fn run_seed(cfg: &CurvesConfig, seed: u64) -> Result<CurveRun> {
    let (ra, rb) = random_curve_params(seed);
    let (a, b) = (cfg.a.unwrap_or(ra), cfg.b.unwrap_or(rb));
    let dataset = gen_curve(a, b, cfg.n_points)?;
    let init = Mlp::init_kaiming(&cfg.shape(), seed)?;
    let (net, report) = train(&init, &dataset.inputs, &dataset.targets, &cfg.train_config(seed))?;
    let layer = net.depth();
    let outputs = dataset
        .inputs
        .iter()
        .map(|x| net.output(x))
        .collect::<Result<Vec<_>>>()?;
    let bbox = BoundingBox::symmetric(2, cfg.bbox)?;
    let decomp = populate_decomposition(&net, &dataset.inputs, layer, &bbox)?;
    let od = overlap_decomposition_with(&net, &dataset.inputs, &decomp, &OverlapOptions::with_delta(cfg.delta))?;
    let (persistent, persistent_betti) =
        barcode_and_betti(&pairwise_distances(&outputs)?, cfg.max_dim, cfg.output_epsilon)?;
    let (quotient, quotient_betti) = barcode_and_betti(
        &quotient_pseudometric(&dataset.inputs, &od)?,
        cfg.max_dim,
        cfg.quotient_epsilon,
    )?;
    let last = outputs.len() - 1;
    let labels = od.labels(outputs.len());
    let trial = CurveTrial {
        seed,
        a,
        b,
        final_loss: report.loss_history.last().copied().unwrap_or(f64::NAN),
        epochs_run: report.loss_history.len(),
        n_regions: decomp.len(),
        class_sizes: od.classes().iter().map(|c| c.points.len()).collect(),
        end_gap: euclidean(&outputs[0], &outputs[last]),
        ends_glued: labels[0] == labels[last],
        persistent_betti,
        quotient_betti,
    };
    Ok(CurveRun {
        trial,
        dataset,
        net,
        decomp,
        od,
        outputs,
        persistent,
        quotient,
    })
}

pub fn run(cfg: &CurvesConfig) -> Result<ExperimentOutput> {
    let mut trials = Vec::new();
    let mut rows = Vec::new();
    let mut bars = Vec::new();
    for &seed in &cfg.seeds {
        match run_seed(cfg, seed) {
            Ok(r) => {
                let t = &r.trial;
                rows.push(csv_row([
                    seed.to_string(),
                    t.a.to_string(),
                    t.b.to_string(),
                    t.final_loss.to_string(),
                    t.epochs_run.to_string(),
                    t.n_regions.to_string(),
                    t.class_sizes.len().to_string(),
                    t.end_gap.to_string(),
                    t.ends_glued.to_string(),
                    t.persistent_betti.get(1).copied().unwrap_or(0).to_string(),
                    t.quotient_betti.get(1).copied().unwrap_or(0).to_string(),
                    String::new(),
                ]));
                for (kind, b) in [("persistent", &r.persistent), ("quotient", &r.quotient)] {
                    for (k, birth, death) in b.iter().flat_map(Barcode::flat) {
                        bars.push(csv_row([
                            seed.to_string(),
                            kind.to_string(),
                            k.to_string(),
                            birth.to_string(),
                            super::fmt_death(death),
                        ]));
                    }
                }
                trials.push(serde_json::to_value(&r.trial)?);
            }
            Err(e) => {
                rows.push(csv_row([
                    seed.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.to_string(),
                ]));
                trials.push(json!({ "seed": seed, "error": e.to_string() }));
            }
        }
    }
    Ok(ExperimentOutput {
        results: json!({ "trials": Value::Array(trials) }),
        tables: vec![
            Table::new(
                "curves.csv",
                &[
                    "seed", "a", "b", "final_loss", "epochs", "regions", "overlap_classes", "end_gap",
                    "ends_glued", "persistent_b1", "quotient_b1", "error",
                ],
                rows,
            ),
            Table::new("curves_barcodes.csv", &["seed", "kind", "dim", "birth", "death"], bars),
        ],
    })
}
