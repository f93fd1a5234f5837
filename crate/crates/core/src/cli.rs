//! Command-line front end. Settings resolve as flags over `--config` JSON over
//! defaults; the resolved settings are embedded in every file written, and
//! `replay` re-runs a command from them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::datasets::{
    gen_concentric_spheres, gen_curve, gen_known_topology, gen_two_class_topology, random_curve_params,
    LabeledDataset, Targets, TopologyKind,
};
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentOutput};
use crate::homology::{
    betti_at_scale, knn_geodesic_metric, metric_homology, quotient_pseudometric, HomologyOptions,
};
use crate::io::{self, PartitionFile, Provenance, ResultBundle};
use crate::linalg::{pairwise_distances, DistanceMatrix, DEFAULT_RANK_TOL};
use crate::lp::DEFAULT_FEASIBILITY_TOL;
use crate::network::Mlp;
use crate::overlap::{overlap_decomposition_with, OverlapOptions};
use crate::polyhedra::{points_per_region_histogram, populate_decomposition, BoundingBox, DEFAULT_BOX_HALF_WIDTH};
use crate::rankdecomp::rank_profile;
use crate::train::{train, Loss, Optimizer, StopCriterion, TrainConfig};

/// Environment variable naming the directory for outputs written without `--out`.
pub const OUT_DIR_ENV: &str = "RELU_OVERLAP_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "relu-overlap", version, about = "Overlap decompositions and quotient homology of ReLU networks")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a dataset CSV.
    GenData(GenDataArgs),
    /// Train a network on a dataset and write its weights.
    Train(TrainArgs),
    /// Populated polyhedral decomposition with region ranks.
    Decompose(DecomposeArgs),
    /// Overlap decomposition of a dataset under a network.
    Overlap(OverlapArgs),
    /// Rips barcode of a dataset, optionally quotiented by a partition.
    Homology(HomologyArgs),
    /// Run an experiment pipeline into an output directory.
    Experiment(ExperimentArgs),
    /// Re-run the command recorded in a result file.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON file with settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub common: Common,
    /// curve | spheres | topology | two-class-topology
    #[arg(long)]
    pub generator: Option<Generator>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub kind: Option<TopologyKind>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// curves | spheres | propagation
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub init: Option<Init>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub loss: Option<Loss>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, conflicts_with = "stop_accuracy")]
    pub stop_loss: Option<f64>,
    #[arg(long)]
    pub stop_accuracy: Option<f64>,
    #[arg(long)]
    pub optimizer: Option<Optimizer>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// 1-based layer; defaults to the last.
    #[arg(long)]
    pub layer: Option<usize>,
    /// Half-width of the bounding box.
    #[arg(long)]
    pub bbox: Option<f64>,
    #[arg(long)]
    pub rank_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct OverlapArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub layer: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub bbox: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Only count a point as a member of the region its codeword names.
    #[arg(long)]
    pub strict_membership: bool,
}

#[derive(Args, Debug)]
pub struct HomologyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, conflicts_with = "knn")]
    pub partition_file: Option<PathBuf>,
    #[arg(long)]
    pub knn: Option<usize>,
    #[arg(long)]
    pub max_dim: Option<usize>,
    #[arg(long)]
    pub max_scale: Option<f64>,
    /// Scale at which Betti numbers are reported.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: Common,
    /// curves | propagation | spheres | expressivity-sweep
    pub name: ExperimentName,
    /// Seeds, e.g. `0,1,2` or `0..10`.
    #[arg(long)]
    pub seeds: Option<String>,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Any file written by this tool (for experiments, their results.json).
    pub file: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Curve,
    Spheres,
    Topology,
    TwoClassTopology,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Curves,
    Spheres,
    Propagation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    Kaiming,
    Orthogonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Curves,
    Propagation,
    Spheres,
    ExpressivitySweep,
}

impl ExperimentName {
    fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Curves => "curves",
            ExperimentName::Propagation => "propagation",
            ExperimentName::Spheres => "spheres",
            ExperimentName::ExpressivitySweep => "expressivity-sweep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataConfig {
    pub generator: Generator,
    /// Points (curve, topology), points per sphere, or points per class.
    pub n: usize,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub d: usize,
    pub kind: TopologyKind,
    pub noise: f64,
    pub scale: f64,
    pub seed: u64,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        Self {
            generator: Generator::Curve,
            n: 500,
            a: None,
            b: None,
            d: 1,
            kind: TopologyKind::Circle,
            noise: 0.0,
            scale: 3.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainCmdConfig {
    pub dataset: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub hidden: Vec<usize>,
    pub init: Init,
    pub seed: u64,
    /// Inferred from the targets when absent.
    pub loss: Option<Loss>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub stop: Option<StopCriterion>,
    pub optimizer: Optimizer,
    pub batch_size: Option<usize>,
}

impl Default for TrainCmdConfig {
    fn default() -> Self {
        Self::from_train(None, vec![50, 50, 50], TrainConfig::curves(0), None)
    }
}

impl TrainCmdConfig {
    fn from_train(preset: Option<Preset>, hidden: Vec<usize>, t: TrainConfig, loss: Option<Loss>) -> Self {
        Self {
            dataset: None,
            preset,
            hidden,
            init: Init::Kaiming,
            seed: 0,
            loss,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            stop: t.stop,
            optimizer: t.optimizer,
            batch_size: t.batch_size,
        }
    }

    pub fn for_preset(p: Preset) -> Self {
        let (hidden, t) = match p {
            Preset::Curves => (vec![50; 3], TrainConfig::curves(0)),
            Preset::Spheres => (vec![25; 4], TrainConfig::spheres(0)),
            Preset::Propagation => (vec![15; 9], TrainConfig::propagation(0)),
        };
        let loss = Some(t.loss);
        Self::from_train(Some(p), hidden, t, loss)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    pub weights: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub layer: Option<usize>,
    pub bbox: f64,
    pub rank_tol: f64,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            weights: None,
            dataset: None,
            layer: None,
            bbox: DEFAULT_BOX_HALF_WIDTH,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapCmdConfig {
    pub weights: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub layer: Option<usize>,
    pub delta: f64,
    pub bbox: f64,
    pub tol: f64,
    pub boundary_membership: bool,
}

impl Default for OverlapCmdConfig {
    fn default() -> Self {
        Self {
            weights: None,
            dataset: None,
            layer: None,
            delta: 1.0,
            bbox: DEFAULT_BOX_HALF_WIDTH,
            tol: DEFAULT_FEASIBILITY_TOL,
            boundary_membership: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomologyCmdConfig {
    pub dataset: Option<PathBuf>,
    pub partition_file: Option<PathBuf>,
    pub knn: Option<usize>,
    pub max_dim: usize,
    /// Filtration cut-off; defaults to `epsilon`, or the full filtration.
    pub max_scale: Option<f64>,
    pub epsilon: Option<f64>,
}

impl Default for HomologyCmdConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            partition_file: None,
            knn: None,
            max_dim: 1,
            max_scale: None,
            epsilon: None,
        }
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let job = || -> Result<()> {
        match cli.command {
            Command::GenData(a) => cmd_gen_data(a),
            Command::Train(a) => cmd_train(a),
            Command::Decompose(a) => cmd_decompose(a),
            Command::Overlap(a) => cmd_overlap(a),
            Command::Homology(a) => cmd_homology(a),
            Command::Experiment(a) => cmd_experiment(a),
            Command::Replay(a) => cmd_replay(a),
        }
    };
    match cli.jobs {
        Some(0) => Err(Error::InvalidArgument("--jobs must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(job),
        None => job(),
    }
}

fn merge(base: &mut Value, over: Value) {
    if let (Value::Object(b), Value::Object(o)) = (&mut *base, over) {
        for (k, v) in o {
            if !v.is_null() {
                b.insert(k, v);
            }
        }
    }
}

fn read_config_file(path: Option<&Path>) -> Result<Value> {
    match path {
        None => Ok(Value::Object(Map::new())),
        Some(p) => {
            let v: Value = serde_json::from_str(&io::read_file(p)?)?;
            if !v.is_object() {
                return Err(Error::InvalidArgument(format!("{} is not a JSON object", p.display())));
            }
            Ok(v)
        }
    }
}

/// `flags` over `file` over `base`.
fn resolve<T: Serialize + DeserializeOwned>(base: &T, file: Value, flags: Value) -> Result<T> {
    let mut v = serde_json::to_value(base)?;
    merge(&mut v, file);
    merge(&mut v, flags);
    serde_json::from_value(v).map_err(|e| Error::InvalidArgument(format!("bad settings: {e}")))
}

fn out_path(out: Option<PathBuf>, default_name: &str) -> PathBuf {
    out.unwrap_or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
            .join(default_name)
    })
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("missing --{what}")))
}

fn provenance<T: Serialize>(command: &str, cfg: &T) -> Result<Provenance> {
    Ok(Provenance {
        command: command.into(),
        config: serde_json::to_value(cfg)?,
    })
}

fn report(what: &str, path: &Path, start: Instant) {
    eprintln!("{what} -> {} ({:.2}s)", path.display(), start.elapsed().as_secs_f64());
}

fn cmd_gen_data(a: GenDataArgs) -> Result<()> {
    let flags = json!({
        "generator": a.generator, "n": a.n, "a": a.a, "b": a.b, "d": a.d, "kind": a.kind,
        "noise": a.noise, "scale": a.scale, "seed": a.seed,
    });
    let cfg = resolve(&GenDataConfig::default(), read_config_file(a.common.config.as_deref())?, flags)?;
    run_gen_data(&cfg, &out_path(a.common.out, "dataset.csv"))
}

pub fn run_gen_data(cfg: &GenDataConfig, out: &Path) -> Result<()> {
    let start = Instant::now();
    let ds = match cfg.generator {
        Generator::Curve => {
            let (ra, rb) = random_curve_params(cfg.seed);
            let mut ds = gen_curve(cfg.a.unwrap_or(ra), cfg.b.unwrap_or(rb), cfg.n)?;
            ds.metadata.seed = Some(cfg.seed);
            ds
        }
        Generator::Spheres => gen_concentric_spheres(cfg.d, cfg.n, cfg.seed)?,
        Generator::Topology => gen_known_topology(cfg.kind, cfg.n, cfg.noise, cfg.seed)?,
        Generator::TwoClassTopology => gen_two_class_topology(cfg.kind, cfg.n, cfg.noise, cfg.scale, cfg.seed)?,
    };
    io::save_dataset(out, &ds, Some(&provenance("gen-data", cfg)?))?;
    report("dataset", out, start);
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let file = read_config_file(a.common.config.as_deref())?;
    let preset = match a.preset {
        Some(p) => Some(p),
        None => match file.get("preset") {
            Some(v) if !v.is_null() => Some(
                serde_json::from_value(v.clone()).map_err(|e| Error::InvalidArgument(format!("bad preset: {e}")))?,
            ),
            _ => None,
        },
    };
    let base = preset.map_or_else(TrainCmdConfig::default, TrainCmdConfig::for_preset);
    let stop = match (a.stop_loss, a.stop_accuracy) {
        (Some(l), _) => serde_json::to_value(StopCriterion::LossBelow(l))?,
        (_, Some(acc)) => serde_json::to_value(StopCriterion::AccuracyAbove(acc))?,
        _ => Value::Null,
    };
    let flags = json!({
        "dataset": a.dataset, "preset": a.preset, "hidden": a.hidden, "init": a.init, "seed": a.seed,
        "loss": a.loss, "learning_rate": a.learning_rate, "epochs": a.epochs, "stop": stop,
        "optimizer": a.optimizer, "batch_size": a.batch_size,
    });
    let cfg = resolve(&base, file, flags)?;
    run_train(cfg, &out_path(a.common.out, "weights.json"))
}

fn output_dim(targets: &Targets) -> Result<usize> {
    match targets {
        Targets::Values(v) => Ok(v.first().map_or(0, Vec::len)),
        Targets::Labels(l) => Ok(l.iter().max().map_or(0, |m| m + 1).max(2)),
    }
}

pub fn run_train(mut cfg: TrainCmdConfig, out: &Path) -> Result<()> {
    let start = Instant::now();
    let ds = io::load_dataset(required(&cfg.dataset, "dataset")?)?;
    let loss = *cfg.loss.get_or_insert(match ds.targets {
        Targets::Values(_) => Loss::MeanSquaredError,
        Targets::Labels(_) => Loss::CrossEntropy,
    });
    let mut shape = vec![ds.dim()];
    shape.extend(&cfg.hidden);
    shape.push(output_dim(&ds.targets)?);
    let init = match cfg.init {
        Init::Kaiming => Mlp::init_kaiming(&shape, cfg.seed)?,
        Init::Orthogonal => Mlp::init_orthogonal(&shape, cfg.seed)?,
    };
    let tc = TrainConfig {
        loss,
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        stop: cfg.stop,
        seed: cfg.seed,
        optimizer: cfg.optimizer,
        batch_size: cfg.batch_size,
    };
    let (net, rep) = train(&init, &ds.inputs, &ds.targets, &tc)?;
    let meta = json!({
        "provenance": provenance("train", &cfg)?,
        "loss_history": rep.loss_history,
        "accuracy_history": rep.accuracy_history,
        "stopped_early": rep.stopped_early,
    });
    io::save_weights(out, &net, &meta)?;
    report("weights", out, start);
    Ok(())
}

fn cmd_decompose(a: DecomposeArgs) -> Result<()> {
    let flags = json!({
        "weights": a.weights, "dataset": a.dataset, "layer": a.layer, "bbox": a.bbox, "rank_tol": a.rank_tol,
    });
    let cfg = resolve(&DecomposeConfig::default(), read_config_file(a.common.config.as_deref())?, flags)?;
    run_decompose(&cfg, &out_path(a.common.out, "regions.json"))
}

fn load_net_and_data(weights: &Option<PathBuf>, dataset: &Option<PathBuf>) -> Result<(Mlp, LabeledDataset)> {
    let (net, _) = io::load_weights(required(weights, "weights")?)?;
    let ds = io::load_dataset(required(dataset, "dataset")?)?;
    Ok((net, ds))
}

pub fn run_decompose(cfg: &DecomposeConfig, out: &Path) -> Result<()> {
    let start = Instant::now();
    let (net, ds) = load_net_and_data(&cfg.weights, &cfg.dataset)?;
    let layer = cfg.layer.unwrap_or(net.depth());
    let bbox = BoundingBox::symmetric(net.input_dim(), cfg.bbox)?;
    let decomp = populate_decomposition(&net, &ds.inputs, layer, &bbox)?;
    let ranks = rank_profile(&net, &decomp, cfg.rank_tol)?;
    let regions: Vec<Value> = decomp
        .regions()
        .iter()
        .map(|r| {
            json!({
                "codeword": r.codeword,
                "points": r.points.len(),
                "rank": ranks.ranks[&r.codeword],
            })
        })
        .collect();
    let results = json!({
        "layer": layer,
        "n_regions": decomp.len(),
        "occupancy": points_per_region_histogram(&decomp),
        "rank_histogram": ranks.histogram.iter().map(|(r, c)| json!([r, c])).collect::<Vec<_>>(),
        "regions": regions,
    });
    io::write_file(out, &ResultBundle::new(provenance("decompose", cfg)?, results).to_json()?)?;
    report("regions", out, start);
    Ok(())
}

fn cmd_overlap(a: OverlapArgs) -> Result<()> {
    let flags = json!({
        "weights": a.weights, "dataset": a.dataset, "layer": a.layer, "delta": a.delta, "bbox": a.bbox,
        "tol": a.tol, "boundary_membership": if a.strict_membership { Some(false) } else { None },
    });
    let cfg = resolve(&OverlapCmdConfig::default(), read_config_file(a.common.config.as_deref())?, flags)?;
    run_overlap(&cfg, &out_path(a.common.out, "partition.json"))
}

pub fn run_overlap(cfg: &OverlapCmdConfig, out: &Path) -> Result<()> {
    let start = Instant::now();
    let (net, ds) = load_net_and_data(&cfg.weights, &cfg.dataset)?;
    let layer = cfg.layer.unwrap_or(net.depth());
    let bbox = BoundingBox::symmetric(net.input_dim(), cfg.bbox)?;
    let decomp = populate_decomposition(&net, &ds.inputs, layer, &bbox)?;
    let opts = OverlapOptions {
        delta: cfg.delta,
        tol: cfg.tol,
        boundary_membership: cfg.boundary_membership,
    };
    let od = overlap_decomposition_with(&net, &ds.inputs, &decomp, &opts)?;
    let file = PartitionFile::new(&od, ds.len(), layer, Some(provenance("overlap", cfg)?));
    io::write_file(out, &file.to_json()?)?;
    report("partition", out, start);
    Ok(())
}

fn cmd_homology(a: HomologyArgs) -> Result<()> {
    let flags = json!({
        "dataset": a.dataset, "partition_file": a.partition_file, "knn": a.knn, "max_dim": a.max_dim,
        "max_scale": a.max_scale, "epsilon": a.epsilon,
    });
    let cfg = resolve(&HomologyCmdConfig::default(), read_config_file(a.common.config.as_deref())?, flags)?;
    run_homology(&cfg, &out_path(a.common.out, "barcode.csv"))
}

pub fn run_homology(cfg: &HomologyCmdConfig, out: &Path) -> Result<()> {
    let start = Instant::now();
    if cfg.partition_file.is_some() && cfg.knn.is_some() {
        return Err(Error::InvalidArgument("choose either a partition file or k-NN distances".into()));
    }
    let ds = io::load_dataset(required(&cfg.dataset, "dataset")?)?;
    let (d, metric): (DistanceMatrix, Value) = match (&cfg.partition_file, cfg.knn) {
        (Some(p), _) => {
            let part = PartitionFile::from_json(&io::read_file(p)?)?;
            if part.num_points != ds.len() {
                return Err(Error::dims("partition size", ds.len(), part.num_points));
            }
            (quotient_pseudometric(&ds.inputs, &part.decomposition()?)?, json!("quotient"))
        }
        (None, Some(k)) => (knn_geodesic_metric(&ds.inputs, k)?, json!(format!("knn-geodesic-{k}"))),
        (None, None) => (pairwise_distances(&ds.inputs)?, json!("euclidean")),
    };
    let max_scale = cfg.max_scale.or(cfg.epsilon).unwrap_or(f64::INFINITY);
    let opts = HomologyOptions {
        clearing: true,
        ..HomologyOptions::new(cfg.max_dim, max_scale)
    };
    let b = metric_homology(&d, &opts)?;
    let mut extra = vec![("metric", metric)];
    if let Some(eps) = cfg.epsilon {
        extra.push(("epsilon", json!(eps)));
        extra.push(("betti", json!(betti_at_scale(&b, eps))));
    }
    io::write_file(out, &io::barcode_to_string(&b, &extra, Some(&provenance("homology", cfg)?))?)?;
    report("barcode", out, start);
    Ok(())
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidArgument(format!("bad seed list {s:?}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        return Ok((lo..hi).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let mut flags = Map::new();
    if let Some(s) = &a.seeds {
        flags.insert("seeds".into(), json!(parse_seeds(s)?));
    }
    let file = read_config_file(a.common.config.as_deref())?;
    let flags = Value::Object(flags);
    let config = match a.name {
        ExperimentName::Curves => {
            serde_json::to_value(resolve(&experiments::curves::CurvesConfig::default(), file, flags)?)?
        }
        ExperimentName::Spheres => {
            serde_json::to_value(resolve(&experiments::spheres::SpheresConfig::default(), file, flags)?)?
        }
        ExperimentName::Propagation => serde_json::to_value(resolve(
            &experiments::propagation::PropagationConfig::default(),
            file,
            flags,
        )?)?,
        ExperimentName::ExpressivitySweep => {
            serde_json::to_value(resolve(&experiments::sweep::SweepConfig::default(), file, flags)?)?
        }
    };
    run_experiment(a.name, config, &out_path(a.common.out, a.name.as_str()))
}

fn from_config<T: DeserializeOwned>(config: Value) -> Result<T> {
    serde_json::from_value(config).map_err(|e| Error::InvalidArgument(format!("bad experiment settings: {e}")))
}

/// Runs an experiment with a fully resolved configuration into directory `out`.
pub fn run_experiment(name: ExperimentName, config: Value, out: &Path) -> Result<()> {
    let start = Instant::now();
    let output: ExperimentOutput = match name {
        ExperimentName::Curves => experiments::curves::run(&from_config(config.clone())?)?,
        ExperimentName::Spheres => experiments::spheres::run(&from_config(config.clone())?)?,
        ExperimentName::Propagation => experiments::propagation::run(&from_config(config.clone())?)?,
        ExperimentName::ExpressivitySweep => experiments::sweep::run(&from_config(config.clone())?)?,
    };
    let prov = Provenance {
        command: "experiment".into(),
        config: json!({ "name": name, "config": config }),
    };
    let mut results = output.results;
    results["tables"] = json!(output.tables.iter().map(|t| t.file_name.clone()).collect::<Vec<_>>());
    std::fs::create_dir_all(out)?;
    for t in &output.tables {
        io::write_file(&out.join(&t.file_name), &t.to_csv())?;
    }
    io::write_file(&out.join("results.json"), &ResultBundle::new(prov, results).to_json()?)?;
    let timings = json!({ "total_seconds": start.elapsed().as_secs_f64() });
    io::write_file(&out.join("timings.json"), &serde_json::to_string_pretty(&timings)?)?;
    report(name.as_str(), out, start);
    Ok(())
}

fn from_provenance<T: DeserializeOwned>(p: &Provenance) -> Result<T> {
    serde_json::from_value(p.config.clone())
        .map_err(|e| Error::Parse(format!("recorded {} settings are unreadable: {e}", p.command)))
}

fn cmd_replay(a: ReplayArgs) -> Result<()> {
    let contents = io::read_file(&a.file)?;
    let p = io::read_provenance(&contents)?
        .ok_or_else(|| Error::Parse(format!("{} carries no provenance record", a.file.display())))?;
    match p.command.as_str() {
        "gen-data" => run_gen_data(&from_provenance(&p)?, &out_path(a.out, "dataset.csv")),
        "train" => run_train(from_provenance(&p)?, &out_path(a.out, "weights.json")),
        "decompose" => run_decompose(&from_provenance(&p)?, &out_path(a.out, "regions.json")),
        "overlap" => run_overlap(&from_provenance(&p)?, &out_path(a.out, "partition.json")),
        "homology" => run_homology(&from_provenance(&p)?, &out_path(a.out, "barcode.csv")),
        "experiment" => {
            let name: ExperimentName = serde_json::from_value(p.config["name"].clone())
                .map_err(|e| Error::Parse(format!("recorded experiment name is unreadable: {e}")))?;
            run_experiment(name, p.config["config"].clone(), &out_path(a.out, name.as_str()))
        }
        other => Err(Error::Parse(format!("unknown recorded command {other:?}"))),
    }
}
