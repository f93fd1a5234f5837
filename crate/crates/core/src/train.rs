//! Gradient training of [`Mlp`] networks with mean-squared-error or
//! softmax cross-entropy loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Targets;
use crate::error::{Error, Result};
use crate::linalg::{AffineMap, Matrix};
use crate::network::Mlp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    MeanSquaredError,
    CrossEntropy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    PlainGradientDescent,
    AdaptiveMoment,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopCriterion {
    LossBelow(f64),
    AccuracyAbove(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: Loss,
    pub learning_rate: f64,
    pub epochs: usize,
    pub stop: Option<StopCriterion>,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// `None` trains full-batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
}

impl TrainConfig {
    /// Non-linear curve regression: MSE, lr 1e-4, 1000 epochs, stop at MSE < 2e-5.
    pub fn curves(seed: u64) -> Self {
        Self {
            loss: Loss::MeanSquaredError,
            learning_rate: 1e-4,
            epochs: 1000,
            stop: Some(StopCriterion::LossBelow(2e-5)),
            seed,
            optimizer: Optimizer::AdaptiveMoment,
            batch_size: None,
        }
    }

    /// Concentric spheres classification: cross-entropy, lr 2e-5, 1000 epochs,
    /// minibatches of 32 (full-batch steps at this rate barely move the loss).
    pub fn spheres(seed: u64) -> Self {
        Self {
            loss: Loss::CrossEntropy,
            learning_rate: 2e-5,
            epochs: 1000,
            stop: None,
            seed,
            optimizer: Optimizer::AdaptiveMoment,
            batch_size: Some(32),
        }
    }

    /// Manifold propagation classification: cross-entropy, lr 2e-5, 5000
    /// epochs, stop at training accuracy > 0.999.
    pub fn propagation(seed: u64) -> Self {
        Self {
            loss: Loss::CrossEntropy,
            learning_rate: 2e-5,
            epochs: 5000,
            stop: Some(StopCriterion::AccuracyAbove(0.999)),
            seed,
            optimizer: Optimizer::AdaptiveMoment,
            batch_size: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be positive".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Training loss of each epoch, measured before that epoch's updates.
    pub loss_history: Vec<f64>,
    /// Training accuracy per epoch (cross-entropy only).
    pub accuracy_history: Vec<f64>,
    pub stopped_early: bool,
}

struct Params {
    w: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    shape: Vec<usize>,
}

impl Params {
    fn from_net(net: &Mlp) -> Self {
        Self {
            w: net.layers().iter().map(|l| l.linear().data().to_vec()).collect(),
            b: net.layers().iter().map(|l| l.offset().to_vec()).collect(),
            shape: net.shape(),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            w: self.w.iter().map(|v| vec![0.0; v.len()]).collect(),
            b: self.b.iter().map(|v| vec![0.0; v.len()]).collect(),
            shape: self.shape.clone(),
        }
    }

    fn into_net(self) -> Result<Mlp> {
        let layers = self
            .w
            .into_iter()
            .zip(self.b)
            .enumerate()
            .map(|(k, (w, b))| AffineMap::new(Matrix::new(self.shape[k + 1], self.shape[k], w)?, b))
            .collect::<Result<Vec<_>>>()?;
        Mlp::new(layers)
    }

    fn slices_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w.iter_mut().flatten().chain(self.b.iter_mut().flatten())
    }
}

enum Target<'a> {
    Values(&'a [Vec<f64>]),
    Labels(Vec<usize>),
}

/// Trains a copy of `net`; returns the trained network and its loss history.
pub fn train(
    net: &Mlp,
    inputs: &[Vec<f64>],
    targets: &Targets,
    cfg: &TrainConfig,
) -> Result<(Mlp, TrainReport)> {
    cfg.validate()?;
    let n = inputs.len();
    if n == 0 {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if let Some(bad) = inputs.iter().find(|x| x.len() != net.input_dim()) {
        return Err(Error::dims("training input", net.input_dim(), bad.len()));
    }
    let out_dim = net.output_dim();
    let target = match (cfg.loss, targets) {
        (_, t) if t.len() != n => return Err(Error::dims("training targets", n, t.len())),
        (Loss::MeanSquaredError, Targets::Values(v)) => {
            if let Some(bad) = v.iter().find(|t| t.len() != out_dim) {
                return Err(Error::dims("regression target", out_dim, bad.len()));
            }
            Target::Values(v)
        }
        (Loss::MeanSquaredError, Targets::Labels(_)) => {
            return Err(Error::InvalidArgument(
                "mean-squared-error needs real-valued targets".into(),
            ))
        }
        (Loss::CrossEntropy, Targets::Labels(l)) => Target::Labels(l.clone()),
        (Loss::CrossEntropy, Targets::Values(v)) => Target::Labels(
            v.iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .max_by(|a, b| a.1.total_cmp(b.1))
                        .map_or(0, |(i, _)| i)
                })
                .collect(),
        ),
    };
    if let Target::Labels(l) = &target {
        if let Some(&bad) = l.iter().find(|&&c| c >= out_dim) {
            return Err(Error::InvalidArgument(format!(
                "class label {bad} out of range for {out_dim} outputs"
            )));
        }
    }

    let mut params = Params::from_net(net);
    let mut grads = params.zeros_like();
    let mut m1 = params.zeros_like();
    let mut m2 = params.zeros_like();
    let mut step = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batch = cfg.batch_size.unwrap_or(n).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut report = TrainReport {
        loss_history: Vec::with_capacity(cfg.epochs),
        accuracy_history: Vec::new(),
        stopped_early: false,
    };

    for epoch in 0..cfg.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        let mut epoch_correct = 0usize;
        for chunk in order.chunks(batch) {
            let (loss, correct) = batch_gradient(&params, inputs, &target, chunk, &mut grads);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            epoch_loss += loss * chunk.len() as f64;
            epoch_correct += correct;
            // Full batch defers the update until the stop check has run.
            if batch < n {
                apply_update(cfg, &mut params, &grads, &mut m1, &mut m2, &mut step);
            }
        }
        let loss = epoch_loss / n as f64;
        let accuracy = epoch_correct as f64 / n as f64;
        report.loss_history.push(loss);
        if matches!(target, Target::Labels(_)) {
            report.accuracy_history.push(accuracy);
        }
        let stop = match cfg.stop {
            Some(StopCriterion::LossBelow(t)) => loss < t,
            Some(StopCriterion::AccuracyAbove(t)) => accuracy > t,
            None => false,
        };
        if stop {
            report.stopped_early = true;
            break;
        }
        if batch == n {
            apply_update(cfg, &mut params, &grads, &mut m1, &mut m2, &mut step);
        }
    }
    Ok((params.into_net()?, report))
}

fn apply_update(
    cfg: &TrainConfig,
    params: &mut Params,
    grads: &Params,
    m1: &mut Params,
    m2: &mut Params,
    step: &mut u64,
) {
    *step += 1;
    let lr = cfg.learning_rate;
    let g: Vec<f64> = grads.w.iter().flatten().chain(grads.b.iter().flatten()).copied().collect();
    match cfg.optimizer {
        Optimizer::PlainGradientDescent => {
            for (p, gi) in params.slices_mut().zip(&g) {
                *p -= lr * gi;
            }
        }
        Optimizer::AdaptiveMoment => {
            const BETA1: f64 = 0.9;
            const BETA2: f64 = 0.999;
            const EPS: f64 = 1e-8;
            let bc1 = 1.0 - BETA1.powi(*step as i32);
            let bc2 = 1.0 - BETA2.powi(*step as i32);
            for (((p, gi), a), v) in params
                .slices_mut()
                .zip(&g)
                .zip(m1.slices_mut())
                .zip(m2.slices_mut())
            {
                *a = BETA1 * *a + (1.0 - BETA1) * gi;
                *v = BETA2 * *v + (1.0 - BETA2) * gi * gi;
                *p -= lr * (*a / bc1) / ((*v / bc2).sqrt() + EPS);
            }
        }
    }
}

/// Forward and backward pass over the rows `idx`; writes gradients of the
/// mean batch loss into `grads` and returns (loss, number correct).
fn batch_gradient(
    params: &Params,
    inputs: &[Vec<f64>],
    target: &Target<'_>,
    idx: &[usize],
    grads: &mut Params,
) -> (f64, usize) {
    let shape = &params.shape;
    let depth = shape.len() - 1;
    let bsz = idx.len();

    // acts[0] is the input batch; acts[k] is the representation of layer k.
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(depth + 1);
    let mut x0 = Vec::with_capacity(bsz * shape[0]);
    for &i in idx {
        x0.extend_from_slice(&inputs[i]);
    }
    acts.push(x0);
    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(depth);
    for k in 0..depth {
        let (nin, nout) = (shape[k], shape[k + 1]);
        let w = &params.w[k];
        let b = &params.b[k];
        let a = &acts[k];
        let mut z = vec![0.0; bsz * nout];
        for r in 0..bsz {
            let ar = &a[r * nin..(r + 1) * nin];
            for i in 0..nout {
                z[r * nout + i] = b[i] + crate::linalg::dot(&w[i * nin..(i + 1) * nin], ar);
            }
        }
        let act = if k + 1 == depth {
            z.clone()
        } else {
            z.iter().map(|&v| v.max(0.0)).collect()
        };
        pre.push(z);
        acts.push(act);
    }

    let out_dim = shape[depth];
    let y = &acts[depth];
    let mut g = vec![0.0; bsz * out_dim];
    let mut loss = 0.0;
    let mut correct = 0;
    match target {
        Target::Values(t) => {
            let scale = 1.0 / (bsz * out_dim) as f64;
            for (r, &i) in idx.iter().enumerate() {
                for c in 0..out_dim {
                    let diff = y[r * out_dim + c] - t[i][c];
                    loss += diff * diff * scale;
                    g[r * out_dim + c] = 2.0 * diff * scale;
                }
            }
        }
        Target::Labels(l) => {
            let scale = 1.0 / bsz as f64;
            for (r, &i) in idx.iter().enumerate() {
                let logits = &y[r * out_dim..(r + 1) * out_dim];
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = logits.iter().map(|v| (v - max).exp()).sum();
                let lse = max + sum.ln();
                loss += (lse - logits[l[i]]) * scale;
                let argmax = logits
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map_or(0, |(c, _)| c);
                if argmax == l[i] {
                    correct += 1;
                }
                for c in 0..out_dim {
                    let p = (logits[c] - lse).exp();
                    let onehot = if c == l[i] { 1.0 } else { 0.0 };
                    g[r * out_dim + c] = (p - onehot) * scale;
                }
            }
        }
    }

    for k in (0..depth).rev() {
        let (nin, nout) = (shape[k], shape[k + 1]);
        let a = &acts[k];
        let dw = &mut grads.w[k];
        let db = &mut grads.b[k];
        dw.iter_mut().for_each(|v| *v = 0.0);
        db.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..bsz {
            let ar = &a[r * nin..(r + 1) * nin];
            for i in 0..nout {
                let gi = g[r * nout + i];
                if gi == 0.0 {
                    continue;
                }
                db[i] += gi;
                for (d, &av) in dw[i * nin..(i + 1) * nin].iter_mut().zip(ar) {
                    *d += gi * av;
                }
            }
        }
        if k == 0 {
            break;
        }
        let w = &params.w[k];
        let zprev = &pre[k - 1];
        let mut gprev = vec![0.0; bsz * nin];
        for r in 0..bsz {
            let gp = &mut gprev[r * nin..(r + 1) * nin];
            for i in 0..nout {
                let gi = g[r * nout + i];
                if gi == 0.0 {
                    continue;
                }
                for (d, &wv) in gp.iter_mut().zip(&w[i * nin..(i + 1) * nin]) {
                    *d += gi * wv;
                }
            }
            for (d, &z) in gp.iter_mut().zip(&zprev[r * nin..(r + 1) * nin]) {
                if z <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        g = gprev;
    }
    (loss, correct)
}
