//! Mini-batch training with Adam, KL warm-up and early stopping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{BatchInput, Cvae, CvaeError};
use crate::numcore::{adam_step, clip_global_norm, Graph, OptimizerState, Scalar, Tensor};

/// An encoded molecule (terminator included) and its condition vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub indices: Vec<usize>,
    pub condition: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_size: usize,
    pub seed: u64,
    /// Learning rate at epoch 0; multiplied by `lr_decay` every epoch.
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub clip_norm: f64,
    pub patience: u32,
    pub min_delta: f64,
    /// Batches per length-sorted bucket.
    pub bucket_span: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 64,
            seed: 0,
            learning_rate: 1e-4,
            lr_decay: 0.97,
            clip_norm: 5.0,
            patience: 5,
            min_delta: 1e-3,
            bucket_span: 16,
        }
    }
}

impl TrainConfig {
    pub fn lr_at(&self, epoch: u32) -> f64 {
        self.learning_rate * self.lr_decay.powi(epoch as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: u32,
    pub train_recon: f64,
    pub train_kl: f64,
    pub train_total: f64,
    pub val_recon: f64,
    pub val_kl: f64,
    pub val_total: f64,
    /// Smallest batch KL seen in the epoch.
    pub kl_min: f64,
    pub learning_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub epoch: u32,
    pub step: u64,
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
    pub kl_weight: f64,
}

/// Progress hooks. `epoch` returning `false` ends training after that epoch.
pub trait TrainObserver<T: Scalar> {
    fn batch(&mut self, _stats: &BatchStats) {}

    fn epoch(&mut self, _model: &Cvae<T>, _loss: &EpochLoss) -> bool {
        true
    }
}

impl<T: Scalar> TrainObserver<T> for () {}

/// Observer that forwards batch statistics to a closure.
pub struct OnBatch<F>(pub F);

impl<T: Scalar, F: FnMut(&BatchStats)> TrainObserver<T> for OnBatch<F> {
    fn batch(&mut self, stats: &BatchStats) {
        (self.0)(stats)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    pub epochs_run: u32,
    pub stopped_early: bool,
    pub best_epoch: Option<u32>,
    pub history: Vec<EpochLoss>,
}

/// Shuffled batches whose members have similar lengths: indices are
/// shuffled, cut into buckets of `span` batches, sorted by length inside each
/// bucket, split, and the batch order shuffled again.
pub fn bucketed_batches(lengths: &[usize], batch_size: usize, span: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.shuffle(rng);
    let mut batches = Vec::new();
    for bucket in order.chunks_mut(batch_size * span.max(1)) {
        bucket.sort_by_key(|&i| lengths[i]);
        batches.extend(bucket.chunks(batch_size).map(<[usize]>::to_vec));
    }
    batches.shuffle(rng);
    batches
}

fn batch_input<T: Scalar>(model: &Cvae<T>, examples: &[Example], members: &[usize]) -> BatchInput<T> {
    let seqs: Vec<&[usize]> = members.iter().map(|&i| examples[i].indices.as_slice()).collect();
    let conds: Vec<&[f64]> = members.iter().map(|&i| examples[i].condition.as_slice()).collect();
    BatchInput::new(&seqs, &conds, model.vocab.terminator_index())
}

fn noise<T: Scalar>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor<T> {
    Tensor::from_rows(rows, cols, (0..rows * cols).map(|_| T::of(StandardNormal.sample(rng))).collect())
}

/// Mean (recon, kl, total at KL weight 1) over `examples`, weighting each
/// batch by its size.
pub(crate) fn evaluate<T: Scalar>(model: &Cvae<T>, examples: &[Example], batch_size: usize, seed: u64) -> Result<(f64, f64, f64), CvaeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lengths: Vec<usize> = examples.iter().map(|e| e.indices.len()).collect();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.sort_by_key(|&i| lengths[i]);
    let (mut recon, mut kl) = (0.0, 0.0);
    for members in order.chunks(batch_size) {
        let b = batch_input(model, examples, members);
        let mut g = Graph::new(&model.params);
        let eps = noise(b.rows, model.hyper.latent_dim, &mut rng);
        let vars = model.loss_graph(&mut g, &b, eps, 1.0)?;
        let w = members.len() as f64;
        recon += w * g.scalar(vars.recon).to_f64().unwrap();
        kl += w * g.scalar(vars.kl).to_f64().unwrap();
    }
    let n = examples.len().max(1) as f64;
    Ok((recon / n, kl / n, (recon + kl) / n))
}

/// Teacher-forced next-character accuracy with `z` set to the encoder mean.
pub fn teacher_forced_accuracy<T: Scalar>(model: &Cvae<T>, examples: &[Example], batch_size: usize) -> Result<f64, CvaeError> {
    let (mut correct, mut total) = (0usize, 0usize);
    let idx: Vec<usize> = (0..examples.len()).collect();
    for members in idx.chunks(batch_size) {
        let b = batch_input(model, examples, members);
        let mut g = Graph::new(&model.params);
        let eps = Tensor::zeros(b.rows, model.hyper.latent_dim);
        let vars = model.loss_graph(&mut g, &b, eps, 1.0)?;
        correct += model.correct_predictions(&g, vars.logits, &b);
        total += b.positions();
    }
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

/// Per-dimension standard deviation of encoder means over `examples`.
pub fn latent_std<T: Scalar>(model: &Cvae<T>, examples: &[Example], batch_size: usize) -> Result<Vec<f64>, CvaeError> {
    let l = model.hyper.latent_dim;
    let (mut sum, mut sq) = (vec![0.0; l], vec![0.0; l]);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.sort_by_key(|&i| examples[i].indices.len());
    for members in order.chunks(batch_size) {
        let seqs: Vec<&[usize]> = members.iter().map(|&i| examples[i].indices.as_slice()).collect();
        let conds: Vec<&[f64]> = members.iter().map(|&i| examples[i].condition.as_slice()).collect();
        let (mu, _) = model.encode_batch(&seqs, &conds)?;
        for r in 0..mu.rows() {
            for (k, &x) in mu.row(r).iter().enumerate() {
                let x = x.to_f64().unwrap();
                sum[k] += x;
                sq[k] += x * x;
            }
        }
    }
    let n = examples.len() as f64;
    if n < 2.0 {
        return Ok(vec![1.0; l]);
    }
    Ok(sum.iter().zip(&sq).map(|(s, q)| ((q - s * s / n) / (n - 1.0)).max(0.0).sqrt()).collect())
}

/// Trains `model` in place. The parameters of the best validation epoch
/// are kept.
pub fn train<T: Scalar>(
    model: &mut Cvae<T>,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver<T>,
) -> Result<TrainSummary, CvaeError> {
    if train_set.is_empty() {
        return Err(CvaeError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lengths: Vec<usize> = train_set.iter().map(|e| e.indices.len()).collect();
    let per_epoch = train_set.len().div_ceil(cfg.batch_size) as u64;
    let total_steps = per_epoch * cfg.epochs as u64;
    let warmup = (model.hyper.kl_warmup_fraction * total_steps as f64).ceil() as u64;
    let mut state = OptimizerState::new(model.params.tensors());
    let mut step = 0u64;
    let mut history = Vec::new();
    let mut best: Option<(f64, u32, Vec<Tensor<T>>)> = None;
    let mut waited = 0;
    let mut stopped_early = false;

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        let (mut recon_sum, mut kl_sum, mut total_sum, mut kl_min) = (0.0, 0.0, 0.0, f64::INFINITY);
        let batches = bucketed_batches(&lengths, cfg.batch_size, cfg.bucket_span, &mut rng);
        for members in &batches {
            let kl_weight = if warmup == 0 { 1.0 } else { (step as f64 / warmup as f64).min(1.0) };
            let b = batch_input(model, train_set, members);
            let eps = noise(b.rows, model.hyper.latent_dim, &mut rng);
            let (recon, kl, total, mut grads) = {
                let mut g = Graph::new(&model.params);
                let vars = model.loss_graph(&mut g, &b, eps, kl_weight)?;
                let f = |v| g.scalar(v).to_f64().unwrap();
                let (recon, kl, total) = (f(vars.recon), f(vars.kl), f(vars.total));
                if !total.is_finite() {
                    return Err(CvaeError::DivergenceDetected { epoch, step });
                }
                (recon, kl, total, g.backward(vars.total).into_params())
            };
            assert!(kl >= -1e-6, "negative KL {kl} at step {step}");
            clip_global_norm(&mut grads, cfg.clip_norm);
            adam_step(model.params.tensors_mut(), &grads, &mut state, lr);
            observer.batch(&BatchStats { epoch, step, recon, kl, total, kl_weight });
            recon_sum += recon;
            kl_sum += kl;
            total_sum += total;
            kl_min = kl_min.min(kl);
            step += 1;
        }
        let n = batches.len() as f64;
        let (train_recon, train_kl, train_total) = (recon_sum / n, kl_sum / n, total_sum / n);
        let (val_recon, val_kl, val_total) = if val_set.is_empty() {
            (train_recon, train_kl, train_recon + train_kl)
        } else {
            evaluate(model, val_set, cfg.batch_size, cfg.seed ^ 0x7a11d)?
        };
        if !val_total.is_finite() {
            return Err(CvaeError::DivergenceDetected { epoch, step });
        }
        let row = EpochLoss { epoch, train_recon, train_kl, train_total, val_recon, val_kl, val_total, kl_min, learning_rate: lr };
        log::info!(
            "epoch {epoch}: train recon {train_recon:.4} kl {train_kl:.4} total {train_total:.4} | val total {val_total:.4}"
        );
        history.push(row.clone());
        model.meta.loss_history.push(row.clone());
        model.meta.epoch = epoch + 1;
        if !observer.epoch(model, &row) {
            break;
        }

        // KL weight is still ramping during warm-up, so only later epochs
        // are eligible as the best checkpoint
        let eligible = step >= warmup;
        if eligible {
            let improved = best.as_ref().is_none_or(|(b, _, _)| val_total < b - cfg.min_delta);
            if improved {
                best = Some((val_total, epoch, model.params.tensors().to_vec()));
                waited = 0;
            } else {
                waited += 1;
                if waited >= cfg.patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }
    let best_epoch = best.as_ref().map(|b| b.1);
    if let Some((_, _, tensors)) = best {
        model.params.tensors_mut().clone_from_slice(&tensors);
    }
    model.meta.mu_std = latent_std(model, train_set, cfg.batch_size)?;
    Ok(TrainSummary { epochs_run: model.meta.epoch, stopped_early, best_epoch, history })
}
