//! Sequence conditional VAE: LSTM encoder over `[embedding; c]`, Gaussian
//! latent, LSTM decoder over `[embedding(prev); z; c]`.

mod checkpoint;
mod infer;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{CodecError, ConditionLayout, NormalizationStats, Vocabulary, MAX_LEN};
use crate::numcore::{lstm_cell_projected, Graph, LstmCellParams, NumError, ParamStore, Scalar, Tensor, Var};

pub use checkpoint::{load_checkpoint, load_checkpoint_with_layout, read_header, save_checkpoint, CheckpointHeader, FORMAT_VERSION, MAGIC};
pub use infer::{reparameterize, DecodeContext, DecoderState};
pub use train::{
    bucketed_batches, latent_std, teacher_forced_accuracy, train, BatchStats, EpochLoss, Example, OnBatch, TrainConfig,
    TrainObserver, TrainSummary,
};

#[derive(Debug, Error)]
pub enum CvaeError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("checkpoint format version {found}, expected {expected}")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("checkpoint condition dimension {checkpoint} does not match layout dimension {layout}")]
    ConditionDimMismatch { checkpoint: usize, layout: usize },
    #[error("no training examples")]
    EmptyDataset,
    #[error("loss diverged (non-finite) at epoch {epoch}, step {step}")]
    DivergenceDetected { epoch: u32, step: u64 },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error(transparent)]
    Shape(#[from] NumError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelHyper {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub latent_dim: usize,
    pub max_len: usize,
    pub condition_dim: usize,
    /// Fraction of all training steps over which the KL weight ramps 0 -> 1.
    pub kl_warmup_fraction: f64,
}

impl ModelHyper {
    pub fn paper(condition_dim: usize) -> Self {
        ModelHyper {
            embedding_dim: 300,
            hidden_dim: 500,
            num_layers: 3,
            latent_dim: 200,
            max_len: MAX_LEN,
            condition_dim,
            kl_warmup_fraction: 0.1,
        }
    }

    pub fn desk(condition_dim: usize) -> Self {
        ModelHyper { embedding_dim: 64, hidden_dim: 128, num_layers: 2, latent_dim: 56, ..Self::paper(condition_dim) }
    }

    pub fn validate(&self) -> Result<(), CvaeError> {
        let dims = [self.embedding_dim, self.hidden_dim, self.num_layers, self.latent_dim, self.condition_dim];
        if dims.contains(&0) {
            return Err(CvaeError::InvalidHyper("all dimensions must be positive".into()));
        }
        if self.max_len != MAX_LEN {
            return Err(CvaeError::InvalidHyper(format!("max_len must be {MAX_LEN}")));
        }
        if !(0.0..=1.0).contains(&self.kl_warmup_fraction) {
            return Err(CvaeError::InvalidHyper("kl_warmup_fraction must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Training provenance stored with the weights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epoch: u32,
    pub seed: u64,
    pub loss_history: Vec<EpochLoss>,
    /// Per-dimension standard deviation of encoder means over the training
    /// set; scales the noise of neighbourhood sampling.
    pub mu_std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
struct ModelIds {
    embedding: usize,
    encoder: Vec<LstmCellParams>,
    mu_w: usize,
    mu_b: usize,
    logvar_w: usize,
    logvar_b: usize,
    decoder: Vec<LstmCellParams>,
    out_w: usize,
    out_b: usize,
}

impl ModelIds {
    fn register<T: Scalar>(store: &mut ParamStore<T>, h: &ModelHyper, vocab: usize) -> Self {
        let (e, hd, l, c) = (h.embedding_dim, h.hidden_dim, h.latent_dim, h.condition_dim);
        let embedding = store.add("embedding", Tensor::zeros(vocab, e));
        let encoder = (0..h.num_layers)
            .map(|i| LstmCellParams::register(store, &format!("encoder.{i}"), if i == 0 { e + c } else { hd }, hd))
            .collect();
        let mu_w = store.add("mu.w", Tensor::zeros(hd, l));
        let mu_b = store.add("mu.b", Tensor::zeros(1, l));
        let logvar_w = store.add("logvar.w", Tensor::zeros(hd, l));
        let logvar_b = store.add("logvar.b", Tensor::zeros(1, l));
        let decoder = (0..h.num_layers)
            .map(|i| LstmCellParams::register(store, &format!("decoder.{i}"), if i == 0 { e + l + c } else { hd }, hd))
            .collect();
        let out_w = store.add("output.w", Tensor::zeros(hd, vocab));
        let out_b = store.add("output.b", Tensor::zeros(1, vocab));
        ModelIds { embedding, encoder, mu_w, mu_b, logvar_w, logvar_b, decoder, out_w, out_b }
    }
}

/// Padded, time-major view of a batch. Row `t * rows + r` holds step `t` of
/// sequence `r`.
pub struct BatchInput<T> {
    pub rows: usize,
    pub steps: usize,
    enc_tokens: Vec<usize>,
    dec_tokens: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<T>,
    masks: Vec<Vec<T>>,
    cond: Tensor<T>,
}

impl<T: Scalar> BatchInput<T> {
    /// `seqs` must end with the terminator; `conds` are condition vectors.
    pub fn new(seqs: &[&[usize]], conds: &[&[f64]], terminator: usize) -> Self {
        let rows = seqs.len();
        let steps = seqs.iter().map(|s| s.len()).max().unwrap_or(0);
        let n = rows * steps;
        let (mut enc_tokens, mut dec_tokens, mut targets) = (vec![terminator; n], vec![terminator; n], vec![terminator; n]);
        let mut weights = vec![T::zero(); n];
        let mut masks = vec![vec![T::zero(); rows]; steps];
        for (r, s) in seqs.iter().enumerate() {
            for (t, &tok) in s.iter().enumerate() {
                enc_tokens[t * rows + r] = tok;
                targets[t * rows + r] = tok;
                weights[t * rows + r] = T::one();
                masks[t][r] = T::one();
                if t + 1 < steps {
                    dec_tokens[(t + 1) * rows + r] = tok;
                }
            }
        }
        let cdim = conds.first().map_or(0, |c| c.len());
        let cond = Tensor::from_rows(rows, cdim, conds.iter().flat_map(|c| c.iter().map(|&x| T::of(x))).collect());
        BatchInput { rows, steps, enc_tokens, dec_tokens, targets, weights, masks, cond }
    }

    pub fn positions(&self) -> usize {
        self.weights.iter().filter(|&&w| w > T::zero()).count()
    }
}

/// Nodes of one forward pass through the loss.
pub struct LossVars {
    pub mu: Var,
    pub logvar: Var,
    pub logits: Var,
    pub recon: Var,
    pub kl: Var,
    pub total: Var,
}

/// Conditional VAE with its vocabulary, normalisation and metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Cvae<T: Scalar> {
    pub hyper: ModelHyper,
    pub vocab: Vocabulary,
    pub stats: NormalizationStats,
    pub layout: ConditionLayout,
    pub params: ParamStore<T>,
    pub meta: TrainingMeta,
    ids: ModelIds,
}

/// The persisted form of a model.
pub type ModelCheckpoint = Cvae<f32>;

pub const INIT_RANGE: f64 = 0.08;

impl<T: Scalar> Cvae<T> {
    /// Weights uniform in +-0.08, biases zero except forget gates at +1.
    pub fn new(hyper: ModelHyper, vocab: Vocabulary, stats: NormalizationStats, layout: ConditionLayout, seed: u64) -> Result<Self, CvaeError> {
        hyper.validate()?;
        if hyper.condition_dim != layout.dim() {
            return Err(CvaeError::ConditionDimMismatch { checkpoint: hyper.condition_dim, layout: layout.dim() });
        }
        let mut params = ParamStore::default();
        let ids = ModelIds::register(&mut params, &hyper, vocab.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let biases: Vec<usize> = ids
            .encoder
            .iter()
            .chain(&ids.decoder)
            .map(|c| c.bias)
            .chain([ids.mu_b, ids.logvar_b, ids.out_b])
            .collect();
        for id in 0..params.len() {
            if biases.contains(&id) {
                continue;
            }
            for x in params.get_mut(id).data.iter_mut() {
                *x = T::of(rng.random_range(-INIT_RANGE..INIT_RANGE));
            }
        }
        let hd = hyper.hidden_dim;
        for cell in ids.encoder.iter().chain(&ids.decoder) {
            for x in &mut params.get_mut(cell.bias).data[hd..2 * hd] {
                *x = T::one();
            }
        }
        let meta = TrainingMeta { seed, ..TrainingMeta::default() };
        Ok(Cvae { hyper, vocab, stats, layout, params, meta, ids })
    }

    /// Rebuilds a model around existing parameters, checking names and shapes.
    pub fn from_parts(
        hyper: ModelHyper,
        vocab: Vocabulary,
        stats: NormalizationStats,
        layout: ConditionLayout,
        params: ParamStore<T>,
        meta: TrainingMeta,
    ) -> Result<Self, CvaeError> {
        hyper.validate()?;
        if hyper.condition_dim != layout.dim() {
            return Err(CvaeError::ConditionDimMismatch { checkpoint: hyper.condition_dim, layout: layout.dim() });
        }
        let mut expected = ParamStore::<T>::default();
        let ids = ModelIds::register(&mut expected, &hyper, vocab.len());
        if params.len() != expected.len() {
            return Err(CvaeError::CorruptCheckpoint(format!("{} tensors, expected {}", params.len(), expected.len())));
        }
        for (id, (name, t)) in expected.iter().enumerate() {
            if params.name(id) != name || params.get(id).dims() != t.dims() {
                return Err(CvaeError::CorruptCheckpoint(format!(
                    "tensor {id} is {} {:?}, expected {name} {:?}",
                    params.name(id),
                    params.get(id).shape,
                    t.shape
                )));
            }
        }
        Ok(Cvae { hyper, vocab, stats, layout, params, meta, ids })
    }

    /// The same model in another precision.
    pub fn cast<U: Scalar>(&self) -> Cvae<U> {
        Cvae {
            hyper: self.hyper.clone(),
            vocab: self.vocab.clone(),
            stats: self.stats,
            layout: self.layout,
            params: self.params.cast(),
            meta: self.meta.clone(),
            ids: self.ids.clone(),
        }
    }

    fn zeros(&self, g: &mut Graph<T>, rows: usize) -> Var {
        g.input(Tensor::zeros(rows, self.hyper.hidden_dim))
    }

    /// Final top-layer hidden state of the encoder, `[rows, hidden]`.
    fn encoder_top(&self, g: &mut Graph<T>, b: &BatchInput<T>) -> Result<Var, CvaeError> {
        let (e, c) = (self.hyper.embedding_dim, self.hyper.condition_dim);
        let table = g.param(self.ids.embedding);
        let mut layer_input = g.embedding(table, &b.enc_tokens)?;
        let cond = g.input(b.cond.clone());
        let mut top = None;
        for (l, cell) in self.ids.encoder.iter().enumerate() {
            let wx = g.param(cell.w_x);
            let (proj, extra) = if l == 0 {
                let we = g.slice_rows(wx, 0, e)?;
                let wc = g.slice_rows(wx, e, c)?;
                (g.matmul(layer_input, we)?, Some(g.matmul(cond, wc)?))
            } else {
                (g.matmul(layer_input, wx)?, None)
            };
            let (mut h, mut cs) = (self.zeros(g, b.rows), self.zeros(g, b.rows));
            let mut outs = Vec::with_capacity(b.steps);
            for t in 0..b.steps {
                let mut xp = g.slice_rows(proj, t * b.rows, b.rows)?;
                if let Some(x) = extra {
                    xp = g.add(xp, x)?;
                }
                let (hn, cn) = lstm_cell_projected(g, cell, xp, h, cs)?;
                if b.masks[t].iter().all(|&m| m == T::one()) {
                    (h, cs) = (hn, cn);
                } else {
                    h = g.blend(&b.masks[t], hn, h)?;
                    cs = g.blend(&b.masks[t], cn, cs)?;
                }
                outs.push(h);
            }
            layer_input = g.concat(&outs, 0)?;
            top = Some(h);
        }
        Ok(top.expect("at least one layer"))
    }

    /// `(mu, logvar)` nodes for a batch.
    pub fn encode_graph(&self, g: &mut Graph<T>, b: &BatchInput<T>) -> Result<(Var, Var), CvaeError> {
        let h = self.encoder_top(g, b)?;
        let project = |g: &mut Graph<T>, w: usize, bias: usize| -> Result<Var, NumError> {
            let (w, bias) = (g.param(w), g.param(bias));
            let m = g.matmul(h, w)?;
            g.add_row(m, bias)
        };
        let mu = project(g, self.ids.mu_w, self.ids.mu_b)?;
        let logvar = project(g, self.ids.logvar_w, self.ids.logvar_b)?;
        Ok((mu, logvar))
    }

    /// Teacher-forced decoder logits, `[steps * rows, vocab]` time-major.
    pub fn decode_graph(&self, g: &mut Graph<T>, z: Var, b: &BatchInput<T>) -> Result<Var, CvaeError> {
        let e = self.hyper.embedding_dim;
        let zc_width = self.hyper.latent_dim + self.hyper.condition_dim;
        let table = g.param(self.ids.embedding);
        let mut layer_input = g.embedding(table, &b.dec_tokens)?;
        let cond = g.input(b.cond.clone());
        let zc = g.concat(&[z, cond], 1)?;
        for (l, cell) in self.ids.decoder.iter().enumerate() {
            let wx = g.param(cell.w_x);
            let (proj, extra) = if l == 0 {
                let we = g.slice_rows(wx, 0, e)?;
                let wz = g.slice_rows(wx, e, zc_width)?;
                (g.matmul(layer_input, we)?, Some(g.matmul(zc, wz)?))
            } else {
                (g.matmul(layer_input, wx)?, None)
            };
            let (mut h, mut cs) = (self.zeros(g, b.rows), self.zeros(g, b.rows));
            let mut outs = Vec::with_capacity(b.steps);
            for t in 0..b.steps {
                let mut xp = g.slice_rows(proj, t * b.rows, b.rows)?;
                if let Some(x) = extra {
                    xp = g.add(xp, x)?;
                }
                (h, cs) = lstm_cell_projected(g, cell, xp, h, cs)?;
                outs.push(h);
            }
            layer_input = g.concat(&outs, 0)?;
        }
        let (w, bias) = (g.param(self.ids.out_w), g.param(self.ids.out_b));
        let logits = g.matmul(layer_input, w)?;
        Ok(g.add_row(logits, bias)?)
    }

    /// Full loss: `recon + kl_weight * kl` with `z = mu + exp(logvar/2) * noise`.
    pub fn loss_graph(&self, g: &mut Graph<T>, b: &BatchInput<T>, noise: Tensor<T>, kl_weight: f64) -> Result<LossVars, CvaeError> {
        let (mu, logvar) = self.encode_graph(g, b)?;
        let half = g.scale(logvar, T::of(0.5));
        let std = g.exp(half);
        let eps = g.input(noise);
        let spread = g.mul(std, eps)?;
        let z = g.add(mu, spread)?;
        let logits = self.decode_graph(g, z, b)?;
        let recon = g.softmax_cross_entropy(logits, &b.targets, &b.weights)?;
        let kl = g.kl_standard_normal(mu, logvar)?;
        let weighted = g.scale(kl, T::of(kl_weight));
        let total = g.add(recon, weighted)?;
        Ok(LossVars { mu, logvar, logits, recon, kl, total })
    }

    /// Correct arg-max predictions among the real (unpadded) positions.
    pub fn correct_predictions(&self, g: &Graph<T>, logits: Var, b: &BatchInput<T>) -> usize {
        let x = g.value(logits);
        (0..b.targets.len())
            .filter(|&i| b.weights[i] > T::zero())
            .filter(|&i| {
                let row = x.row(i);
                let best = (0..row.len()).max_by(|&p, &q| row[p].partial_cmp(&row[q]).unwrap_or(std::cmp::Ordering::Equal));
                best == Some(b.targets[i])
            })
            .count()
    }

    /// Encoder means and log-variances, one row per sequence.
    pub fn encode_batch(&self, seqs: &[&[usize]], conds: &[&[f64]]) -> Result<(Tensor<T>, Tensor<T>), CvaeError> {
        let b = BatchInput::new(seqs, conds, self.vocab.terminator_index());
        let mut g = Graph::new(&self.params);
        let (mu, logvar) = self.encode_graph(&mut g, &b)?;
        Ok((g.value(mu).clone(), g.value(logvar).clone()))
    }

    /// Single-sequence encoding.
    pub fn encode(&self, seq: &[usize], cond: &[f64]) -> Result<(Vec<T>, Vec<T>), CvaeError> {
        let (mu, logvar) = self.encode_batch(&[seq], &[cond])?;
        Ok((mu.data, logvar.data))
    }

    /// Teacher-forced logits for one sequence from latent `z`: one row per
    /// character plus the terminator.
    pub fn teacher_forced_logits(&self, seq: &[usize], cond: &[f64], z: &[T]) -> Result<Tensor<T>, CvaeError> {
        let b = BatchInput::new(&[seq], &[cond], self.vocab.terminator_index());
        let mut g = Graph::new(&self.params);
        let zv = g.input(Tensor::from_rows(1, z.len(), z.to_vec()));
        let logits = self.decode_graph(&mut g, zv, &b)?;
        Ok(g.value(logits).clone())
    }
}

/// Largest relative error between the tape gradient of the full loss and
/// central differences, over every parameter, for a fixed batch and noise.
pub fn loss_gradient_error(model: &Cvae<f64>, examples: &[train::Example], kl_weight: f64, seed: u64) -> Result<f64, CvaeError> {
    Ok(loss_gradient_report(model, examples, kl_weight, seed)?.worst_tensor)
}

pub fn loss_gradient_report(
    model: &Cvae<f64>,
    examples: &[train::Example],
    kl_weight: f64,
    seed: u64,
) -> Result<crate::numcore::gradcheck::GradReport, CvaeError> {
    use rand_distr::{Distribution, StandardNormal};
    let seqs: Vec<&[usize]> = examples.iter().map(|e| e.indices.as_slice()).collect();
    let conds: Vec<&[f64]> = examples.iter().map(|e| e.condition.as_slice()).collect();
    let b = BatchInput::new(&seqs, &conds, model.vocab.terminator_index());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..b.rows * model.hyper.latent_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let noise = Tensor::from_rows(b.rows, model.hyper.latent_dim, noise);
    crate::numcore::gradcheck::check_report(&model.params, |g| Ok(model.loss_graph(g, &b, noise.clone(), kl_weight)?.total))
}

#[cfg(test)]
mod tests;
