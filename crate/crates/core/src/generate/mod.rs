//! Latent sampling, stochastic write-out and quota-driven campaigns.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{canonicalize, parse_smiles};
use crate::codec::{encode_smiles, make_condition, ConditionLayout, NormalizationStats, Vocabulary, MAX_LEN};
use crate::cvae::{Cvae, DecodeContext, DecoderState};
use crate::descriptors::{property_vector, property_vector_lenient, PropertyId, PropertySet};
use crate::eval::{is_success, EvalError, SuccessCriterion};
use crate::numcore::Tensor;

pub const WRITEOUTS_PER_ATTEMPT: usize = 100;
pub const DEFAULT_QUOTA: usize = 100;
pub const DEFAULT_ATTEMPT_CAP: u64 = 1_000_000;
/// Neighbourhood noise as a fraction of the per-dimension spread of
/// training-set encoder means.
pub const DEFAULT_SIGMA: f64 = 0.05;
/// Attempts dispatched together; fixed so results do not depend on the
/// worker count.
const WAVE: u64 = 16;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("seed molecule '{smiles}' cannot be encoded: {reason}")]
    SeedEncodingFailed { smiles: String, reason: String },
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("quota must be at least 1")]
    ZeroQuota,
    #[error("sweep value {0} is not finite")]
    NonFiniteValue(f64),
    #[error("attempt cap {cap} reached with {found} of {quota} successes")]
    AttemptCapExceeded { cap: u64, found: usize, quota: usize, report: Box<GenerationReport> },
    #[error(transparent)]
    Criterion(#[from] EvalError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LatentSampler {
    /// Standard-normal draw.
    Random,
    /// Encoder mean of a seed molecule plus Gaussian noise whose standard
    /// deviation is `sigma` times the per-dimension spread of training means.
    AroundMolecule { smiles: String, sigma: f64 },
}

impl LatentSampler {
    pub fn around(smiles: impl Into<String>) -> Self {
        LatentSampler::AroundMolecule { smiles: smiles.into(), sigma: DEFAULT_SIGMA }
    }
}

/// Anything that yields next-character logits for a batch of rows sharing
/// one latent and condition.
pub trait StepModel: Sync {
    type Session;
    fn vocab(&self) -> &Vocabulary;
    fn begin(&self, z: &[f64], c: &[f64], rows: usize) -> Self::Session;
    /// `[rows, vocab]` logits, row-major, after feeding `prev`.
    fn step(&self, session: &mut Self::Session, prev: &[usize]) -> Vec<f64>;
    /// Drops every row not listed in `keep` (indices into the current rows).
    fn retain(&self, session: &mut Self::Session, keep: &[usize]);
}

/// A model that campaigns can run against.
pub trait Generator: Sync {
    fn latent_dim(&self) -> usize;
    fn layout(&self) -> ConditionLayout;
    /// Encoder mean of `smiles` under its own properties.
    fn seed_latent(&self, smiles: &str, stats: &NormalizationStats) -> Result<Vec<f64>, GenerateError>;
    /// Per-dimension scale for neighbourhood noise.
    fn latent_scale(&self) -> Vec<f64> {
        vec![1.0; self.latent_dim()]
    }
    /// `n` write-outs from `(z, c)`: the text before the terminator, or
    /// `None` when none appeared.
    fn raw_write_outs(&self, z: &[f64], c: &[f64], n: usize, temperature: f64, rng: &mut ChaCha8Rng) -> Vec<Option<String>>;
}

pub struct CvaeSession {
    ctx: DecodeContext<f32>,
    state: DecoderState<f32>,
}

impl StepModel for Cvae<f32> {
    type Session = CvaeSession;

    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn begin(&self, z: &[f64], c: &[f64], rows: usize) -> CvaeSession {
        let repeat = |v: &[f64]| {
            let row: Vec<f32> = v.iter().map(|&x| x as f32).collect();
            Tensor::from_rows(rows, v.len(), row.iter().copied().cycle().take(rows * v.len()).collect())
        };
        let ctx = self.decode_context(&repeat(z), &repeat(c)).expect("latent and condition sized for the model");
        CvaeSession { ctx, state: self.initial_state(rows) }
    }

    fn step(&self, s: &mut CvaeSession, prev: &[usize]) -> Vec<f64> {
        let logits = self.decode_step(&s.ctx, prev, &mut s.state).expect("indices come from the vocabulary");
        logits.data.iter().map(|&x| x as f64).collect()
    }

    fn retain(&self, s: &mut CvaeSession, keep: &[usize]) {
        let rows = s.ctx.rows();
        s.state.retain_rows(rows, keep);
        s.ctx.retain_rows(keep);
    }
}

impl Generator for Cvae<f32> {
    fn latent_dim(&self) -> usize {
        self.hyper.latent_dim
    }

    fn layout(&self) -> ConditionLayout {
        self.layout
    }

    fn seed_latent(&self, smiles: &str, stats: &NormalizationStats) -> Result<Vec<f64>, GenerateError> {
        let fail = |reason: String| GenerateError::SeedEncodingFailed { smiles: smiles.to_string(), reason };
        let mol = parse_smiles(smiles).map_err(|e| fail(e.to_string()))?;
        let props = property_vector(&mol).map_err(|e| fail(e.to_string()))?;
        let seq = encode_smiles(&canonicalize(&mol), &self.vocab).map_err(|e| fail(e.to_string()))?;
        let cond = make_condition(&props, stats, &self.layout);
        let (mu, _) = self.encode(&seq.indices, &cond.values).map_err(|e| fail(e.to_string()))?;
        Ok(mu.into_iter().map(f64::from).collect())
    }

    fn latent_scale(&self) -> Vec<f64> {
        if self.meta.mu_std.len() == self.hyper.latent_dim {
            self.meta.mu_std.clone()
        } else {
            vec![1.0; self.hyper.latent_dim]
        }
    }

    fn raw_write_outs(&self, z: &[f64], c: &[f64], n: usize, temperature: f64, rng: &mut ChaCha8Rng) -> Vec<Option<String>> {
        sample_texts(self, z, c, n, temperature, rng)
    }
}

/// Adapts a [`StepModel`] into a [`Generator`] whose seeds encode to fixed
/// latents; used with hand-written decoders.
pub struct StepGenerator<M> {
    pub model: M,
    pub latent_dim: usize,
    pub layout: ConditionLayout,
}

impl<M: StepModel> Generator for StepGenerator<M> {
    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn layout(&self) -> ConditionLayout {
        self.layout
    }

    fn seed_latent(&self, smiles: &str, _: &NormalizationStats) -> Result<Vec<f64>, GenerateError> {
        parse_smiles(smiles)
            .map(|_| vec![0.0; self.latent_dim])
            .map_err(|e| GenerateError::SeedEncodingFailed { smiles: smiles.to_string(), reason: e.to_string() })
    }

    fn raw_write_outs(&self, z: &[f64], c: &[f64], n: usize, temperature: f64, rng: &mut ChaCha8Rng) -> Vec<Option<String>> {
        sample_texts(&self.model, z, c, n, temperature, rng)
    }
}

/// Index drawn from `softmax(logits / temperature)`.
pub fn sample_index<R: Rng>(logits: &[f64], temperature: f64, rng: &mut R) -> usize {
    let t = if temperature > 0.0 { temperature } else { 1.0 };
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|&l| ((l - max) / t).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// `n` stochastic write-outs of up to [`MAX_LEN`] characters each, sampled
/// row by row at every step so that the stream of draws is fixed by `rng`.
pub fn sample_texts<M: StepModel + ?Sized>(
    model: &M,
    z: &[f64],
    c: &[f64],
    n: usize,
    temperature: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Option<String>> {
    let vocab = model.vocab();
    let (term, v) = (vocab.terminator_index(), vocab.len());
    let mut session = model.begin(z, c, n);
    let mut active: Vec<usize> = (0..n).collect();
    let mut prev = vec![term; n];
    let mut text = vec![String::new(); n];
    let mut out = vec![None; n];
    for _ in 0..MAX_LEN {
        if active.is_empty() {
            break;
        }
        let logits = model.step(&mut session, &prev);
        let mut keep = Vec::with_capacity(active.len());
        prev.clear();
        for (k, &row) in active.iter().enumerate() {
            let idx = sample_index(&logits[k * v..(k + 1) * v], temperature, rng);
            if idx == term {
                out[row] = Some(std::mem::take(&mut text[row]));
            } else {
                text[row].push(vocab.symbol(idx).expect("index within vocabulary"));
                keep.push(k);
                prev.push(idx);
            }
        }
        if keep.len() < active.len() {
            model.retain(&mut session, &keep);
            active = keep.iter().map(|&k| active[k]).collect();
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WriteOut {
    Valid(String),
    Invalid,
}

/// One stochastic write-out; invalid when no terminator appears or the text
/// does not parse.
pub fn write_out<M: StepModel>(model: &M, z: &[f64], c: &[f64], rng: &mut ChaCha8Rng) -> WriteOut {
    match sample_texts(model, z, c, 1, 1.0, rng).pop().flatten() {
        Some(s) if crate::chem::is_valid(&s) => WriteOut::Valid(s),
        _ => WriteOut::Invalid,
    }
}

/// Draws a latent vector. `seed_mu` must hold the seed's encoder mean for
/// `AroundMolecule` (see [`Generator::seed_latent`]).
pub fn sample_latent<G: Generator + ?Sized, R: Rng>(
    sampler: &LatentSampler,
    model: &G,
    stats: &NormalizationStats,
    rng: &mut R,
) -> Result<Vec<f64>, GenerateError> {
    let resolved = ResolvedSampler::new(sampler, model, stats)?;
    Ok(resolved.draw(model.latent_dim(), rng))
}

/// A sampler with its seed already encoded.
#[derive(Clone, Debug)]
struct ResolvedSampler {
    centre: Option<Vec<f64>>,
    std: Vec<f64>,
}

impl ResolvedSampler {
    fn new<G: Generator + ?Sized>(sampler: &LatentSampler, model: &G, stats: &NormalizationStats) -> Result<Self, GenerateError> {
        match sampler {
            LatentSampler::Random => Ok(ResolvedSampler { centre: None, std: vec![1.0; model.latent_dim()] }),
            LatentSampler::AroundMolecule { smiles, sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(GenerateError::InvalidSigma(*sigma));
                }
                let centre = model.seed_latent(smiles, stats)?;
                let std = model.latent_scale().iter().map(|s| s * sigma).collect();
                Ok(ResolvedSampler { centre: Some(centre), std })
            }
        }
    }

    fn draw<R: Rng>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        (0..dim)
            .map(|k| {
                let n: f64 = rng.sample(StandardNormal);
                self.centre.as_ref().map_or(0.0, |c| c[k]) + self.std[k] * n
            })
            .collect()
    }
}

/// Outcome of the write-outs from one latent vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchOutcome {
    pub writeouts: usize,
    pub valid: usize,
    /// Canonical SMILES and properties, in order of first appearance.
    pub unique: Vec<(String, PropertySet)>,
}

/// `n` write-outs from `(z, c)`; invalid ones are dropped and the rest
/// canonicalised and deduplicated.
pub fn generate_batch<G: Generator + ?Sized>(
    model: &G,
    z: &[f64],
    c: &[f64],
    n: usize,
    temperature: f64,
    rng: &mut ChaCha8Rng,
) -> BatchOutcome {
    let texts = model.raw_write_outs(z, c, n, temperature, rng);
    let mut seen = HashSet::new();
    let mut out = BatchOutcome { writeouts: n, ..Default::default() };
    for text in texts.into_iter().flatten() {
        let Ok(mol) = parse_smiles(&text) else { continue };
        out.valid += 1;
        let canon = canonicalize(&mol);
        if seen.insert(canon.clone()) {
            out.unique.push((canon, property_vector_lenient(&mol)));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedMolecule {
    pub smiles: String,
    pub props: PropertySet,
    pub success: bool,
    /// Zero-based attempt that first produced the molecule.
    pub attempt: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub attempts: u64,
    pub writeouts: u64,
    pub valid: u64,
    pub unique_valid: u64,
    pub successes: Vec<(String, PropertySet)>,
    pub success_rate: f64,
    /// Every distinct valid molecule, in order of first appearance.
    #[serde(skip)]
    pub molecules: Vec<GeneratedMolecule>,
}

impl GenerationReport {
    /// Combines two campaigns' counts; molecules seen in both count once.
    pub fn merge(&mut self, other: &GenerationReport) {
        self.attempts += other.attempts;
        self.writeouts += other.writeouts;
        self.valid += other.valid;
        let mut seen: HashSet<String> = self.molecules.iter().map(|m| m.smiles.clone()).collect();
        for m in &other.molecules {
            if seen.insert(m.smiles.clone()) {
                self.molecules.push(m.clone());
            }
        }
        self.unique_valid = self.molecules.len() as u64;
        let mut have: HashSet<String> = self.successes.iter().map(|s| s.0.clone()).collect();
        for s in &other.successes {
            if have.insert(s.0.clone()) {
                self.successes.push(s.clone());
            }
        }
        self.success_rate = rate(self.successes.len(), self.attempts);
    }
}

fn rate(successes: usize, attempts: u64) -> f64 {
    if attempts == 0 {
        0.0
    } else {
        (successes as f64 / attempts as f64).min(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub quota: usize,
    pub attempt_cap: u64,
    pub seed: u64,
    pub workers: usize,
    pub writeouts_per_attempt: usize,
    pub temperature: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            quota: DEFAULT_QUOTA,
            attempt_cap: DEFAULT_ATTEMPT_CAP,
            seed: 0,
            workers: 1,
            writeouts_per_attempt: WRITEOUTS_PER_ATTEMPT,
            temperature: 1.0,
        }
    }
}

/// The random stream of one attempt: a function of the master seed and the
/// attempt index only.
pub fn attempt_rng(seed: u64, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt);
    rng
}

/// Draws latent vectors and writes out molecules under the target's
/// condition until `quota` distinct molecules meet the success criterion.
pub fn generate_until<G: Generator + ?Sized>(
    model: &G,
    target: &PropertySet,
    sampler: &LatentSampler,
    stats: &NormalizationStats,
    cfg: &CampaignConfig,
) -> Result<GenerationReport, GenerateError> {
    if cfg.quota == 0 {
        return Err(GenerateError::ZeroQuota);
    }
    let crit = SuccessCriterion::from_stats(stats)?;
    let resolved = ResolvedSampler::new(sampler, model, stats)?;
    let cond = make_condition(target, stats, &model.layout()).values;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| GenerateError::Pool(e.to_string()))?;
    let dim = model.latent_dim();

    let mut report = GenerationReport::default();
    let mut seen = HashSet::new();
    let mut next = 0u64;
    while next < cfg.attempt_cap {
        let end = (next + WAVE).min(cfg.attempt_cap);
        let outcomes: Vec<BatchOutcome> = pool.install(|| {
            (next..end)
                .into_par_iter()
                .map(|a| {
                    let mut rng = attempt_rng(cfg.seed, a);
                    let z = resolved.draw(dim, &mut rng);
                    generate_batch(model, &z, &cond, cfg.writeouts_per_attempt, cfg.temperature, &mut rng)
                })
                .collect()
        });
        for (a, outcome) in (next..end).zip(outcomes) {
            report.attempts += 1;
            report.writeouts += outcome.writeouts as u64;
            report.valid += outcome.valid as u64;
            for (smiles, props) in outcome.unique {
                if !seen.insert(smiles.clone()) {
                    continue;
                }
                let success = is_success(&props, target, &crit);
                if success && report.successes.len() < cfg.quota {
                    report.successes.push((smiles.clone(), props));
                }
                report.molecules.push(GeneratedMolecule { smiles, props, success, attempt: a });
            }
            report.unique_valid = report.molecules.len() as u64;
            if report.successes.len() >= cfg.quota {
                report.success_rate = rate(report.successes.len(), report.attempts);
                return Ok(report);
            }
        }
        next = end;
    }
    report.success_rate = rate(report.successes.len(), report.attempts);
    Err(GenerateError::AttemptCapExceeded {
        cap: cfg.attempt_cap,
        found: report.successes.len(),
        quota: cfg.quota,
        report: Box::new(report),
    })
}

/// One campaign per value of `id`, the other properties held at `base`.
pub fn sweep_property<G: Generator + ?Sized>(
    model: &G,
    base: &PropertySet,
    id: PropertyId,
    values: &[f64],
    sampler: &LatentSampler,
    stats: &NormalizationStats,
    cfg: &CampaignConfig,
) -> Result<Vec<GenerationReport>, GenerateError> {
    if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
        return Err(GenerateError::NonFiniteValue(v));
    }
    values.iter().map(|&v| generate_until(model, &base.with(id, v), sampler, stats, cfg)).collect()
}

/// Target value ten percent beyond the training maximum.
pub fn beyond_range_condition(id: PropertyId, stats: &NormalizationStats) -> f64 {
    1.1 * stats.get(id).max
}

/// Target with `id` beyond range and the other four drawn uniformly from
/// their training ranges (counts as uniform integers).
pub fn beyond_range_target<R: Rng>(id: PropertyId, stats: &NormalizationStats, rng: &mut R) -> PropertySet {
    let mut p = PropertySet { mw: 0.0, logp: 0.0, hbd: 0, hba: 0, tpsa: 0.0 };
    for other in PropertyId::ALL {
        let r = stats.get(other);
        let v = if other == id {
            beyond_range_condition(id, stats)
        } else if other.is_count() {
            rng.random_range(r.min.round() as i64..=r.max.round().max(r.min.round()) as i64) as f64
        } else if r.max > r.min {
            rng.random_range(r.min..=r.max)
        } else {
            r.min
        };
        p.set(other, v);
    }
    p
}

pub const RESULTS_HEADER: &str = "canonical_smiles,mw,logp,hbd,hba,tpsa,success_flag,attempt_index";

fn io_err(path: &Path, e: impl std::fmt::Display) -> GenerateError {
    GenerateError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Every distinct valid molecule of a campaign, one per row.
pub fn write_results_csv(report: &GenerationReport, path: &Path) -> Result<(), GenerateError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut f = std::io::BufWriter::new(file);
    let mut body = String::from(RESULTS_HEADER);
    body.push('\n');
    for m in &report.molecules {
        let p = &m.props;
        body.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            m.smiles, p.mw, p.logp, p.hbd, p.hba, p.tpsa, m.success as u8, m.attempt
        ));
    }
    f.write_all(body.as_bytes()).and_then(|_| f.flush()).map_err(|e| io_err(path, e))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<GeneratedMolecule>, GenerateError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = reader.headers().map_err(|e| io_err(path, e))?.iter().collect::<Vec<_>>().join(",");
    if headers != RESULTS_HEADER {
        return Err(io_err(path, format!("unexpected header '{headers}'")));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let bad = |what: &str| io_err(path, format!("row {}: bad {what}", i + 2));
        let f = |k: usize, what: &str| rec[k].parse::<f64>().map_err(|_| bad(what));
        let u = |k: usize, what: &str| rec[k].parse::<u32>().map_err(|_| bad(what));
        out.push(GeneratedMolecule {
            smiles: rec[0].to_string(),
            props: PropertySet { mw: f(1, "mw")?, logp: f(2, "logp")?, hbd: u(3, "hbd")?, hba: u(4, "hba")?, tpsa: f(5, "tpsa")? },
            success: u(6, "success_flag")? == 1,
            attempt: rec[7].parse().map_err(|_| bad("attempt_index"))?,
        });
    }
    Ok(out)
}
