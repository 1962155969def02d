//! Command-line front end: prepare, train, generate, evaluate, analyze.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chem::parse_smiles;
use crate::codec::{build_vocabulary, make_condition, ConditionLayout, NormalizationStats};
use crate::cvae::{self, load_checkpoint, save_checkpoint, Cvae, EpochLoss, ModelHyper, TrainConfig, TrainObserver};
use crate::dataset::{self, DatasetRecord, DatasetSummary};
use crate::descriptors::{property_vector, PropertyId, PropertySet};
use crate::eval;
use crate::generate::{self, CampaignConfig, GenerateError, GenerationReport, LatentSampler};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, missing or malformed input files.
    Input(String),
    /// The command ran but produced nothing to report.
    Empty(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Empty(_) => EXIT_EMPTY,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Empty(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

impl From<dataset::DatasetError> for CliError {
    fn from(e: dataset::DatasetError) -> Self {
        input(e)
    }
}

impl From<cvae::CvaeError> for CliError {
    fn from(e: cvae::CvaeError) -> Self {
        use cvae::CvaeError::*;
        match e {
            Io { .. } | VersionMismatch { .. } | CorruptCheckpoint(_) | ConditionDimMismatch { .. } | EmptyDataset | InvalidHyper(_) => input(e),
            _ => internal(e),
        }
    }
}

impl From<GenerateError> for CliError {
    fn from(e: GenerateError) -> Self {
        match e {
            GenerateError::SeedEncodingFailed { .. } | GenerateError::InvalidSigma(_) | GenerateError::ZeroQuota | GenerateError::NonFiniteValue(_) => {
                input(e)
            }
            GenerateError::Criterion(_) => input(e),
            _ => internal(e),
        }
    }
}

impl From<eval::EvalError> for CliError {
    fn from(e: eval::EvalError) -> Self {
        match e {
            eval::EvalError::EmptySamples | eval::EvalError::ZeroAttempts => CliError::Empty(e.to_string()),
            eval::EvalError::Io { .. } => internal(e),
            _ => input(e),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "molgen", version, about = "Property-conditioned molecule generation with a sequence CVAE")]
pub struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, env = "MOLGEN_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for ingestion and generation (default: logical cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// key=value file of defaults; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ingest a SMILES file into a property cache plus a stats sidecar.
    Prepare(PrepareArgs),
    /// Train a model on a prepared cache.
    Train(TrainArgs),
    /// Run a generation campaign against a checkpoint.
    Generate(GenerateArgs),
    /// Rates and property histograms of a results file.
    Evaluate(EvaluateArgs),
    /// PCA of the latent means of test molecules.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    /// One SMILES per line; gzip accepted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Cache CSV to write; the sidecar goes to `<output>.json`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Keep at most this many distinct molecules.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Desk,
    Paper,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Profile as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Cache written by `prepare`.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Checkpoint to write.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Loss log CSV (default: `<checkpoint>.loss.csv`).
    #[arg(long)]
    pub loss_log: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub lr_decay: Option<f64>,
    #[arg(long)]
    pub patience: Option<u32>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub num_layers: Option<usize>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// Train on at most this many training molecules.
    #[arg(long)]
    pub max_train: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct TargetArgs {
    /// Take every target property from this molecule.
    #[arg(long)]
    pub like: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub mw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub logp: Option<f64>,
    #[arg(long)]
    pub hbd: Option<u32>,
    #[arg(long)]
    pub hba: Option<u32>,
    #[arg(long)]
    pub tpsa: Option<f64>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Results CSV; the report goes to `<output>.json`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub target: TargetArgs,
    /// Set this property to 1.1 times its training maximum; properties not
    /// given are drawn uniformly from their training ranges.
    #[arg(long)]
    pub beyond: Option<PropertyId>,
    /// Sample latents around this molecule instead of from the prior.
    #[arg(long)]
    pub around: Option<String>,
    /// Sample latents around the `--like` molecule.
    #[arg(long)]
    pub around_target: bool,
    /// Neighbourhood noise relative to the spread of training latents.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Distinct successful molecules to collect.
    #[arg(long)]
    pub quota: Option<usize>,
    #[arg(long)]
    pub attempt_cap: Option<u64>,
    /// Write-outs per latent vector.
    #[arg(long)]
    pub writeouts: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Results CSV written by `generate`.
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Checkpoint whose dataset stats define the success criterion.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Stats sidecar written by `prepare` (alternative to --checkpoint).
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Re-judge success against this target instead of the stored flags.
    #[command(flatten)]
    pub target: TargetArgs,
    /// Directory for histogram CSVs.
    #[arg(long)]
    pub histograms: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Also histogram this cache on the same bins, for comparison.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// PCA CSV to write.
    #[arg(long)]
    pub pca: Option<PathBuf>,
    /// Test molecules to project.
    #[arg(long)]
    pub count: Option<usize>,
}

/// Defaults read from a key=value file.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| input(format!("config line {}: expected key=value", i + 1)))?;
            values.insert(k.trim().replace('-', "_"), v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The flag if given, else the config value, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| input(format!("config key {key}: {e}"))),
        }
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
        self.pick(flag, key)?.ok_or_else(|| input(format!("--{} is required", key.replace('_', "-"))))
    }
}

/// Hyper-parameters and optimiser settings of a profile.
pub fn profile_settings(profile: Profile, condition_dim: usize) -> (ModelHyper, TrainConfig) {
    match profile {
        Profile::Paper => (ModelHyper::paper(condition_dim), TrainConfig::default()),
        Profile::Desk => (
            ModelHyper::desk(condition_dim),
            TrainConfig { epochs: 30, batch_size: 32, learning_rate: 2e-3, ..TrainConfig::default() },
        ),
    }
}

struct Context {
    seed: u64,
    workers: usize,
    config: ConfigFile,
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let seed = config.pick(cli.seed, "seed")?.unwrap_or(0);
    let workers = config
        .pick(cli.workers, "workers")?
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let ctx = Context { seed, workers, config };
    match cli.command {
        Command::Prepare(a) => cmd_prepare(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Generate(a) => cmd_generate(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Analyze(a) => cmd_analyze(&ctx, a),
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(internal)?;
    std::fs::write(path, text + "\n").map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn read_summary(cache: &Path) -> Result<DatasetSummary, CliError> {
    let path = sidecar(cache, ".json");
    let text = std::fs::read_to_string(&path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn cmd_prepare(ctx: &Context, a: PrepareArgs) -> Result<(), CliError> {
    let c = &ctx.config;
    let input_path = c.path(a.input, "input")?;
    let output = c.path(a.output, "output")?;
    let limit = c.pick(a.limit, "limit")?;
    let (records, report) = dataset::ingest(&input_path, limit, ctx.workers)?;
    let stats = NormalizationStats::from_properties(records.iter().map(|r| &r.props)).map_err(input)?;
    let train = (records.len() as f64 * 0.8).round() as usize;
    dataset::cache_write(&records, &output)?;
    let summary = DatasetSummary { stats, split_seed: ctx.seed, records: records.len(), train, test: records.len() - train, ingest: report };
    write_json(&summary, &sidecar(&output, ".json"))?;
    log::info!(
        "{} records ({} invalid, {} too long, {} duplicates) -> {}",
        records.len(),
        summary.ingest.invalid,
        summary.ingest.too_long,
        summary.ingest.duplicates,
        output.display()
    );
    Ok(())
}

/// Cache records split with the seed stored at preparation time, plus the
/// stats over all of them.
pub fn load_split(cache: &Path) -> Result<dataset::SplitDataset, CliError> {
    let records = dataset::cache_read(cache)?;
    let seed = match read_summary(cache) {
        Ok(s) => s.split_seed,
        Err(e) => {
            log::warn!("{e}; splitting with seed 0");
            0
        }
    };
    Ok(dataset::split(&records, seed)?)
}

struct LossLog {
    file: std::io::BufWriter<std::fs::File>,
}

impl TrainObserver<f32> for LossLog {
    fn epoch(&mut self, _: &Cvae<f32>, row: &EpochLoss) -> bool {
        let _ = writeln!(self.file, "{},{},{},{}", row.epoch + 1, row.train_recon, row.train_kl, row.val_total);
        let _ = self.file.flush();
        true
    }
}

pub const LOSS_LOG_HEADER: &str = "epoch,train_recon,train_kl,val_total";

fn cmd_train(ctx: &Context, a: TrainArgs) -> Result<(), CliError> {
    let c = &ctx.config;
    let cache = c.path(a.cache, "cache")?;
    let out = c.path(a.checkpoint, "checkpoint")?;
    let loss_log = c.pick(a.loss_log, "loss_log")?.unwrap_or_else(|| sidecar(&out, ".loss.csv"));
    let profile = c.pick(a.profile, "profile")?.unwrap_or(Profile::Desk);
    let layout = ConditionLayout::default();
    let (mut hyper, mut cfg) = profile_settings(profile, layout.dim());
    hyper.embedding_dim = c.pick(a.embedding_dim, "embedding_dim")?.unwrap_or(hyper.embedding_dim);
    hyper.hidden_dim = c.pick(a.hidden_dim, "hidden_dim")?.unwrap_or(hyper.hidden_dim);
    hyper.num_layers = c.pick(a.num_layers, "num_layers")?.unwrap_or(hyper.num_layers);
    hyper.latent_dim = c.pick(a.latent_dim, "latent_dim")?.unwrap_or(hyper.latent_dim);
    cfg.epochs = c.pick(a.epochs, "epochs")?.unwrap_or(cfg.epochs);
    cfg.batch_size = c.pick(a.batch_size, "batch_size")?.unwrap_or(cfg.batch_size).max(1);
    cfg.learning_rate = c.pick(a.learning_rate, "learning_rate")?.unwrap_or(cfg.learning_rate);
    cfg.lr_decay = c.pick(a.lr_decay, "lr_decay")?.unwrap_or(cfg.lr_decay);
    cfg.patience = c.pick(a.patience, "patience")?.unwrap_or(cfg.patience);
    cfg.seed = ctx.seed;
    let max_train = c.pick(a.max_train, "max_train")?;

    let mut split = load_split(&cache)?;
    if let Some(m) = max_train {
        split.train.truncate(m);
    }
    let all: Vec<&str> = split.train.iter().chain(&split.test).map(|r| r.canonical_smiles.as_str()).collect();
    let vocab = build_vocabulary(&all).map_err(input)?;
    let train_set = dataset::to_examples(&split.train, &vocab, &split.stats, &layout).map_err(input)?;
    let val_set = dataset::to_examples(&split.test, &vocab, &split.stats, &layout).map_err(input)?;
    let mut model: Cvae<f32> = Cvae::new(hyper, vocab, split.stats, layout, ctx.seed)?;
    model.meta.seed = ctx.seed;
    log::info!(
        "training {} parameters on {} molecules ({} held out), {} epochs",
        model.params.count(),
        train_set.len(),
        val_set.len(),
        cfg.epochs
    );
    let file = std::fs::File::create(&loss_log).map_err(|e| internal(format!("{}: {e}", loss_log.display())))?;
    let mut log = LossLog { file: std::io::BufWriter::new(file) };
    writeln!(log.file, "{LOSS_LOG_HEADER}").map_err(internal)?;
    if cfg.epochs > 0 {
        let summary = cvae::train(&mut model, &train_set, &val_set, &cfg, &mut log)?;
        log::info!("ran {} epochs, best epoch {:?}", summary.epochs_run, summary.best_epoch.map(|e| e + 1));
    } else {
        model.meta.mu_std = cvae::latent_std(&model, &train_set, cfg.batch_size)?;
    }
    log.file.flush().map_err(internal)?;
    save_checkpoint(&model, &out)?;
    log::info!("checkpoint written to {}", out.display());
    Ok(())
}

/// Target properties from `--like` and the explicit flags (flags win).
/// `fallback` fills properties that neither provides.
fn resolve_target(t: &TargetArgs, c: &ConfigFile, fallback: Option<PropertySet>) -> Result<Option<PropertySet>, CliError> {
    let like = match c.pick(t.like.clone(), "like")? {
        Some(s) => {
            let mol = parse_smiles(&s).map_err(|e| input(format!("--like {s}: {e}")))?;
            Some(property_vector(&mol).map_err(|e| input(format!("--like {s}: {e}")))?)
        }
        None => None,
    };
    let flags = [
        (PropertyId::Mw, c.pick(t.mw, "mw")?),
        (PropertyId::Logp, c.pick(t.logp, "logp")?),
        (PropertyId::Hbd, c.pick(t.hbd, "hbd")?.map(f64::from)),
        (PropertyId::Hba, c.pick(t.hba, "hba")?.map(f64::from)),
        (PropertyId::Tpsa, c.pick(t.tpsa, "tpsa")?),
    ];
    let base = like.or(fallback);
    if base.is_none() && flags.iter().all(|(_, v)| v.is_none()) {
        return Ok(None);
    }
    let mut p = base.unwrap_or(PropertySet { mw: 0.0, logp: 0.0, hbd: 0, hba: 0, tpsa: 0.0 });
    for (id, v) in flags {
        match v {
            Some(v) if !v.is_finite() => return Err(input(format!("--{id} must be finite"))),
            Some(v) => p.set(id, v),
            None if base.is_none() => return Err(input(format!("--{id} is required (or use --like)"))),
            None => {}
        }
    }
    Ok(Some(p))
}

#[derive(Serialize)]
struct CampaignFile<'a> {
    target: PropertySet,
    sampler: &'a LatentSampler,
    config: &'a CampaignConfig,
    quota_filled: bool,
    rates: Option<eval::Rates>,
    report: &'a GenerationReport,
}

fn cmd_generate(ctx: &Context, a: GenerateArgs) -> Result<(), CliError> {
    let c = &ctx.config;
    let ckpt = c.path(a.checkpoint, "checkpoint")?;
    let output = c.path(a.output, "output")?;
    let model = load_checkpoint(&ckpt)?;
    let stats = model.stats;

    let beyond = c.pick(a.beyond, "beyond")?;
    let fallback = beyond.map(|id| generate::beyond_range_target(id, &stats, &mut ChaCha8Rng::seed_from_u64(ctx.seed)));
    let mut target = resolve_target(&a.target, c, fallback)?
        .ok_or_else(|| input("give a target with --like, --mw/--logp/--hbd/--hba/--tpsa or --beyond"))?;
    if let Some(id) = beyond {
        target.set(id, generate::beyond_range_condition(id, &stats));
    }

    let sigma = c.pick(a.sigma, "sigma")?.unwrap_or(generate::DEFAULT_SIGMA);
    let around = match (c.pick(a.around, "around")?, a.around_target || c.pick(None, "around_target")?.unwrap_or(false)) {
        (Some(s), _) => Some(s),
        (None, true) => Some(c.pick(a.target.like.clone(), "like")?.ok_or_else(|| input("--around-target needs --like"))?),
        (None, false) => None,
    };
    let sampler = match around {
        Some(smiles) => LatentSampler::AroundMolecule { smiles, sigma },
        None => LatentSampler::Random,
    };
    let cfg = CampaignConfig {
        quota: c.pick(a.quota, "quota")?.unwrap_or(generate::DEFAULT_QUOTA),
        attempt_cap: c.pick(a.attempt_cap, "attempt_cap")?.unwrap_or(generate::DEFAULT_ATTEMPT_CAP),
        seed: ctx.seed,
        workers: ctx.workers,
        writeouts_per_attempt: c.pick(a.writeouts, "writeouts")?.unwrap_or(generate::WRITEOUTS_PER_ATTEMPT).max(1),
        temperature: c.pick(a.temperature, "temperature")?.unwrap_or(1.0),
    };
    log::info!(
        "target mw {:.2} logp {:.3} hbd {} hba {} tpsa {:.2}",
        target.mw,
        target.logp,
        target.hbd,
        target.hba,
        target.tpsa
    );
    let (report, filled) = match generate::generate_until(&model, &target, &sampler, &stats, &cfg) {
        Ok(r) => (r, true),
        Err(GenerateError::AttemptCapExceeded { report, found, quota, cap }) => {
            log::warn!("attempt cap {cap} reached with {found} of {quota} successes");
            (*report, false)
        }
        Err(e) => return Err(e.into()),
    };
    generate::write_results_csv(&report, &output)?;
    let rates = eval::rates(&report).ok();
    write_json(
        &CampaignFile { target, sampler: &sampler, config: &cfg, quota_filled: filled, rates, report: &report },
        &sidecar(&output, ".json"),
    )?;
    println!(
        "attempts {} writeouts {} valid {} unique {} successes {}",
        report.attempts,
        report.writeouts,
        report.valid,
        report.unique_valid,
        report.successes.len()
    );
    if let Some(r) = rates {
        println!(
            "validity {:.4} success rate {:.4}% (printed {:.2}%)",
            r.validity_rate, r.success_rate_percent, r.success_rate_printed
        );
    }
    if report.successes.is_empty() && !filled {
        return Err(CliError::Empty("no successful molecules".into()));
    }
    Ok(())
}

fn cmd_evaluate(ctx: &Context, a: EvaluateArgs) -> Result<(), CliError> {
    let c = &ctx.config;
    let results_path = c.path(a.results, "results")?;
    let molecules = generate::read_results_csv(&results_path).map_err(input)?;
    if molecules.is_empty() {
        return Err(CliError::Empty(format!("{}: no molecules", results_path.display())));
    }
    let stats = match (c.pick(a.checkpoint, "checkpoint")?, c.pick(a.stats, "stats")?) {
        (Some(ck), _) => Some(cvae::read_header(&ck)?.stats),
        (None, Some(s)) => {
            let text = std::fs::read_to_string(&s).map_err(|e| input(format!("{}: {e}", s.display())))?;
            Some(serde_json::from_str::<DatasetSummary>(&text).map_err(|e| input(format!("{}: {e}", s.display())))?.stats)
        }
        (None, None) => None,
    };
    let target = resolve_target(&a.target, c, None)?;
    let successes = match (&target, &stats) {
        (Some(t), Some(s)) => {
            let crit = eval::SuccessCriterion::from_stats(s)?;
            molecules.iter().filter(|m| eval::is_success(&m.props, t, &crit)).count()
        }
        (Some(_), None) => return Err(input("a target needs --checkpoint or --stats for the success criterion")),
        _ => molecules.iter().filter(|m| m.success).count(),
    };
    // counts of the whole campaign live in the report sidecar
    let report_path = sidecar(&results_path, ".json");
    let counts = std::fs::read_to_string(&report_path).ok().and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok()).and_then(|v| {
        let r = &v["report"];
        Some((r["attempts"].as_u64()?, r["valid"].as_u64()?, r["writeouts"].as_u64()?))
    });
    println!("molecules {} successes {}", molecules.len(), successes);
    match counts {
        Some((attempts, valid, writeouts)) => {
            let r = eval::rates_from_counts(successes as u64, attempts, valid, writeouts)?;
            println!(
                "attempts {attempts} validity {:.4} success rate {:.4}% (printed {:.2}%, rounded {:.2}%)",
                r.validity_rate, r.success_rate_percent, r.success_rate_printed, r.success_rate_rounded
            );
        }
        None => log::warn!("{} missing; attempt counts unknown, rates skipped", report_path.display()),
    }
    let props: Vec<PropertySet> = molecules.iter().map(|m| m.props).collect();
    for id in PropertyId::ALL {
        if let Some(m) = eval::mean_property(&props, id) {
            println!("mean {id} {m:.4}");
        }
    }
    if let Some(dir) = c.pick(a.histograms, "histograms")? {
        std::fs::create_dir_all(&dir).map_err(|e| internal(format!("{}: {e}", dir.display())))?;
        let bins = c.pick(a.bins, "bins")?.unwrap_or(20).max(1);
        let reference = match c.pick(a.reference, "reference")? {
            Some(p) => Some(dataset::cache_read(&p)?.into_iter().map(|r| r.props).collect::<Vec<_>>()),
            None => None,
        };
        for id in PropertyId::ALL {
            let h = match &reference {
                // shared edges spanning both sets
                Some(refp) => {
                    let mut both = props.clone();
                    both.extend_from_slice(refp);
                    let edges = eval::histogram(&both, id, bins)?.edges;
                    let r = eval::histogram_with_edges(refp, id, edges.clone())?;
                    eval::write_histogram_csv(&r, &dir.join(format!("reference_{id}.csv")))?;
                    eval::histogram_with_edges(&props, id, edges)?
                }
                None => eval::histogram(&props, id, bins)?,
            };
            eval::write_histogram_csv(&h, &dir.join(format!("generated_{id}.csv")))?;
        }
        log::info!("histograms written to {}", dir.display());
    }
    Ok(())
}

fn cmd_analyze(ctx: &Context, a: AnalyzeArgs) -> Result<(), CliError> {
    let c = &ctx.config;
    let model = load_checkpoint(&c.path(a.checkpoint, "checkpoint")?)?;
    let cache = c.path(a.cache, "cache")?;
    let out = c.path(a.pca, "pca")?;
    let count = c.pick(a.count, "count")?.unwrap_or(1000);
    let split = load_split(&cache)?;
    // held-out molecules, or everything when too few are held out
    let mut pool: Vec<&DatasetRecord> =
        if split.test.len() < 3 { split.train.iter().chain(&split.test).collect() } else { split.test.iter().collect() };
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(ctx.seed));
    let encodable: Vec<(&DatasetRecord, Vec<usize>)> = pool
        .into_iter()
        .filter_map(|r| crate::codec::encode_smiles(&r.canonical_smiles, &model.vocab).ok().map(|s| (r, s.indices)))
        .take(count)
        .collect();
    if encodable.is_empty() {
        return Err(CliError::Empty("no cache molecule encodes under the checkpoint vocabulary".into()));
    }
    let mut latents = Vec::with_capacity(encodable.len());
    for chunk in encodable.chunks(64) {
        let seqs: Vec<&[usize]> = chunk.iter().map(|(_, s)| s.as_slice()).collect();
        let conds: Vec<Vec<f64>> = chunk.iter().map(|(r, _)| make_condition(&r.props, &model.stats, &model.layout).values).collect();
        let cref: Vec<&[f64]> = conds.iter().map(Vec::as_slice).collect();
        let (mu, _) = model.encode_batch(&seqs, &cref)?;
        for r in 0..mu.rows() {
            latents.push(mu.row(r).iter().map(|&x| x as f64).collect::<Vec<f64>>());
        }
    }
    let pca = eval::pca_project(&latents, 2)?;
    let props: Vec<PropertySet> = encodable.iter().map(|(r, _)| r.props).collect();
    eval::write_pca_csv(&pca, &props, &out)?;
    println!(
        "projected {} molecules; explained variance {:.4} {:.4}",
        latents.len(),
        pca.explained_variance_ratio[0],
        pca.explained_variance_ratio.get(1).copied().unwrap_or(0.0)
    );
    Ok(())
}

#[cfg(test)]
mod tests;
