//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Shares one desk-trained model between the generation checks.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use molgen::chem::{canonicalize, parse_smiles};
use molgen::codec::{build_vocabulary, make_condition, ConditionLayout, NormalizationStats, RangeStats};
use molgen::cvae::{
    self, save_checkpoint, teacher_forced_accuracy, BatchStats, Cvae, EpochLoss, Example, ModelHyper, TrainConfig,
    TrainObserver,
};
use molgen::dataset::{self, DatasetRecord, SplitDataset};
use molgen::descriptors::{molecular_weight, property_vector, property_vector_lenient, PropertyId, PropertySet};
use molgen::eval::{pca_project, rates_from_counts};
use molgen::generate::{
    attempt_rng, beyond_range_condition, beyond_range_target, generate_batch, generate_until, sample_latent,
    CampaignConfig, GenerateError, GenerationReport, Generator, LatentSampler,
};
use molgen::numcore::gradcheck::{check_op, OPS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const DESK_EPOCHS: u32 = 10;
const SPLIT_SEED: u64 = 42;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

struct Run {
    passed: usize,
    failures: usize,
}

impl Run {
    fn check(&mut self, id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        let pass = v.pass && took <= budget;
        if pass {
            self.passed += 1;
        } else {
            self.failures += 1;
        }
        let over = if took > budget { format!(" over budget {budget:?}") } else { String::new() };
        println!("[{}] {id:>2} {name}: {} ({:.1}s{over})", if pass { "PASS" } else { "FAIL" }, v.detail, took.as_secs_f64());
    }
}

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

// ---------------------------------------------------------------- 1

const FORMULAS: &[(&str, &str)] = &[
    ("aspirin", "C9H8O4"),
    ("tamiflu", "C16H28N2O4"),
    ("methane", "CH4"),
    ("ethanol", "C2H6O"),
    ("benzene", "C6H6"),
    ("caffeine", "C8H10N4O2"),
    ("ibuprofen", "C13H18O2"),
    ("paracetamol", "C8H9NO2"),
    ("nicotine", "C10H14N2"),
    ("lenalidomide", "C13H13N3O3"),
    ("rivaroxaban", "C19H18ClN3O5S"),
    ("pregabalin", "C8H17NO2"),
    ("nitrobenzene", "C6H5NO2"),
    ("indole", "C8H7N"),
    ("sulfamethoxazole", "C10H11N3O3S"),
    ("fluconazole", "C13H12F2N6O"),
    ("diazepam", "C16H13ClN2O"),
    ("furosemide", "C12H11ClN2O5S"),
    ("acetonitrile", "C2H3N"),
    ("bromoiodophenol", "C6H4BrIO"),
];

fn isotope_mass(symbol: &str) -> f64 {
    match symbol {
        "C" => 12.0,
        "H" => 1.00782503207,
        "N" => 14.0030740048,
        "O" => 15.99491461956,
        "S" => 31.97207100,
        "Cl" => 34.96885268,
        "F" => 18.99840322,
        "Br" => 78.9183371,
        "I" => 126.904473,
        other => panic!("no mass for {other}"),
    }
}

fn formula_mass(formula: &str) -> f64 {
    let chars: Vec<char> = formula.chars().collect();
    let (mut i, mut total) = (0, 0.0);
    while i < chars.len() {
        let mut sym = chars[i].to_string();
        i += 1;
        if i < chars.len() && chars[i].is_ascii_lowercase() {
            sym.push(chars[i]);
            i += 1;
        }
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        let n: u32 = if start == i { 1 } else { chars[start..i].iter().collect::<String>().parse().unwrap() };
        total += n as f64 * isotope_mass(&sym);
    }
    total
}

struct GoldenRow {
    name: String,
    smiles: String,
    props: PropertySet,
}

fn golden_rows() -> Vec<GoldenRow> {
    std::fs::read_to_string(manifest("tests/fixtures/golden_descriptors.tsv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            GoldenRow {
                name: c[0].into(),
                smiles: c[1].into(),
                props: PropertySet {
                    mw: c[2].parse().unwrap(),
                    logp: c[3].parse().unwrap(),
                    hbd: c[4].parse().unwrap(),
                    hba: c[5].parse().unwrap(),
                    tpsa: c[6].parse().unwrap(),
                },
            }
        })
        .collect()
}

fn golden_descriptors() -> Verdict {
    let rows = golden_rows();
    let published = [
        ("aspirin", PropertySet { mw: 180.04, logp: 1.31, hbd: 1, hba: 3, tpsa: 63.6 }),
        ("tamiflu", PropertySet { mw: 312.2, logp: 1.285, hbd: 2, hba: 5, tpsa: 90.64 }),
    ];
    let mut bad = Vec::new();
    let mut worst_mw: f64 = 0.0;
    for r in &rows {
        let mol = parse_smiles(&r.smiles).unwrap();
        let p = property_vector(&mol).unwrap();
        let Some((_, formula)) = FORMULAS.iter().find(|(n, _)| *n == r.name) else {
            bad.push(format!("{}: no formula", r.name));
            continue;
        };
        let dm = (molecular_weight(&mol) - formula_mass(formula)).abs();
        worst_mw = worst_mw.max(dm);
        if dm > 0.01 {
            bad.push(format!("{} mw off hand sum by {dm:.4}", r.name));
        }
        let (want, mw_tol, logp_tol, tpsa_tol) = match published.iter().find(|(n, _)| *n == r.name) {
            Some((_, w)) => (*w, 0.05, 0.05, 0.1),
            None => (r.props, 1e-4, 1e-3, 1e-3),
        };
        let ok = (p.mw - want.mw).abs() <= mw_tol
            && (p.logp - want.logp).abs() <= logp_tol
            && (p.tpsa - want.tpsa).abs() <= tpsa_tol
            && p.hbd == want.hbd
            && p.hba == want.hba;
        if !ok {
            bad.push(format!("{}: got {p:?} want {want:?}", r.name));
        }
    }
    let pass = rows.len() == 20 && bad.is_empty();
    verdict(pass, format!("{} molecules, worst |mw - hand sum| {worst_mw:.2e}, mismatches {bad:?}", rows.len()))
}

// ---------------------------------------------------------------- 2

fn corpus_lines() -> Vec<String> {
    use std::io::{BufRead, BufReader};
    let file = std::fs::File::open(manifest("data/desk_corpus.smi.gz")).unwrap();
    BufReader::new(flate2::read::GzDecoder::new(file))
        .lines()
        .map(Result::unwrap)
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .collect()
}

const FUZZ_ALPHABET: &[u8] = b"CNOSPFIBrcnospl()[]=#-+123456789%@/\\.H*:";

fn parser_robustness() -> Verdict {
    let corpus = corpus_lines();
    let mut broken = 0;
    for s in &corpus {
        let ok = parse_smiles(s).ok().map(|m| canonicalize(&m)).is_some_and(|first| {
            parse_smiles(&first).is_ok_and(|m| canonicalize(&m) == first)
        });
        if !ok {
            broken += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut panics, mut parsed) = (0, 0);
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for i in 0..100_000 {
        let len = rng.random_range(0..48);
        let bytes: Vec<u8> = (0..len)
            .map(|_| if i % 2 == 0 { rng.random() } else { FUZZ_ALPHABET[rng.random_range(0..FUZZ_ALPHABET.len())] })
            .collect();
        let text = String::from_utf8_lossy(&bytes).into_owned();
        match catch_unwind(|| {
            parse_smiles(&text).map(|m| {
                let c = canonicalize(&m);
                property_vector_lenient(&m);
                c
            })
        }) {
            Ok(Ok(_)) => parsed += 1,
            Ok(Err(_)) => {}
            Err(_) => panics += 1,
        }
    }
    std::panic::set_hook(hook);
    verdict(
        broken == 0 && panics == 0 && corpus.len() == 20_000,
        format!("{} corpus molecules, {broken} round-trip failures; 100000 fuzz inputs, {parsed} parsed, {panics} panics", corpus.len()),
    )
}

// ---------------------------------------------------------------- 3

fn gradient_checks() -> Verdict {
    let mut worst_op = ("", 0.0f64);
    for op in OPS {
        for seed in 0..20 {
            let e = check_op(op, seed).unwrap();
            if e > worst_op.1 {
                worst_op = (op, e);
            }
        }
    }
    let corpus = corpus_lines();
    let pair = [corpus[0].as_str(), corpus[1].as_str()];
    let records = dataset::ingest_lines(&pair, None, 1).unwrap().0;
    let vocab = build_vocabulary(&pair).unwrap();
    let stats = NormalizationStats::from_properties(records.iter().map(|r| &r.props)).unwrap();
    let layout = ConditionLayout::default();
    let examples = dataset::to_examples(&records, &vocab, &stats, &layout).unwrap();
    let hyper = ModelHyper { embedding_dim: 6, hidden_dim: 8, num_layers: 2, latent_dim: 4, ..ModelHyper::desk(layout.dim()) };
    let model: Cvae<f64> = Cvae::new(hyper, vocab, stats, layout, 5).unwrap();
    let full = cvae::loss_gradient_report(&model, &examples, 0.5, 3).unwrap();
    verdict(
        worst_op.1 < 1e-4 && full.overall < 1e-3 && full.worst_tensor < 1e-3,
        format!(
            "{} ops x 20 seeds worst {:.2e} ({}); full loss on 2 molecules {:.2e} over {} parameters (worst single tensor {:.2e}, {})",
            OPS.len(),
            worst_op.1,
            worst_op.0,
            full.overall,
            model.params.count(),
            full.worst_tensor,
            full.worst_name
        ),
    )
}

// ---------------------------------------------------------------- shared data

struct Data {
    split: SplitDataset,
    train: Vec<Example>,
    val: Vec<Example>,
    vocab: molgen::codec::Vocabulary,
}

fn load_data() -> Data {
    let (records, _) = dataset::ingest(&manifest("data/desk_corpus.smi.gz"), None, 1).unwrap();
    let split = dataset::split(&records, SPLIT_SEED).unwrap();
    let all: Vec<&str> = split.train.iter().chain(&split.test).map(|r| r.canonical_smiles.as_str()).collect();
    let vocab = build_vocabulary(&all).unwrap();
    let layout = ConditionLayout::default();
    let train = dataset::to_examples(&split.train, &vocab, &split.stats, &layout).unwrap();
    let val = dataset::to_examples(&split.test, &vocab, &split.stats, &layout).unwrap();
    Data { split, train, val, vocab }
}

fn desk_model(data: &Data, seed: u64) -> Cvae<f32> {
    let layout = ConditionLayout::default();
    Cvae::new(ModelHyper::desk(layout.dim()), data.vocab.clone(), data.split.stats, layout, seed).unwrap()
}

fn desk_config() -> TrainConfig {
    let (_, cfg) = molgen::cli::profile_settings(molgen::cli::Profile::Desk, ConditionLayout::default().dim());
    cfg
}

// ---------------------------------------------------------------- 4

struct Overfit<'a> {
    examples: &'a [Example],
    reached: Option<(u32, f64)>,
    last: f64,
}

impl TrainObserver<f32> for Overfit<'_> {
    fn epoch(&mut self, model: &Cvae<f32>, loss: &EpochLoss) -> bool {
        if (loss.epoch + 1) % 10 != 0 {
            return true;
        }
        self.last = teacher_forced_accuracy(model, self.examples, 50).unwrap();
        if self.last >= 0.95 {
            self.reached = Some((loss.epoch + 1, self.last));
            return false;
        }
        true
    }
}

fn overfit(data: &Data) -> Verdict {
    let examples = &data.train[..100];
    let mut model = desk_model(data, 11);
    let cfg = TrainConfig { epochs: 300, batch_size: 16, lr_decay: 1.0, patience: 300, seed: 4, ..desk_config() };
    let mut obs = Overfit { examples, reached: None, last: 0.0 };
    cvae::train(&mut model, examples, examples, &cfg, &mut obs).unwrap();
    match obs.reached {
        Some((epoch, acc)) => verdict(true, format!("accuracy {acc:.4} at epoch {epoch} (lr {}, batch {})", cfg.learning_rate, cfg.batch_size)),
        None => verdict(false, format!("accuracy {:.4} after 300 epochs", obs.last)),
    }
}

// ---------------------------------------------------------------- 5

struct KlWatch {
    batches: usize,
    min_kl: f64,
}

impl TrainObserver<f32> for KlWatch {
    fn batch(&mut self, s: &BatchStats) {
        self.batches += 1;
        self.min_kl = self.min_kl.min(s.kl);
    }
}

fn training_progress(data: &Data) -> Verdict {
    let train = &data.train[..1000];
    let val = &data.val[..200];
    let mut model = desk_model(data, 12);
    let cfg = TrainConfig { epochs: 20, patience: 20, seed: 5, ..desk_config() };
    let mut watch = KlWatch { batches: 0, min_kl: f64::INFINITY };
    let s = cvae::train(&mut model, train, val, &cfg, &mut watch).unwrap();
    let first = s.history[0].train_total;
    let last = s.history.last().unwrap().train_total;
    let ratio = last / first;
    verdict(
        s.history.len() == 20 && ratio <= 0.5 && watch.min_kl >= 0.0,
        format!(
            "{} epochs, total loss {first:.4} -> {last:.4} (ratio {ratio:.3}), min batch KL {:.3e} over {} batches",
            s.history.len(),
            watch.min_kl,
            watch.batches
        ),
    )
}

// ---------------------------------------------------------------- 6

struct Progress;

impl TrainObserver<f32> for Progress {
    fn epoch(&mut self, _model: &Cvae<f32>, l: &EpochLoss) -> bool {
        eprintln!(
            "    epoch {:>2}: train recon {:.4} kl {:.3}, val total {:.4}",
            l.epoch + 1,
            l.train_recon,
            l.train_kl,
            l.val_total
        );
        true
    }
}

/// Valid write-outs and write-outs from standard-normal latents, each
/// paired with the condition of a random held-out molecule.
fn random_latent_validity(model: &Cvae<f32>, data: &Data, latents: usize, per: usize, seed: u64) -> (usize, usize) {
    let layout = ConditionLayout::default();
    let (mut valid, mut total) = (0, 0);
    for a in 0..latents {
        let mut rng = attempt_rng(seed, a as u64);
        let r = &data.split.test[rng.random_range(0..data.split.test.len())];
        let c = make_condition(&r.props, &data.split.stats, &layout).values;
        let z = sample_latent(&LatentSampler::Random, model, &data.split.stats, &mut rng).unwrap();
        let out = generate_batch(model, &z, &c, per, 1.0, &mut rng);
        valid += out.valid;
        total += out.writeouts;
    }
    (valid, total)
}

fn train_desk(data: &Data) -> (Cvae<f32>, Duration) {
    let start = Instant::now();
    let mut model = desk_model(data, 1);
    let cfg = TrainConfig { epochs: DESK_EPOCHS, seed: 1, ..desk_config() };
    cvae::train(&mut model, &data.train, &data.val, &cfg, &mut Progress).unwrap();
    (model, start.elapsed())
}

fn validity_uplift(data: &Data, trained: &Cvae<f32>, took: Duration) -> Verdict {
    let untrained = desk_model(data, 1);
    let (uv, ut) = random_latent_validity(&untrained, data, 200, 20, 77);
    let (tv, tt) = random_latent_validity(trained, data, 200, 20, 77);
    let (u, t) = (uv as f64 / ut as f64, tv as f64 / tt as f64);
    verdict(
        t > 10.0 * u && t >= 0.05 && took <= minutes(120),
        format!(
            "{} molecules x {DESK_EPOCHS} epochs in {:.1} min; validity {:.2}% ({tv}/{tt}) vs untrained {:.2}% ({uv}/{ut})",
            data.train.len(),
            took.as_secs_f64() / 60.0,
            100.0 * t,
            100.0 * u
        ),
    )
}

// ---------------------------------------------------------------- 7

fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = q * (values.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
}

fn column(records: &[DatasetRecord], id: PropertyId) -> Vec<f64> {
    records.iter().map(|r| r.props.get(id)).collect()
}

/// Properties of the valid molecules written out under `target`.
fn conditioned_sample(model: &Cvae<f32>, data: &Data, target: &PropertySet, latents: usize, per: usize, seed: u64) -> Vec<PropertySet> {
    let c = make_condition(target, &data.split.stats, &ConditionLayout::default()).values;
    let mut out = Vec::new();
    for a in 0..latents {
        let mut rng = attempt_rng(seed, a as u64);
        let z = sample_latent(&LatentSampler::Random, model, &data.split.stats, &mut rng).unwrap();
        out.extend(generate_batch(model, &z, &c, per, 1.0, &mut rng).unique.into_iter().map(|(_, p)| p));
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n.max(1) as f64
}

fn conditioning_effect(model: &Cvae<f32>, data: &Data) -> Verdict {
    let mut medians = PropertySet { mw: 0.0, logp: 0.0, hbd: 0, hba: 0, tpsa: 0.0 };
    for id in PropertyId::ALL {
        medians.set(id, quantile(&mut column(&data.split.train, id), 0.5));
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for id in [PropertyId::Tpsa, PropertyId::Logp] {
        let mut col = column(&data.split.train, id);
        let (lo, hi) = (quantile(&mut col, 0.1), quantile(&mut col, 0.9));
        let low = conditioned_sample(model, data, &medians.with(id, lo), 150, 20, 31);
        let high = conditioned_sample(model, data, &medians.with(id, hi), 150, 20, 31);
        let (ml, mh) = (mean(low.iter().map(|p| p.get(id))), mean(high.iter().map(|p| p.get(id))));
        let frac = (mh - ml) / (hi - lo);
        pass &= frac >= 0.25;
        parts.push(format!(
            "{id}: condition {lo:.2} -> {hi:.2}, generated mean {ml:.2} (n={}) -> {mh:.2} (n={}), {:.0}% of gap",
            low.len(),
            high.len(),
            100.0 * frac
        ));
    }
    verdict(pass, parts.join("; "))
}

// ---------------------------------------------------------------- 8

fn beyond_range(model: &Cvae<f32>, data: &Data) -> Verdict {
    let r = |max: f64| RangeStats { min: 0.0, max, mean: max / 2.0 };
    let mut example = data.split.stats;
    example.logp = r(5.0);
    example.tpsa = r(165.5 / 1.1);
    let logp = beyond_range_condition(PropertyId::Logp, &example);
    let tpsa = beyond_range_condition(PropertyId::Tpsa, &example);
    let mut pass = logp == 5.5 && (tpsa - 165.5).abs() < 1e-12;
    for id in PropertyId::ALL {
        pass &= beyond_range_condition(id, &data.split.stats) == 1.1 * data.split.stats.get(id).max;
    }
    let mut parts = vec![format!("1.1 x max: logp 5.0 -> {logp}, tpsa {:.4} -> {tpsa}", example.tpsa.max)];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = CampaignConfig { quota: usize::MAX, attempt_cap: 300, seed: 8, workers: 1, ..CampaignConfig::default() };
    for id in [PropertyId::Logp, PropertyId::Tpsa] {
        let stats = data.split.stats;
        let target = beyond_range_target(id, &stats, &mut rng);
        let report = match generate_until(model, &target, &LatentSampler::Random, &stats, &cfg) {
            Ok(r) => r,
            Err(GenerateError::AttemptCapExceeded { report, .. }) => *report,
            Err(e) => return verdict(false, e.to_string()),
        };
        let max = stats.get(id).max;
        let above = report.molecules.iter().filter(|m| m.props.get(id) > max).count();
        let shift = mean(report.molecules.iter().map(|m| m.props.get(id))) - stats.get(id).mean;
        pass &= above >= 1 && shift > 0.0;
        parts.push(format!(
            "{id} condition {:.2} (train max {max:.2}): {} unique valid, {above} above max, mean shift {shift:+.2}",
            target.get(id),
            report.molecules.len()
        ));
    }
    verdict(pass, parts.join("; "))
}

// ---------------------------------------------------------------- 9

/// Each write-out succeeds with probability `p` and then spells a uniform
/// member of a pool of isotope-labelled undecanes; failures spell methane.
struct Isotopes {
    p: f64,
    pool: u32,
}

impl Generator for Isotopes {
    fn latent_dim(&self) -> usize {
        2
    }

    fn layout(&self) -> ConditionLayout {
        ConditionLayout::default()
    }

    fn seed_latent(&self, _smiles: &str, _stats: &NormalizationStats) -> Result<Vec<f64>, GenerateError> {
        Ok(vec![0.0; 2])
    }

    fn raw_write_outs(&self, _z: &[f64], _c: &[f64], n: usize, _t: f64, rng: &mut ChaCha8Rng) -> Vec<Option<String>> {
        (0..n)
            .map(|_| {
                if rng.random::<f64>() < self.p {
                    Some(format!("[{}CH3]CCCCCCCCCC", rng.random_range(1..=self.pool)))
                } else {
                    Some("C".into())
                }
            })
            .collect()
    }
}

/// Attempts the stub needs, simulated without the campaign code.
fn oracle_attempts(p: f64, pool: u32, quota: usize, writeouts: usize, rng: &mut ChaCha8Rng) -> u64 {
    let mut seen = HashSet::new();
    let mut attempts = 0;
    while seen.len() < quota {
        attempts += 1;
        for _ in 0..writeouts {
            if rng.random::<f64>() < p {
                seen.insert(rng.random_range(1..=pool));
            }
        }
    }
    attempts
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs.iter().copied());
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
}

fn harness_semantics() -> Verdict {
    let (p, pool, quota, writeouts) = (0.002, 999, 20, 100);
    let stub = Isotopes { p, pool };
    let target = property_vector(&parse_smiles("CCCCCCCCCCC").unwrap()).unwrap();
    let golden: Vec<PropertySet> = golden_rows().iter().map(|r| r.props).collect();
    let stats = NormalizationStats::from_properties(&golden).unwrap();
    let same = property_vector(&parse_smiles("[13CH3]CCCCCCCCCC").unwrap()).unwrap();
    let runs = 300;
    let mut campaign = Vec::new();
    for r in 0..runs {
        let cfg = CampaignConfig { quota, seed: 1000 + r, workers: 1, writeouts_per_attempt: writeouts, ..CampaignConfig::default() };
        let report: GenerationReport = generate_until(&stub, &target, &LatentSampler::Random, &stats, &cfg).unwrap();
        campaign.push(report.attempts as f64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let oracle: Vec<f64> = (0..3000).map(|_| oracle_attempts(p, pool, quota, writeouts, &mut rng) as f64).collect();
    let ((mc, vc), (mo, vo)) = (mean_var(&campaign), mean_var(&oracle));
    let sigma = (vc / campaign.len() as f64 + vo / oracle.len() as f64).sqrt();
    let z = (mc - mo).abs() / sigma;

    let aspirin = rates_from_counts(100, 28_840, 32_567, 2_884_000).unwrap();
    let tamiflu = rates_from_counts(100, 15_960, 34_696, 1_596_000).unwrap();
    let table = aspirin.success_rate_printed == 0.34 && tamiflu.success_rate_printed == 0.62;
    verdict(
        same == target && z <= 3.0 && table,
        format!(
            "mean attempts {mc:.2} over {runs} campaigns vs oracle {mo:.2}, |z| {z:.2}; printed rates {} and {} (exact {:.4}%, {:.4}%)",
            aspirin.success_rate_printed, tamiflu.success_rate_printed, aspirin.success_rate_percent, tamiflu.success_rate_percent
        ),
    )
}

// ---------------------------------------------------------------- 10

fn cli_determinism(checkpoint: &Path, dir: &Path) -> Verdict {
    let run = |name: &str| {
        let out = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_molgen"))
            .args(["--seed", "17", "--workers", "1", "-q", "generate", "--checkpoint"])
            .arg(checkpoint)
            .arg("--output")
            .arg(&out)
            .args(["--like", "CC(=O)Oc1ccccc1C(=O)O", "--quota", "5", "--attempt-cap", "40"])
            .status()
            .unwrap();
        (status.code(), std::fs::read(&out).unwrap_or_default())
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    let rows = a.1.iter().filter(|&&c| c == b'\n').count().saturating_sub(1);
    let exit_ok = matches!(a.0, Some(0 | 3)) && a.0 == b.0;
    verdict(
        exit_ok && !a.1.is_empty() && a.1 == b.1,
        format!("exit codes {:?}/{:?}, {} bytes, {rows} molecules, identical {}", a.0, b.0, a.1.len(), a.1 == b.1),
    )
}

// ---------------------------------------------------------------- 11

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pca_correctness(model: &Cvae<f32>, data: &Data) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = 10;
    let gauss = |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<f64>>();
    let u = unit(gauss(&mut rng));
    let mut v = gauss(&mut rng);
    let pr = dot(&u, &v);
    v.iter_mut().zip(&u).for_each(|(x, y)| *x -= pr * y);
    let v = unit(v);
    let offset = gauss(&mut rng);
    let pts: Vec<Vec<f64>> = (0..1000)
        .map(|_| {
            let a = 4.0 * rng.sample::<f64, _>(StandardNormal);
            let b = rng.sample::<f64, _>(StandardNormal);
            (0..d).map(|j| offset[j] + a * u[j] + b * v[j]).collect()
        })
        .collect();
    let pca = pca_project(&pts, 2).unwrap();
    let mut angle: f64 = 0.0;
    for c in &pca.components {
        let inside = dot(c, &u).powi(2) + dot(c, &v).powi(2);
        angle = angle.max((1.0 - inside).max(0.0).sqrt().asin());
    }
    let planted_sum: f64 = pca.explained_variance_ratio.iter().sum();

    let layout = ConditionLayout::default();
    let sample = &data.split.test[..1000];
    let mut latents = Vec::new();
    for chunk in sample.chunks(64) {
        let ex = dataset::to_examples(chunk, &data.vocab, &data.split.stats, &layout).unwrap();
        let seqs: Vec<&[usize]> = ex.iter().map(|e| e.indices.as_slice()).collect();
        let conds: Vec<&[f64]> = ex.iter().map(|e| e.condition.as_slice()).collect();
        let (mu, _) = model.encode_batch(&seqs, &conds).unwrap();
        latents.extend((0..mu.rows()).map(|r| mu.row(r).iter().map(|&x| f64::from(x)).collect::<Vec<f64>>()));
    }
    let latent = pca_project(&latents, 2).unwrap();
    let latent_sum: f64 = latent.explained_variance_ratio.iter().sum();
    verdict(
        angle < 1e-6 && planted_sum <= 1.0 + 1e-12 && latent_sum <= 1.0 + 1e-12,
        format!(
            "planted angle {angle:.2e}, ratio sums {planted_sum:.6} (planted) and {latent_sum:.4} ({} test latents)",
            latents.len()
        ),
    )
}

/// Criterion numbers given on the command line select a subset.
fn selected() -> Vec<u32> {
    let picked: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if picked.is_empty() {
        (1..=11).collect()
    } else {
        picked
    }
}

fn main() {
    let want = selected();
    let on = |id: u32| want.contains(&id);
    let mut run = Run { passed: 0, failures: 0 };
    if on(1) {
        run.check(1, "descriptor golden set", Duration::from_secs(1), golden_descriptors);
    }
    if on(2) {
        run.check(2, "parser robustness", minutes(2), parser_robustness);
    }
    if on(3) {
        run.check(3, "gradient correctness", minutes(5), gradient_checks);
    }
    if on(9) {
        run.check(9, "harness semantics", minutes(5), harness_semantics);
    }
    if want.iter().any(|&id| id >= 4 && id != 9) {
        let data = load_data();
        if on(4) {
            run.check(4, "overfit capacity", minutes(20), || overfit(&data));
        }
        if on(5) {
            run.check(5, "training progress", minutes(30), || training_progress(&data));
        }
        if [6, 7, 8, 10, 11].into_iter().any(on) {
            eprintln!("    desk training on {} molecules", data.train.len());
            let (model, took) = train_desk(&data);
            if on(6) {
                run.check(6, "validity uplift", minutes(125), || validity_uplift(&data, &model, took));
            }
            if on(7) {
                run.check(7, "conditioning effect", minutes(30), || conditioning_effect(&model, &data));
            }
            if on(8) {
                run.check(8, "beyond-range protocol", minutes(30), || beyond_range(&model, &data));
            }
            if on(10) {
                let dir = tempfile::tempdir().unwrap();
                let checkpoint = dir.path().join("desk.ckpt");
                save_checkpoint(&model, &checkpoint).unwrap();
                run.check(10, "generate determinism", minutes(10), || cli_determinism(&checkpoint, dir.path()));
            }
            if on(11) {
                run.check(11, "pca correctness", minutes(5), || pca_correctness(&model, &data));
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", run.passed, run.passed + run.failures);
    if run.failures > 0 {
        std::process::exit(1);
    }
}
