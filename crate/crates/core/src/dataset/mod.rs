//! Corpus ingestion, property cache, train/test split and statistics.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{canonicalize, parse_smiles};
use crate::codec::{encode_smiles, make_condition, CodecError, ConditionLayout, NormalizationStats, Vocabulary, MAX_LEN};
use crate::cvae::Example;
use crate::descriptors::{property_vector, PropertySet};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: file not found")]
    FileNotFound { path: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("no valid molecules among {lines} lines")]
    AllLinesInvalid { lines: usize },
    #[error("{found} records; at least {needed} are needed to split")]
    TooFewRecords { found: usize, needed: usize },
    #[error("corrupt cache at line {line}: {message}")]
    CorruptCache { line: usize, message: String },
    #[error(transparent)]
    Stats(#[from] CodecError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub canonical_smiles: String,
    pub props: PropertySet,
}

/// Why lines did not become records.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines: usize,
    pub skipped_comments: usize,
    pub invalid: usize,
    pub too_long: usize,
    pub descriptor_failures: usize,
    pub duplicates: usize,
    pub records: usize,
}

enum Outcome {
    Record(DatasetRecord),
    Invalid,
    TooLong,
    DescriptorFailure,
}

fn process(line: &str) -> Outcome {
    if line.chars().count() >= MAX_LEN {
        return Outcome::TooLong;
    }
    let Ok(mol) = parse_smiles(line) else { return Outcome::Invalid };
    let canonical = canonicalize(&mol);
    if canonical.chars().count() >= MAX_LEN {
        return Outcome::TooLong;
    }
    // descriptors are computed on the canonical form so cached values
    // recompute identically from the stored SMILES
    let Ok(canon_mol) = parse_smiles(&canonical) else { return Outcome::Invalid };
    match property_vector(&canon_mol) {
        Ok(props) => Outcome::Record(DatasetRecord { canonical_smiles: canonical, props }),
        Err(_) => Outcome::DescriptorFailure,
    }
}

fn open_text(path: &Path) -> Result<Box<dyn BufRead>, DatasetError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DatasetError::FileNotFound { path: path.display().to_string() },
        _ => DatasetError::Io { path: path.display().to_string(), source: e },
    })?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(flate2::read::GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

/// Reads one SMILES per line (first whitespace-separated field; `#` lines
/// and blanks ignored; `.gz` decompressed), canonicalises, drops invalid,
/// over-long and duplicate molecules, and keeps at most `limit` records in
/// input order. `workers` threads parse in parallel.
pub fn ingest(path: &Path, limit: Option<usize>, workers: usize) -> Result<(Vec<DatasetRecord>, IngestReport), DatasetError> {
    let reader = open_text(path)?;
    let lines = reader
        .lines()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| DatasetError::Io { path: path.display().to_string(), source: e })?;
    ingest_lines(&lines, limit, workers)
}

pub fn ingest_lines<S: AsRef<str> + Sync>(lines: &[S], limit: Option<usize>, workers: usize) -> Result<(Vec<DatasetRecord>, IngestReport), DatasetError> {
    let mut report = IngestReport { lines: lines.len(), ..IngestReport::default() };
    let entries: Vec<&str> = lines
        .iter()
        .filter_map(|l| {
            let t = l.as_ref().trim();
            if t.is_empty() || t.starts_with('#') {
                None
            } else {
                t.split_whitespace().next()
            }
        })
        .collect();
    report.skipped_comments = lines.len() - entries.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let limit = limit.unwrap_or(usize::MAX);
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    // chunks keep memory bounded and let a small limit stop early
    for chunk in entries.chunks(4096) {
        let outcomes: Vec<Outcome> = pool.install(|| chunk.par_iter().map(|l| process(l)).collect());
        for (line, outcome) in chunk.iter().zip(outcomes) {
            match outcome {
                Outcome::Record(r) => {
                    if records.len() >= limit {
                        continue;
                    }
                    if seen.insert(r.canonical_smiles.clone()) {
                        records.push(r);
                    } else {
                        report.duplicates += 1;
                    }
                }
                Outcome::Invalid => {
                    report.invalid += 1;
                    log::debug!("invalid SMILES skipped: {line}");
                }
                Outcome::TooLong => {
                    report.too_long += 1;
                    log::debug!("TooLong: {line}");
                }
                Outcome::DescriptorFailure => report.descriptor_failures += 1,
            }
        }
        if records.len() >= limit {
            break;
        }
    }
    if report.invalid + report.too_long > 0 {
        log::warn!("skipped {} invalid and {} too-long lines", report.invalid, report.too_long);
    }
    report.records = records.len();
    if records.is_empty() {
        return Err(DatasetError::AllLinesInvalid { lines: lines.len() });
    }
    Ok((records, report))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitDataset {
    pub train: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
    /// Over train and test together.
    pub stats: NormalizationStats,
    pub split_seed: u64,
}

pub const MIN_SPLIT_RECORDS: usize = 5;

/// Seeded shuffle, then the first 80 % (rounded) train and the rest test.
pub fn split(records: &[DatasetRecord], seed: u64) -> Result<SplitDataset, DatasetError> {
    if records.len() < MIN_SPLIT_RECORDS {
        return Err(DatasetError::TooFewRecords { found: records.len(), needed: MIN_SPLIT_RECORDS });
    }
    let stats = NormalizationStats::from_properties(records.iter().map(|r| &r.props))?;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (records.len() as f64 * 0.8).round() as usize;
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect();
    Ok(SplitDataset { train: pick(&order[..cut]), test: pick(&order[cut..]), stats, split_seed: seed })
}

pub const CACHE_HEADER: [&str; 6] = ["smiles", "mw", "logp", "hbd", "hba", "tpsa"];

/// Writes `smiles,mw,logp,hbd,hba,tpsa`; floats use the shortest text that
/// parses back to the same value.
pub fn cache_write(records: &[DatasetRecord], path: &Path) -> Result<(), DatasetError> {
    let io = |e: csv::Error| DatasetError::Io { path: path.display().to_string(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(CACHE_HEADER).map_err(io)?;
    for r in records {
        let p = &r.props;
        w.write_record([
            r.canonical_smiles.clone(),
            p.mw.to_string(),
            p.logp.to_string(),
            p.hbd.to_string(),
            p.hba.to_string(),
            p.tpsa.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| DatasetError::Io { path: path.display().to_string(), source: e })
}

/// Reads a cache and spot-checks every hundredth record against a fresh
/// descriptor computation.
pub fn cache_read(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::FileNotFound { path: path.display().to_string() });
    }
    let corrupt = |line: usize, message: String| DatasetError::CorruptCache { line, message };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| DatasetError::Io { path: path.display().to_string(), source: e.into() })?;
    let mut rows = rdr.records();
    let header = rows.next().ok_or_else(|| corrupt(1, "empty file".into()))?.map_err(|e| corrupt(1, e.to_string()))?;
    if header.iter().ne(CACHE_HEADER) {
        return Err(corrupt(1, format!("header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (i, row) in rows.enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| corrupt(line, e.to_string()))?;
        if row.len() != CACHE_HEADER.len() {
            return Err(corrupt(line, format!("{} columns, expected {}", row.len(), CACHE_HEADER.len())));
        }
        let float = |k: usize| row[k].parse::<f64>().map_err(|_| corrupt(line, format!("bad {} value {:?}", CACHE_HEADER[k], &row[k])));
        let count = |k: usize| row[k].parse::<u32>().map_err(|_| corrupt(line, format!("bad {} value {:?}", CACHE_HEADER[k], &row[k])));
        let props = PropertySet { mw: float(1)?, logp: float(2)?, hbd: count(3)?, hba: count(4)?, tpsa: float(5)? };
        out.push(DatasetRecord { canonical_smiles: row[0].to_string(), props });
    }
    for (i, r) in out.iter().enumerate().step_by(100) {
        let fresh = parse_smiles(&r.canonical_smiles).ok().and_then(|m| property_vector(&m).ok());
        if fresh.as_ref() != Some(&r.props) {
            return Err(corrupt(i + 2, format!("properties of {} do not recompute", r.canonical_smiles)));
        }
    }
    Ok(out)
}

/// Sidecar written next to a cache.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub stats: NormalizationStats,
    pub split_seed: u64,
    pub records: usize,
    pub train: usize,
    pub test: usize,
    pub ingest: IngestReport,
}

/// Model inputs for `records`: encoded characters plus the condition
/// vector of each record's own properties.
pub fn to_examples(
    records: &[DatasetRecord],
    vocab: &Vocabulary,
    stats: &NormalizationStats,
    layout: &ConditionLayout,
) -> Result<Vec<Example>, CodecError> {
    records
        .iter()
        .map(|r| {
            Ok(Example {
                indices: encode_smiles(&r.canonical_smiles, vocab)?.indices,
                condition: make_condition(&r.props, stats, layout).values,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(smiles: &[&str]) -> Vec<DatasetRecord> {
        ingest_lines(smiles, None, 1).unwrap().0
    }

    #[test]
    fn ingest_examples() {
        let (r, rep) = ingest_lines(&["CCO", "c1ccccc1", "CC(=O)O"], None, 1).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(rep.records, 3);
        let (r, rep) = ingest_lines(&["CCO", "OCC", "# comment", "", "C1CC"], None, 2).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!((rep.duplicates, rep.invalid, rep.skipped_comments), (1, 1, 2));
        let long = "C".repeat(120);
        let (r, rep) = ingest_lines(&[long.as_str(), "CC"], None, 1).unwrap();
        assert_eq!((r.len(), rep.too_long), (1, 1));
        let (r, _) = ingest_lines(&["C", "CC", "CCC", "CCCC"], Some(2), 1).unwrap();
        assert_eq!(r.len(), 2);
        assert!(matches!(ingest_lines(&["C1CC", "(("], None, 1), Err(DatasetError::AllLinesInvalid { lines: 2 })));
    }

    #[test]
    fn ingest_missing_file() {
        assert!(matches!(ingest(Path::new("/nonexistent/x.smi"), None, 1), Err(DatasetError::FileNotFound { .. })));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let smiles: Vec<String> = (1..=10).map(|n| "C".repeat(n)).collect();
        let recs = records(&smiles.iter().map(String::as_str).collect::<Vec<_>>());
        let s = split(&recs, 42).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        assert_eq!(split(&recs, 42).unwrap(), s);
        assert!(s.train.iter().all(|r| !s.test.contains(r)));
        assert!(matches!(split(&recs[..4], 1), Err(DatasetError::TooFewRecords { found: 4, .. })));
        // two-pass mean oracle
        let mean = recs.iter().map(|r| r.props.mw).sum::<f64>() / recs.len() as f64;
        assert!((s.stats.mw.mean - mean).abs() < 1e-9);
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let recs = records(&["CCO", "CC(=O)Oc1ccccc1C(=O)O", "c1ccc2[nH]ccc2c1", "N#CC(Cl)Br"]);
        cache_write(&recs, &path).unwrap();
        assert_eq!(cache_read(&path).unwrap(), recs);

        let text = std::fs::read_to_string(&path).unwrap();
        let edited = text.replacen("\n", ",extra\n", 2);
        std::fs::write(&path, edited).unwrap();
        assert!(matches!(cache_read(&path), Err(DatasetError::CorruptCache { .. })));

        let tampered = text.replace("46.041864812", "47.0");
        std::fs::write(&path, tampered).unwrap();
        assert!(matches!(cache_read(&path), Err(DatasetError::CorruptCache { line: 2, .. })));
    }

    #[test]
    fn stats_track_new_maxima() {
        let mut recs = records(&["CCO", "CCCO", "CCCCO", "c1ccccc1", "CC(=O)O"]);
        let before = NormalizationStats::from_properties(recs.iter().map(|r| &r.props)).unwrap();
        recs.extend(records(&["CCCCCCCCCCCCCCCCCCCC"]));
        let after = NormalizationStats::from_properties(recs.iter().map(|r| &r.props)).unwrap();
        assert!(after.mw.max > before.mw.max);
    }
}
