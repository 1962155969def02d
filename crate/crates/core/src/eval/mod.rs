//! Success criterion, campaign rates, property histograms and latent PCA.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::NormalizationStats;
use crate::descriptors::{PropertyId, PropertySet};
use crate::generate::GenerationReport;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("report has zero attempts")]
    ZeroAttempts,
    #[error("no samples")]
    EmptySamples,
    #[error("need at least {needed} vectors, got {found}")]
    TooFewVectors { needed: usize, found: usize },
    #[error("vectors have differing lengths")]
    RaggedVectors,
    #[error("covariance is zero; no principal axis exists")]
    DegenerateCovariance,
    #[error("tolerance for {0} is not positive")]
    NonPositiveTolerance(PropertyId),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Per-property tolerance: a tenth of the dataset mean (by magnitude).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessCriterion {
    pub tolerances: [f64; 5],
}

impl SuccessCriterion {
    pub fn from_stats(stats: &NormalizationStats) -> Result<Self, EvalError> {
        let mut tolerances = [0.0; 5];
        for (t, id) in tolerances.iter_mut().zip(PropertyId::ALL) {
            *t = 0.1 * stats.get(id).mean.abs();
            if *t <= 0.0 {
                return Err(EvalError::NonPositiveTolerance(id));
            }
        }
        Ok(SuccessCriterion { tolerances })
    }

    pub fn tolerance(&self, id: PropertyId) -> f64 {
        self.tolerances[PropertyId::ALL.iter().position(|&p| p == id).unwrap()]
    }
}

/// True iff every property is within its tolerance of the target.
pub fn is_success(generated: &PropertySet, target: &PropertySet, crit: &SuccessCriterion) -> bool {
    PropertyId::ALL
        .iter()
        .all(|&id| (generated.get(id) - target.get(id)).abs() <= crit.tolerance(id))
}

/// Rates of one campaign. The success percentage is given exactly, rounded
/// half-up to two decimals, and truncated to two decimals (the form that
/// matches published tables).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// valid / writeouts, as a fraction.
    pub validity_rate: f64,
    /// successes / attempts, in percent.
    pub success_rate_percent: f64,
    /// `success_rate_percent` rounded half-up to two decimals.
    pub success_rate_rounded: f64,
    /// `success_rate_percent` truncated to two decimals.
    pub success_rate_printed: f64,
}

/// Hundredths of a percent of `num / den`, truncated, in exact integer
/// arithmetic.
pub fn truncated_percent(num: u64, den: u64) -> f64 {
    (num as u128 * 10_000 / den as u128) as f64 / 100.0
}

/// Hundredths of a percent of `num / den`, rounded half-up.
pub fn rounded_percent(num: u64, den: u64) -> f64 {
    ((2 * num as u128 * 10_000 + den as u128) / (2 * den as u128)) as f64 / 100.0
}

pub fn rates(report: &GenerationReport) -> Result<Rates, EvalError> {
    rates_from_counts(report.successes.len() as u64, report.attempts, report.valid, report.writeouts)
}

pub fn rates_from_counts(successes: u64, attempts: u64, valid: u64, writeouts: u64) -> Result<Rates, EvalError> {
    if attempts == 0 {
        return Err(EvalError::ZeroAttempts);
    }
    Ok(Rates {
        validity_rate: if writeouts == 0 { 0.0 } else { valid as f64 / writeouts as f64 },
        success_rate_percent: 100.0 * successes as f64 / attempts as f64,
        success_rate_rounded: rounded_percent(successes, attempts),
        success_rate_printed: truncated_percent(successes, attempts),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub property: PropertyId,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width bins spanning the sample range (a unit-wide window centred
/// on the value when all samples coincide).
pub fn histogram(samples: &[PropertySet], id: PropertyId, bins: usize) -> Result<Histogram, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptySamples);
    }
    let bins = bins.max(1);
    let values: Vec<f64> = samples.iter().map(|s| s.get(id)).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
    edges[bins] = hi;
    histogram_with_edges(samples, id, edges)
}

/// Counts over given edges: bins are half-open except the last, which is
/// closed. Values outside the edges are not counted.
pub fn histogram_with_edges(samples: &[PropertySet], id: PropertyId, edges: Vec<f64>) -> Result<Histogram, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptySamples);
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0; bins];
    for s in samples {
        let v = s.get(id);
        if v < edges[0] || v > edges[bins] {
            continue;
        }
        let k = edges[1..].partition_point(|&e| e <= v).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { property: id, edges, counts })
}

pub fn mean_property(samples: &[PropertySet], id: PropertyId) -> Option<f64> {
    if samples.is_empty() {
        None
    } else {
        Some(samples.iter().map(|s| s.get(id)).sum::<f64>() / samples.len() as f64)
    }
}

/// Principal axes of a point cloud and the projections onto them.
#[derive(Clone, Debug, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit axes, by descending variance.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// One row per input vector.
    pub coordinates: Vec<Vec<f64>>,
    /// Number of axes with non-zero variance (at most `k`).
    pub rank: usize,
}

const POWER_TOL: f64 = 1e-15;
const POWER_MAX_ITER: usize = 100_000;

/// Projects `vectors` onto the top `k` eigenvectors of their covariance,
/// found by power iteration with deflation. Axes beyond the covariance rank
/// get zero variance and zero coordinates.
pub fn pca_project(vectors: &[Vec<f64>], k: usize) -> Result<Pca, EvalError> {
    let n = vectors.len();
    if n < k + 1 {
        return Err(EvalError::TooFewVectors { needed: k + 1, found: n });
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(EvalError::RaggedVectors);
    }
    let mean: Vec<f64> = (0..d).map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
    let centred: Vec<Vec<f64>> = vectors.iter().map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for v in &centred {
        for i in 0..d {
            for j in i..d {
                cov[i][j] += v[i] * v[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    if trace <= 0.0 {
        return Err(EvalError::DegenerateCovariance);
    }

    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut eigenvalues = Vec::new();
    let mut rank = 0;
    for c in 0..k.min(d) {
        let mut v: Vec<f64> = (0..d).map(|j| 1.0 + 0.01 * ((j * 7 + c * 3) % 11) as f64).collect();
        orthonormalize(&mut v, &components);
        let mut lambda = 0.0;
        for _ in 0..POWER_MAX_ITER {
            let mut w: Vec<f64> = cov.iter().map(|row| dot(row, &v)).collect();
            orthonormalize(&mut w, &components);
            let norm = dot(&w, &w).sqrt();
            if norm == 0.0 {
                lambda = 0.0;
                break;
            }
            let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            lambda = norm;
            v = w;
            if delta < POWER_TOL {
                break;
            }
        }
        let lambda_rq: f64 = dot(&v, &cov.iter().map(|row| dot(row, &v)).collect::<Vec<_>>());
        let lambda = if lambda > 0.0 { lambda_rq.max(0.0) } else { 0.0 };
        if lambda > 1e-12 * trace {
            rank += 1;
            // deflate
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] -= lambda * v[i] * v[j];
                }
            }
            eigenvalues.push(lambda);
        } else {
            eigenvalues.push(0.0);
        }
        components.push(v);
    }
    let explained_variance_ratio = eigenvalues.iter().map(|l| (l / trace).clamp(0.0, 1.0)).collect();
    let coordinates = centred
        .iter()
        .map(|v| components.iter().zip(&eigenvalues).map(|(c, &l)| if l > 0.0 { dot(v, c) } else { 0.0 }).collect())
        .collect();
    Ok(Pca { mean, components, eigenvalues, explained_variance_ratio, coordinates, rank })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes the components along `basis` (twice, for stability) and
/// normalises. Falls back to a fresh coordinate direction if nothing is left.
fn orthonormalize(v: &mut Vec<f64>, basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let p = dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
    }
    let norm = dot(v, v).sqrt();
    if norm > 1e-300 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    } else if !basis.is_empty() {
        for j in 0..v.len() {
            let mut e = vec![0.0; v.len()];
            e[j] = 1.0;
            let mut probe = e.clone();
            for b in basis {
                let p = dot(&probe, b);
                for (x, y) in probe.iter_mut().zip(b) {
                    *x -= p * y;
                }
            }
            if dot(&probe, &probe) > 1e-6 {
                *v = probe;
                orthonormalize(v, basis);
                return;
            }
        }
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, EvalError> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| EvalError::Io { path: path.display().to_string(), source: e })
}

/// `bin_left,bin_right,count`
pub fn write_histogram_csv(h: &Histogram, path: &Path) -> Result<(), EvalError> {
    let mut f = create(path)?;
    let io = |e| EvalError::Io { path: path.display().to_string(), source: e };
    writeln!(f, "bin_left,bin_right,count").map_err(io)?;
    for (i, c) in h.counts.iter().enumerate() {
        writeln!(f, "{},{},{}", h.edges[i], h.edges[i + 1], c).map_err(io)?;
    }
    f.flush().map_err(io)
}

/// `pc1,pc2,mw,logp,tpsa`, one row per projected vector.
pub fn write_pca_csv(pca: &Pca, props: &[PropertySet], path: &Path) -> Result<(), EvalError> {
    let mut f = create(path)?;
    let io = |e| EvalError::Io { path: path.display().to_string(), source: e };
    writeln!(f, "pc1,pc2,mw,logp,tpsa").map_err(io)?;
    for (c, p) in pca.coordinates.iter().zip(props) {
        let pc = |i: usize| c.get(i).copied().unwrap_or(0.0);
        writeln!(f, "{},{},{},{},{}", pc(0), pc(1), p.mw, p.logp, p.tpsa).map_err(io)?;
    }
    f.flush().map_err(io)
}
