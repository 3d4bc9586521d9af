//! Single-stage statistical detectors: the mean/standard-deviation fence,
//! Z-score, and the interquartile fence (MIQR).
//!
//! All three are univariate. On a `d > 1` dataset each dimension is fenced
//! on its own and a point is an outlier when any dimension flags it; its
//! score is the largest per-dimension score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{timed, Class, Dataset, DetectionReport, DetectorParams, Stage, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsdParams {
    /// Fence half-width in standard deviations.
    pub multiplier: f64,
}

impl Default for MsdParams {
    fn default() -> Self {
        MsdParams { multiplier: 1.0 }
    }
}

impl MsdParams {
    pub fn validate(&self) -> Result<()> {
        positive("msd_multiplier", self.multiplier)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScoreParams {
    pub threshold: f64,
}

impl Default for ZScoreParams {
    fn default() -> Self {
        ZScoreParams { threshold: 3.0 }
    }
}

impl ZScoreParams {
    pub fn validate(&self) -> Result<()> {
        positive("z", self.threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqrParams {
    /// Fence distance in interquartile ranges beyond Q1 and Q3.
    pub multiplier: f64,
}

impl Default for IqrParams {
    fn default() -> Self {
        IqrParams { multiplier: 1.5 }
    }
}

impl IqrParams {
    pub fn validate(&self) -> Result<()> {
        positive("iqr_k", self.multiplier)
    }
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<()> {
    // Infinity is allowed as a "never flag" limit.
    if v.is_nan() || v <= 0.0 {
        return Err(Error::invalid(name, format!("must be > 0, got {v}")));
    }
    Ok(())
}

/// Mean and population standard deviation of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateStats {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
}

/// Mean and population (divisor `n`) standard deviation, two-pass.
pub fn compute_stats(values: &[f64]) -> Result<UnivariateStats> {
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
    Ok(UnivariateStats {
        mu,
        sigma: var.sqrt(),
        n: values.len(),
    })
}

/// Per-dimension mean ± m·σ fence.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdFence {
    pub stats: Vec<UnivariateStats>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl MsdFence {
    pub fn fit(data: &Dataset, params: &MsdParams) -> Result<Self> {
        params.validate()?;
        if data.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: data.len(),
            });
        }
        let stats = (0..data.dimension())
            .map(|j| compute_stats(&data.column(j)))
            .collect::<Result<Vec<_>>>()?;
        let m = params.multiplier;
        Ok(MsdFence {
            lower: stats.iter().map(|s| s.mu - m * s.sigma).collect(),
            upper: stats.iter().map(|s| s.mu + m * s.sigma).collect(),
            stats,
        })
    }

    /// Whether `x` lies strictly outside the closed fence in any dimension,
    /// and its largest standardized distance from the mean.
    pub fn classify(&self, x: &[f64]) -> (bool, f64) {
        let mut outside = false;
        let mut score = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            let s = &self.stats[j];
            if s.sigma > 0.0 {
                outside |= v < self.lower[j] || v > self.upper[j];
                score = score.max((v - s.mu).abs() / s.sigma);
            }
        }
        (outside, score)
    }
}

fn fence_verdicts(data: &Dataset, mut classify: impl FnMut(&[f64]) -> (bool, f64)) -> Vec<Verdict> {
    data.points()
        .enumerate()
        .map(|(i, x)| {
            let (out, score) = classify(x);
            Verdict {
                index: data.index_of(i),
                class: if out {
                    Class::GlobalOutlier
                } else {
                    Class::Normal
                },
                stage: Stage::Single,
                score,
            }
        })
        .collect()
}

/// Flags points strictly outside `[mu - m·sigma, mu + m·sigma]`.
///
/// Score is `|x - mu| / sigma`, or 0 in a dimension with zero spread.
pub fn msd_detect(data: &Dataset, params: &MsdParams) -> Result<DetectionReport> {
    let (verdicts, ms) = timed(|| -> Result<_> {
        let fence = MsdFence::fit(data, params)?;
        Ok(fence_verdicts(data, |x| fence.classify(x)))
    });
    Ok(DetectionReport::new(
        "msd",
        verdicts?,
        DetectorParams::Msd(*params),
        ms,
    ))
}

/// Splits `data` into (normals, outliers) under the MSD fence.
/// Both halves keep the original stable indices.
pub fn msd_split(data: &Dataset, params: &MsdParams) -> Result<(Dataset, Dataset)> {
    let fence = MsdFence::fit(data, params)?;
    let (outliers, normals): (Vec<usize>, Vec<usize>) =
        (0..data.len()).partition(|&i| fence.classify(data.point(i)).0);
    Ok((data.subset(&normals), data.subset(&outliers)))
}

/// Flags points whose `|x - mu| / sigma` exceeds the threshold.
pub fn zscore_detect(data: &Dataset, params: &ZScoreParams) -> Result<DetectionReport> {
    params.validate()?;
    let (verdicts, ms) = timed(|| -> Result<_> {
        if data.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: data.len(),
            });
        }
        let stats = (0..data.dimension())
            .map(|j| compute_stats(&data.column(j)))
            .collect::<Result<Vec<_>>>()?;
        let z = params.threshold;
        Ok(fence_verdicts(data, |x| {
            let score = x
                .iter()
                .zip(&stats)
                .filter(|(_, s)| s.sigma > 0.0)
                .map(|(v, s)| (v - s.mu).abs() / s.sigma)
                .fold(0.0f64, f64::max);
            (score > z, score)
        }))
    });
    Ok(DetectionReport::new(
        "zscore",
        verdicts?,
        DetectorParams::Zscore(*params),
        ms,
    ))
}

/// Percentile of an ascending-sorted sample, linear interpolation between
/// closest ranks at position `(n - 1)·p`.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
        _ => sorted[lo],
    }
}

/// (Q1, Q3) of an unsorted sample.
pub fn quartiles(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    (
        percentile_sorted(&sorted, 0.25),
        percentile_sorted(&sorted, 0.75),
    )
}

/// Flags points outside `[Q1 - k·IQR, Q3 + k·IQR]`; score is the distance
/// past the nearer fence (0 inside).
pub fn miqr_detect(data: &Dataset, params: &IqrParams) -> Result<DetectionReport> {
    params.validate()?;
    let (verdicts, ms) = timed(|| -> Result<_> {
        if data.len() < 4 {
            return Err(Error::InsufficientData {
                needed: 4,
                got: data.len(),
            });
        }
        let k = params.multiplier;
        let fences: Vec<(f64, f64)> = (0..data.dimension())
            .map(|j| {
                let (q1, q3) = quartiles(&data.column(j));
                let iqr = q3 - q1;
                (q1 - k * iqr, q3 + k * iqr)
            })
            .collect();
        Ok(fence_verdicts(data, |x| {
            let score = x
                .iter()
                .zip(&fences)
                .map(|(&v, &(lo, hi))| (lo - v).max(v - hi).max(0.0))
                .fold(0.0f64, f64::max);
            (score > 0.0, score)
        }))
    });
    Ok(DetectionReport::new(
        "miqr",
        verdicts?,
        DetectorParams::Miqr(*params),
        ms,
    ))
}
