//! Domain types shared by every detector.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::KMeansParams;
use crate::lof::LofParams;
use crate::pipeline::MsdKmeansParams;
use crate::stats::{IqrParams, MsdParams, ZScoreParams};

/// One observation's feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }
}

/// Ground-truth flag attached to a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Outlier,
}

impl Label {
    pub fn is_outlier(self) -> bool {
        self == Label::Outlier
    }
}

/// Ordered, finite, fixed-dimension feature vectors.
///
/// Every point carries a stable index. A freshly built dataset is indexed
/// `0..n`; subsets keep the indices of the dataset they were cut from so
/// verdicts can always be keyed back to the original rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dimension: usize,
    values: Vec<f64>,
    index: Vec<usize>,
    labels: Option<Vec<Label>>,
}

impl Dataset {
    /// Builds a dataset from a row-major buffer of `n * dimension` values.
    pub fn new(dimension: usize, values: Vec<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        if !values.len().is_multiple_of(dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                got: values.len() % dimension,
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: pos / dimension,
            });
        }
        let n = values.len() / dimension;
        Ok(Dataset {
            dimension,
            values,
            index: (0..n).collect(),
            labels: None,
        })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Dataset::new(1, values)
    }

    /// An empty dataset of the given dimension.
    pub fn empty(dimension: usize) -> Result<Self> {
        Dataset::new(dimension, Vec::new())
    }

    pub fn from_vectors(points: Vec<FeatureVector>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::EmptyDataset);
        };
        let dimension = first.dimension();
        let mut values = Vec::with_capacity(points.len() * dimension);
        for p in &points {
            if p.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: p.dimension(),
                });
            }
            values.extend_from_slice(p.as_slice());
        }
        Dataset::new(dimension, values)
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Replaces the stable indices. Indices must be unique.
    pub fn with_index(mut self, index: Vec<usize>) -> Result<Self> {
        if index.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: index.len(),
            });
        }
        let mut seen = HashSet::with_capacity(index.len());
        if let Some(dup) = index.iter().find(|i| !seen.insert(**i)) {
            return Err(Error::Parse(format!("duplicate point index {dup}")));
        }
        self.index = index;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Coordinates of the point at position `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dimension)
    }

    /// Row-major coordinate buffer.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stable index of the point at position `i`.
    pub fn index_of(&self, i: usize) -> usize {
        self.index[i]
    }

    pub fn indices(&self) -> &[usize] {
        &self.index
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    /// Values of dimension `j` for every point.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.points().map(|p| p[j]).collect()
    }

    /// The points at the given positions, keeping their stable indices and labels.
    pub fn subset(&self, positions: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(positions.len() * self.dimension);
        for &p in positions {
            values.extend_from_slice(self.point(p));
        }
        Dataset {
            dimension: self.dimension,
            values,
            index: positions.iter().map(|&p| self.index[p]).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| positions.iter().map(|&p| l[p]).collect()),
        }
    }
}

/// Seed for every randomized step (centroid initialization, subsampling, synthesis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl Default for RngSeed {
    fn default() -> Self {
        RngSeed(42)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Normal,
    GlobalOutlier,
    LocalOutlier,
}

impl Class {
    pub fn is_outlier(self) -> bool {
        self != Class::Normal
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class::Normal => "normal",
            Class::GlobalOutlier => "global_outlier",
            Class::LocalOutlier => "local_outlier",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which stage produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Msd,
    Kmeans,
    Single,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Msd => "msd",
            Stage::Kmeans => "kmeans",
            Stage::Single => "single",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Verdict for one point.
///
/// `score` is detector-specific and only comparable within one report:
/// standardized distance for the fence detectors, distance past the fence
/// for MIQR, intra-distance over threshold for K-means, and the LOF value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub index: usize,
    pub class: Class,
    pub stage: Stage,
    pub score: f64,
}

/// Fitted cluster statistics echoed into cluster-based reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub centroid: Vec<f64>,
    pub members: usize,
    pub distance_mean: f64,
    pub distance_std: f64,
    pub threshold: f64,
}

/// Parameter echo carried by every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "detector", rename_all = "kebab-case")]
pub enum DetectorParams {
    Msd(MsdParams),
    Zscore(ZScoreParams),
    Miqr(IqrParams),
    Kmeans(KMeansParams),
    Lof {
        #[serde(flatten)]
        params: LofParams,
        /// Indices left out of the subsample (reported Normal with score 0).
        unsampled: Vec<usize>,
    },
    MsdKmeans(MsdKmeansParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub detector: String,
    pub verdicts: Vec<Verdict>,
    pub outlier_fraction: f64,
    pub elapsed_ms: f64,
    pub params: DetectorParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clusters: Vec<ClusterSummary>,
}

impl DetectionReport {
    pub(crate) fn new(
        detector: &str,
        verdicts: Vec<Verdict>,
        params: DetectorParams,
        elapsed_ms: f64,
    ) -> Self {
        let outliers = verdicts.iter().filter(|v| v.class.is_outlier()).count();
        let outlier_fraction = if verdicts.is_empty() {
            0.0
        } else {
            outliers as f64 / verdicts.len() as f64
        };
        DetectionReport {
            detector: detector.to_owned(),
            verdicts,
            outlier_fraction,
            elapsed_ms,
            params,
            clusters: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.verdicts.len()
    }

    pub fn outlier_count(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| v.class.is_outlier())
            .count()
    }

    pub fn count(&self, class: Class) -> usize {
        self.verdicts.iter().filter(|v| v.class == class).count()
    }

    /// Indices flagged as any kind of outlier, in report order.
    pub fn outlier_indices(&self) -> Vec<usize> {
        self.verdicts
            .iter()
            .filter(|v| v.class.is_outlier())
            .map(|v| v.index)
            .collect()
    }

    /// Same report with the wall-clock field zeroed, for replay comparisons.
    pub fn without_timing(&self) -> DetectionReport {
        DetectionReport {
            elapsed_ms: 0.0,
            ..self.clone()
        }
    }
}

/// Human-readable one-paragraph summary of a report.
pub fn summarize(report: &DetectionReport) -> String {
    let n = report.n();
    let outliers = report.outlier_count();
    let mut out = format!(
        "{}: {} outliers ({:.2}%) of {} points in {:.3} ms",
        report.detector,
        outliers,
        report.outlier_fraction * 100.0,
        n,
        report.elapsed_ms
    );
    let _ = write!(
        out,
        "\n  normal: {}, global_outlier: {}, local_outlier: {}",
        report.count(Class::Normal),
        report.count(Class::GlobalOutlier),
        report.count(Class::LocalOutlier)
    );
    for (c, cl) in report.clusters.iter().enumerate() {
        let _ = write!(
            out,
            "\n  cluster {}: centroid {:?}, {} members, threshold {:.4}",
            c + 1,
            cl.centroid,
            cl.members,
            cl.threshold
        );
    }
    out
}

/// Runs `f` and returns its output with the elapsed wall-clock time in milliseconds.
pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}
