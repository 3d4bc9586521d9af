//! Lloyd K-means with random centroid initialization and per-cluster
//! intra-distance thresholds.
//!
//! The serial and parallel fits share one code path over an [`Executor`];
//! every floating-point reduction is folded over fixed chunks in chunk
//! order, so `fit_parallel` reproduces `fit` bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::stats::positive;
use crate::types::{
    timed, Class, ClusterSummary, Dataset, DetectionReport, DetectorParams, RngSeed, Stage, Verdict,
};

/// Centroid movement below which iteration stops even if labels flicker.
pub const CENTROID_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: RngSeed,
    pub max_iterations: usize,
    /// `t` in the per-cluster threshold `mean + t * std` of intra-distances.
    pub threshold_multiplier: f64,
    pub parallel: bool,
    pub workers: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            k: 2,
            seed: RngSeed::default(),
            max_iterations: 300,
            threshold_multiplier: 1.5,
            parallel: false,
            workers: 1,
        }
    }
}

impl KMeansParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers", "must be at least 1"));
        }
        positive("threshold_multiplier", self.threshold_multiplier)
    }
}

/// Intra-distance statistics of one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub members: usize,
    pub distance_mean: f64,
    /// Population standard deviation of member distances.
    pub distance_std: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    dimension: usize,
    centroids: Vec<f64>,
    assignments: Vec<usize>,
    distances: Vec<f64>,
    per_cluster: Vec<ClusterStats>,
    iterations_run: usize,
    converged: bool,
    wcss_history: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.per_cluster.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dimension..(c + 1) * self.dimension]
    }

    pub fn centroids(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.centroids.chunks_exact(self.dimension)
    }

    /// Cluster index of each point, by position in the fitted dataset.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn per_cluster(&self) -> &[ClusterStats] {
        &self.per_cluster
    }

    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    /// Whether the last iteration left every label unchanged.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Within-cluster sum of squares after the initial assignment and after
    /// every Lloyd iteration.
    pub fn wcss_history(&self) -> &[f64] {
        &self.wcss_history
    }

    /// Distances to the assigned centroid computed at fit time.
    pub fn fitted_distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn summaries(&self) -> Vec<ClusterSummary> {
        self.per_cluster
            .iter()
            .enumerate()
            .map(|(c, s)| ClusterSummary {
                centroid: self.centroid(c).to_vec(),
                members: s.members,
                distance_mean: s.distance_mean,
                distance_std: s.distance_std,
                threshold: s.threshold,
            })
            .collect()
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid and squared distance; ties go to the lowest index.
#[inline]
fn nearest(x: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(x, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Reassigns every point in place. Returns (any label changed, WCSS).
fn assign(ex: &Executor, data: &Dataset, centroids: &[f64], labels: &mut [usize]) -> (bool, f64) {
    let dim = data.dimension();
    let partials = ex.map_chunks_mut(labels, |start, chunk| {
        let mut changed = false;
        let mut wcss = 0.0;
        for (off, label) in chunk.iter_mut().enumerate() {
            let (c, d) = nearest(data.point(start + off), centroids, dim);
            changed |= *label != c;
            *label = c;
            wcss += d;
        }
        (changed, wcss)
    });
    partials
        .into_iter()
        .fold((false, 0.0), |(ch, w), (c, x)| (ch || c, w + x))
}

/// Member means; clusters with no members keep their previous centroid.
fn update(ex: &Executor, data: &Dataset, labels: &[usize], previous: &[f64], k: usize) -> Vec<f64> {
    let dim = data.dimension();
    let partials = ex.map_chunks(data.len(), |range| {
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in range {
            let c = labels[i];
            counts[c] += 1;
            for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(data.point(i)) {
                *s += x;
            }
        }
        (sums, counts)
    });
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (s, c) in partials {
        sums.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        counts.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
    }
    let mut out = previous.to_vec();
    for c in 0..k {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            for j in 0..dim {
                out[c * dim + j] = sums[c * dim + j] / n;
            }
        }
    }
    out
}

/// Gives each empty cluster the farthest member of the currently largest
/// cluster, moving that point's label along with it.
fn repair_empty(data: &Dataset, labels: &mut [usize], centroids: &mut [f64], k: usize) {
    let dim = data.dimension();
    let mut counts = vec![0usize; k];
    for &c in labels.iter() {
        counts[c] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        // Largest cluster, lowest index on ties.
        let largest = (0..k).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
        if counts[largest] < 2 {
            return;
        }
        let donor_centroid = centroids[largest * dim..(largest + 1) * dim].to_vec();
        let mut far = (usize::MAX, -1.0);
        for (i, _) in labels.iter().enumerate().filter(|(_, &c)| c == largest) {
            let d = sq_dist(data.point(i), &donor_centroid);
            if d > far.1 {
                far = (i, d);
            }
        }
        let p = far.0;
        centroids[empty * dim..(empty + 1) * dim].copy_from_slice(data.point(p));
        labels[p] = empty;
        counts[largest] -= 1;
        counts[empty] += 1;
    }
}

fn fit_on(ex: &Executor, data: &Dataset, params: &KMeansParams) -> Result<ClusterModel> {
    params.validate()?;
    let (n, k, dim) = (data.len(), params.k, data.dimension());
    if n < k {
        return Err(Error::InsufficientData { needed: k, got: n });
    }

    let mut rng = params.seed.rng();
    let mut centroids = Vec::with_capacity(k * dim);
    for i in rand::seq::index::sample(&mut rng, n, k).iter() {
        centroids.extend_from_slice(data.point(i));
    }

    let mut labels = vec![0usize; n];
    let (_, wcss0) = assign(ex, data, &centroids, &mut labels);
    let mut wcss_history = vec![wcss0];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iterations {
        iterations += 1;
        repair_empty(data, &mut labels, &mut centroids, k);
        let next = update(ex, data, &labels, &centroids, k);
        let (changed, wcss) = assign(ex, data, &next, &mut labels);
        let shift = next
            .iter()
            .zip(&centroids)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        centroids = next;
        wcss_history.push(wcss);
        converged = !changed;
        if !changed || shift <= CENTROID_EPSILON {
            break;
        }
    }

    let distances: Vec<f64> = labels
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(data.point(i), &centroids[c * dim..(c + 1) * dim]).sqrt())
        .collect();
    let per_cluster = cluster_stats(&distances, &labels, k, params.threshold_multiplier);

    Ok(ClusterModel {
        dimension: dim,
        centroids,
        assignments: labels,
        distances,
        per_cluster,
        iterations_run: iterations,
        converged,
        wcss_history,
    })
}

fn cluster_stats(distances: &[f64], labels: &[usize], k: usize, t: f64) -> Vec<ClusterStats> {
    let mut sum = vec![0.0; k];
    let mut members = vec![0usize; k];
    for (&d, &c) in distances.iter().zip(labels) {
        sum[c] += d;
        members[c] += 1;
    }
    let mean: Vec<f64> = (0..k)
        .map(|c| {
            if members[c] > 0 {
                sum[c] / members[c] as f64
            } else {
                0.0
            }
        })
        .collect();
    let mut sq = vec![0.0; k];
    for (&d, &c) in distances.iter().zip(labels) {
        sq[c] += (d - mean[c]) * (d - mean[c]);
    }
    (0..k)
        .map(|c| {
            let std = if members[c] > 0 {
                (sq[c] / members[c] as f64).sqrt()
            } else {
                0.0
            };
            ClusterStats {
                members: members[c],
                distance_mean: mean[c],
                distance_std: std,
                threshold: mean[c] + t * std,
            }
        })
        .collect()
}

/// Single-threaded Lloyd fit.
pub fn fit(data: &Dataset, params: &KMeansParams) -> Result<ClusterModel> {
    fit_on(&Executor::Serial, data, params)
}

/// Lloyd fit with the assignment and centroid sums spread over
/// `params.workers` threads. Bit-identical to [`fit`] for the same seed.
pub fn fit_parallel(data: &Dataset, params: &KMeansParams) -> Result<ClusterModel> {
    params.validate()?;
    fit_on(&Executor::new(true, params.workers)?, data, params)
}

/// [`fit`] or [`fit_parallel`] depending on `params.parallel`.
pub fn fit_auto(data: &Dataset, params: &KMeansParams) -> Result<ClusterModel> {
    if params.parallel {
        fit_parallel(data, params)
    } else {
        fit(data, params)
    }
}

/// Distance of every point to its assigned centroid.
pub fn intra_distances(model: &ClusterModel, data: &Dataset) -> Result<Vec<f64>> {
    if data.dimension() != model.dimension {
        return Err(Error::DimensionMismatch {
            expected: model.dimension,
            got: data.dimension(),
        });
    }
    if data.len() != model.assignments.len() {
        return Err(Error::LengthMismatch {
            expected: model.assignments.len(),
            got: data.len(),
        });
    }
    Ok(data
        .points()
        .zip(&model.assignments)
        .map(|(x, &c)| sq_dist(x, model.centroid(c)).sqrt())
        .collect())
}

/// Per-cluster threshold `mean + t * std` of member intra-distances.
pub fn cluster_thresholds(model: &ClusterModel) -> Vec<f64> {
    model.per_cluster.iter().map(|s| s.threshold).collect()
}

/// Verdicts for points of `data` under a model fitted on it: a point whose
/// intra-distance exceeds its cluster threshold is a local outlier.
/// Score is distance over threshold, or the raw distance when the threshold is 0.
pub(crate) fn local_verdicts(model: &ClusterModel, data: &Dataset, stage: Stage) -> Vec<Verdict> {
    model
        .distances
        .iter()
        .zip(&model.assignments)
        .enumerate()
        .map(|(i, (&d, &c))| {
            let theta = model.per_cluster[c].threshold;
            Verdict {
                index: data.index_of(i),
                class: if d > theta {
                    Class::LocalOutlier
                } else {
                    Class::Normal
                },
                stage,
                score: if theta > 0.0 { d / theta } else { d },
            }
        })
        .collect()
}

/// K-means alone as an outlier detector.
pub fn kmeans_detect(data: &Dataset, params: &KMeansParams) -> Result<DetectionReport> {
    let (out, ms) = timed(|| -> Result<_> {
        let model = fit_auto(data, params)?;
        Ok((
            local_verdicts(&model, data, Stage::Single),
            model.summaries(),
        ))
    });
    let (verdicts, clusters) = out?;
    let mut report = DetectionReport::new("kmeans", verdicts, DetectorParams::Kmeans(*params), ms);
    report.clusters = clusters;
    Ok(report)
}
