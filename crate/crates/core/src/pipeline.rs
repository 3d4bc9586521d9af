//! The two-stage MSD-Kmeans detector.
//!
//! Stage 1 fences the whole dataset at `mean ± m·std` and removes every
//! point outside as a global outlier. Stage 2 clusters only the survivors
//! with K-means and flags members whose distance to their centroid exceeds
//! `mean + t·std` of that cluster's distances as local outliers. Removed
//! points never influence stage-2 centroids or thresholds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{self, KMeansParams};
use crate::stats::{MsdFence, MsdParams};
use crate::types::{timed, Class, Dataset, DetectionReport, DetectorParams, Stage, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MsdKmeansParams {
    pub msd: MsdParams,
    pub kmeans: KMeansParams,
}

impl MsdKmeansParams {
    pub fn validate(&self) -> Result<()> {
        self.msd.validate()?;
        self.kmeans.validate()
    }
}

pub fn msd_kmeans_detect(data: &Dataset, params: &MsdKmeansParams) -> Result<DetectionReport> {
    params.validate()?;
    let (out, ms) = timed(|| -> Result<_> {
        let fence = MsdFence::fit(data, &params.msd)?;
        let mut verdicts = Vec::with_capacity(data.len());
        let mut survivors = Vec::with_capacity(data.len());
        for (i, x) in data.points().enumerate() {
            let (outside, score) = fence.classify(x);
            if outside {
                verdicts.push(Some(Verdict {
                    index: data.index_of(i),
                    class: Class::GlobalOutlier,
                    stage: Stage::Msd,
                    score,
                }));
            } else {
                verdicts.push(None);
                survivors.push(i);
            }
        }
        let k = params.kmeans.k;
        if survivors.len() < k {
            return Err(Error::InsufficientSurvivors {
                removed: data.len() - survivors.len(),
                survivors: survivors.len(),
                k,
            });
        }

        let normals = data.subset(&survivors);
        let model = kmeans::fit_auto(&normals, &params.kmeans)?;
        let local = kmeans::local_verdicts(&model, &normals, Stage::Kmeans);
        for (&pos, v) in survivors.iter().zip(local) {
            verdicts[pos] = Some(v);
        }
        let verdicts: Vec<Verdict> = verdicts.into_iter().map(Option::unwrap).collect();
        Ok((verdicts, model.summaries()))
    });
    let (verdicts, clusters) = out?;
    let mut report = DetectionReport::new(
        "msd-kmeans",
        verdicts,
        DetectorParams::MsdKmeans(*params),
        ms,
    );
    report.clusters = clusters;
    Ok(report)
}

/// Outlier counts keyed by (class, stage) for a two-stage report.
pub fn stage_breakdown(report: &DetectionReport) -> Result<BTreeMap<(Class, Stage), usize>> {
    if !matches!(report.params, DetectorParams::MsdKmeans(_)) {
        return Err(Error::SingleStageReport(report.detector.clone()));
    }
    let mut counts = BTreeMap::new();
    for v in report.verdicts.iter().filter(|v| v.class.is_outlier()) {
        *counts.entry((v.class, v.stage)).or_insert(0) += 1;
    }
    Ok(counts)
}
