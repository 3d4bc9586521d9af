use msd_kmeans::kmeans::{kmeans_detect, KMeansParams};
use msd_kmeans::lof::{lof_detect, LofParams};
use msd_kmeans::pipeline::{msd_kmeans_detect, MsdKmeansParams};
use msd_kmeans::stats::{
    miqr_detect, msd_detect, zscore_detect, IqrParams, MsdParams, ZScoreParams,
};
use msd_kmeans::{Dataset, DetectionReport, RngSeed};

use crate::args::{DetectorArgs, DetectorName};

pub const DEFAULT_SEED: u64 = 42;

/// Validated parameters for every detector, built once per command.
#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub seed: RngSeed,
    pub seed_given: bool,
    msd: MsdParams,
    zscore: ZScoreParams,
    miqr: IqrParams,
    kmeans: KMeansParams,
    lof: LofParams,
}

impl Params {
    pub fn from_args(a: &DetectorArgs) -> msd_kmeans::Result<Params> {
        let seed = RngSeed(a.seed.unwrap_or(DEFAULT_SEED));
        let workers = match a.workers {
            Some(w) => w,
            None if a.parallel => std::thread::available_parallelism().map_or(1, |n| n.get()),
            None => 1,
        };
        let kmeans = KMeansParams {
            k: a.k,
            seed,
            max_iterations: a.max_iterations,
            threshold_multiplier: a.threshold_multiplier,
            parallel: a.parallel,
            workers,
        };
        let p = Params {
            seed,
            seed_given: a.seed.is_some(),
            msd: MsdParams {
                multiplier: a.msd_multiplier,
            },
            zscore: ZScoreParams { threshold: a.z },
            miqr: IqrParams {
                multiplier: a.iqr_k,
            },
            kmeans,
            lof: LofParams {
                k_neighbors: a.lof_k,
                lof_threshold: a.lof_threshold,
                sample_size: a.sample_size,
                seed,
            },
        };
        p.msd.validate()?;
        p.zscore.validate()?;
        p.miqr.validate()?;
        p.kmeans.validate()?;
        p.lof.validate()?;
        Ok(p)
    }

    /// Same parameters with the K-means execution mode forced.
    pub fn with_mode(mut self, parallel: bool, workers: usize) -> Params {
        self.kmeans.parallel = parallel;
        self.kmeans.workers = workers;
        self
    }

    pub fn run(
        &self,
        detector: DetectorName,
        data: &Dataset,
    ) -> msd_kmeans::Result<DetectionReport> {
        match detector {
            DetectorName::Msd => msd_detect(data, &self.msd),
            DetectorName::Zscore => zscore_detect(data, &self.zscore),
            DetectorName::Miqr => miqr_detect(data, &self.miqr),
            DetectorName::Kmeans => kmeans_detect(data, &self.kmeans),
            DetectorName::Lof => lof_detect(data, &self.lof),
            DetectorName::MsdKmeans => msd_kmeans_detect(
                data,
                &MsdKmeansParams {
                    msd: self.msd,
                    kmeans: self.kmeans,
                },
            ),
        }
    }

    /// Notes the default seed on stderr when a randomized detector runs without `--seed`.
    pub fn log_seed(&self, detectors: &[DetectorName]) {
        if !self.seed_given && detectors.iter().any(|d| d.randomized()) {
            eprintln!(
                "msdk: using default seed {} (pass --seed to override)",
                self.seed.0
            );
        }
    }
}
