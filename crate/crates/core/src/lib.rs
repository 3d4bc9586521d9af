//! Outlier detection on (mostly univariate) measurement data.
//!
//! The headline detector is [`pipeline::msd_kmeans_detect`]: a
//! mean/standard-deviation fence removes global outliers, then K-means on the
//! survivors flags points unusually far from their cluster centroid. The
//! baselines it is compared against live alongside it:
//!
//! * [`stats`]: MSD fence, Z-score and interquartile (MIQR) fence
//! * [`kmeans`]: Lloyd K-means, also usable on its own as a detector
//! * [`lof`]: Local Outlier Factor
//!
//! [`metrics`] scores any report against ground truth and [`ingest`] turns
//! taxi-trip CSVs or synthetic specs into [`Dataset`]s.
//!
//! With the default `parallel` feature, K-means can spread its assignment
//! step over a rayon pool (bit-identical to the serial fit) and LOF scores
//! points in parallel.

pub mod error;
pub mod exec;
pub mod ingest;
pub mod kmeans;
pub mod lof;
pub mod metrics;
pub mod pipeline;
pub mod stats;
mod types;

pub use error::{Error, Result};
pub use types::{
    summarize, Class, ClusterSummary, Dataset, DetectionReport, DetectorParams, FeatureVector,
    Label, RngSeed, Stage, Verdict,
};
