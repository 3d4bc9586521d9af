use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "msdk",
    version,
    about = "Two-stage MSD-Kmeans outlier detection and baselines"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one detector and write per-point verdicts.
    Detect(DetectCmd),
    /// Score detectors against the labels of a labelled input.
    Eval(EvalCmd),
    /// Generate a labelled synthetic dataset.
    Synth(SynthCmd),
    /// Time detectors (median of repeated runs).
    Bench(BenchCmd),
    /// Split a verdict file into per-class plot series.
    Report(ReportCmd),
    /// Extract trips between two boxes from a taxi CSV.
    Extract(ExtractCmd),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Structured,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DetectorName {
    Msd,
    Zscore,
    Miqr,
    Kmeans,
    Lof,
    MsdKmeans,
}

impl DetectorName {
    pub const ALL: [DetectorName; 6] = [
        DetectorName::Msd,
        DetectorName::Zscore,
        DetectorName::Miqr,
        DetectorName::Kmeans,
        DetectorName::Lof,
        DetectorName::MsdKmeans,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorName::Msd => "msd",
            DetectorName::Zscore => "zscore",
            DetectorName::Miqr => "miqr",
            DetectorName::Kmeans => "kmeans",
            DetectorName::Lof => "lof",
            DetectorName::MsdKmeans => "msd-kmeans",
        }
    }

    pub fn randomized(self) -> bool {
        matches!(
            self,
            DetectorName::Kmeans | DetectorName::MsdKmeans | DetectorName::Lof
        )
    }

    pub fn clustered(self) -> bool {
        matches!(self, DetectorName::Kmeans | DetectorName::MsdKmeans)
    }
}

/// Detector parameters shared by every command that runs detectors.
#[derive(Args, Debug, Clone)]
pub struct DetectorArgs {
    /// RNG seed for K-means initialisation and LOF subsampling [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of K-means clusters.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// MSD fence half-width in standard deviations.
    #[arg(
        short = 'm',
        long,
        default_value_t = 1.0,
        allow_negative_numbers = true
    )]
    pub msd_multiplier: f64,
    /// Intra-cluster threshold multiplier (mean + t * std).
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    pub threshold_multiplier: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iterations: usize,
    /// Z-score threshold.
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub z: f64,
    /// MIQR fence multiplier.
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    pub iqr_k: f64,
    /// LOF neighbourhood size.
    #[arg(long, default_value_t = 20)]
    pub lof_k: usize,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    pub lof_threshold: f64,
    /// Score LOF on a seeded subsample of this many points.
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Run K-means on a thread pool.
    #[arg(long)]
    pub parallel: bool,
    /// Worker threads for --parallel [default: available CPUs]
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DetectCmd {
    #[arg(long, value_enum, default_value_t = DetectorName::MsdKmeans)]
    pub detector: DetectorName,
    /// Interchange CSV to scan.
    #[arg(long)]
    pub input: PathBuf,
    /// Verdict CSV destination [default: stdout]
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the structured summary to this file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(flatten)]
    pub params: DetectorArgs,
}

#[derive(Args, Debug)]
pub struct EvalCmd {
    /// Detectors to compare; repeat the flag [default: all six]
    #[arg(long, value_enum)]
    pub detector: Vec<DetectorName>,
    /// Labelled interchange CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Write the structured document here as well.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(flatten)]
    pub params: DetectorArgs,
}

#[derive(Args, Debug)]
pub struct SynthCmd {
    /// Synthetic spec (TOML) [default: the shipped 10,050-row spec]
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Interchange CSV to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Override the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct BenchCmd {
    /// Detectors to time; repeat the flag [default: all six]
    #[arg(long, value_enum)]
    pub detector: Vec<DetectorName>,
    #[arg(long)]
    pub input: PathBuf,
    /// Runs per row; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(flatten)]
    pub params: DetectorArgs,
}

#[derive(Args, Debug)]
pub struct ReportCmd {
    /// Verdict CSV written by `detect`.
    #[arg(long)]
    pub verdicts: PathBuf,
    /// Interchange CSV the verdicts were computed on.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for the series files (created if missing).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct ExtractCmd {
    /// Raw taxi trip CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Source/destination boxes (TOML) [default: shipped SoHo -> JFK]
    #[arg(long)]
    pub boxes: Option<PathBuf>,
    /// Interchange CSV of fares.
    #[arg(long)]
    pub output: PathBuf,
    /// Side file with trip distance and source row per extracted index.
    #[arg(long)]
    pub distances: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}
