//! Labeled synthetic data with injected global and local outliers.
//!
//! Normals are Gaussian around `n_clusters` mode centres. With more than one
//! mode the centres sit `6·sigma` apart, symmetric about `normal_mean`.
//! Global outliers are placed above the grand mean by
//! `max(global_offset, 4·grand_sigma)` plus up to half a sigma of uniform
//! jitter. Local outliers sit `local_offset` above their mode centre with
//! ±0.1·sigma uniform jitter; pick `local_offset` between 2 and 3 sigma.
//! The final point order is shuffled.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, Label, RngSeed};

/// A scalar broadcast to every dimension, or one value per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerDim {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PerDim {
    fn len(&self) -> Option<usize> {
        match self {
            PerDim::Scalar(_) => None,
            PerDim::Vector(v) => Some(v.len()),
        }
    }

    fn get(&self, j: usize) -> f64 {
        match self {
            PerDim::Scalar(v) => *v,
            PerDim::Vector(v) => v[j],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_normal: usize,
    pub normal_mean: PerDim,
    pub normal_sigma: PerDim,
    pub n_global: usize,
    pub global_offset: f64,
    pub n_local: usize,
    pub local_offset: f64,
    #[serde(default = "one")]
    pub n_clusters: usize,
    pub seed: RngSeed,
}

fn one() -> usize {
    1
}

const DEFAULT_SPEC: &str = include_str!("../../../../config/synth_default.toml");
const RECOVERY_SPEC: &str = include_str!("../../../../config/synth_recovery.toml");

impl SynthSpec {
    /// The shipped default: 10,000 normals and 50 injected outliers.
    pub fn shipped_default() -> SynthSpec {
        SynthSpec::from_toml_str(DEFAULT_SPEC).expect("shipped default spec parses")
    }

    /// The shipped recovery benchmark: 10,000 normals N(50, 5), 100 globals
    /// at +40 and 50 locals at +12.
    pub fn shipped_recovery() -> SynthSpec {
        SynthSpec::from_toml_str(RECOVERY_SPEC).expect("shipped recovery spec parses")
    }

    pub fn from_toml_str(text: &str) -> Result<SynthSpec> {
        let spec: SynthSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SynthSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SynthSpec::from_toml_str(&text)
    }

    pub fn dimension(&self) -> Result<usize> {
        match (self.normal_mean.len(), self.normal_sigma.len()) {
            (None, None) => Ok(1),
            (Some(a), None) | (None, Some(a)) => Ok(a),
            (Some(a), Some(b)) if a == b => Ok(a),
            (Some(a), Some(b)) => Err(Error::DimensionMismatch {
                expected: a,
                got: b,
            }),
        }
    }

    pub fn total(&self) -> usize {
        self.n_normal + self.n_global + self.n_local
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension()?;
        if d == 0 {
            return Err(Error::invalid(
                "normal_mean",
                "needs at least one dimension",
            ));
        }
        if self.n_clusters == 0 {
            return Err(Error::invalid("n_clusters", "must be at least 1"));
        }
        if self.total() == 0 {
            return Err(Error::invalid("n_normal", "spec produces no points"));
        }
        for j in 0..d {
            if !self.normal_mean.get(j).is_finite() {
                return Err(Error::invalid("normal_mean", "must be finite"));
            }
            let s = self.normal_sigma.get(j);
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::invalid("normal_sigma", "must be finite and >= 0"));
            }
        }
        for (name, v) in [
            ("global_offset", self.global_offset),
            ("local_offset", self.local_offset),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn centre(&self, mode: usize, j: usize) -> f64 {
        let spread = mode as f64 - (self.n_clusters - 1) as f64 / 2.0;
        self.normal_mean.get(j) + spread * 6.0 * self.normal_sigma.get(j)
    }

    fn grand_sigma(&self, j: usize) -> f64 {
        let s = self.normal_sigma.get(j);
        let c = self.n_clusters as f64;
        // Variance of equally weighted centres spaced 6s apart is 36 s² (c² - 1) / 12.
        (s * s + 3.0 * s * s * (c * c - 1.0)).sqrt()
    }
}

/// Generates the labeled dataset described by `spec`. Bit-identical for equal specs.
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let d = spec.dimension()?;
    let mut rng = spec.seed.rng();
    let mut rows: Vec<(Vec<f64>, Label)> = Vec::with_capacity(spec.total());

    for i in 0..spec.n_normal {
        let mode = i % spec.n_clusters;
        let x = (0..d)
            .map(|j| {
                let z: f64 = StandardNormal.sample(&mut rng);
                spec.centre(mode, j) + spec.normal_sigma.get(j) * z
            })
            .collect();
        rows.push((x, Label::Normal));
    }
    for _ in 0..spec.n_global {
        let x = (0..d)
            .map(|j| {
                let g = spec.grand_sigma(j);
                let jitter = rng.random::<f64>() * 0.5 * spec.normal_sigma.get(j);
                spec.normal_mean.get(j) + spec.global_offset.max(4.0 * g) + jitter
            })
            .collect();
        rows.push((x, Label::Outlier));
    }
    for i in 0..spec.n_local {
        let mode = i % spec.n_clusters;
        let x = (0..d)
            .map(|j| {
                let jitter = (rng.random::<f64>() * 2.0 - 1.0) * 0.1 * spec.normal_sigma.get(j);
                spec.centre(mode, j) + spec.local_offset + jitter
            })
            .collect();
        rows.push((x, Label::Outlier));
    }
    rows.shuffle(&mut rng);

    let (values, labels): (Vec<Vec<f64>>, Vec<Label>) = rows.into_iter().unzip();
    Dataset::new(d, values.concat())?.with_labels(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n_normal: usize, n_global: usize, n_local: usize) -> SynthSpec {
        SynthSpec {
            n_normal,
            normal_mean: PerDim::Scalar(50.0),
            normal_sigma: PerDim::Scalar(5.0),
            n_global,
            global_offset: 40.0,
            n_local,
            local_offset: 12.0,
            n_clusters: 1,
            seed: RngSeed(7),
        }
    }

    fn outliers(d: &Dataset) -> usize {
        d.labels()
            .unwrap()
            .iter()
            .filter(|l| l.is_outlier())
            .count()
    }

    #[test]
    fn no_injections_all_normal() {
        let d = generate(&spec(100, 0, 0)).unwrap();
        assert_eq!(outliers(&d), 0);
    }

    #[test]
    fn injected_counts() {
        let d = generate(&spec(1000, 20, 30)).unwrap();
        assert_eq!(d.len(), 1050);
        assert_eq!(outliers(&d), 50);
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            generate(&spec(500, 5, 5)).unwrap(),
            generate(&spec(500, 5, 5)).unwrap()
        );
        let mut other = spec(500, 5, 5);
        other.seed = RngSeed(8);
        assert_ne!(
            generate(&spec(500, 5, 5)).unwrap(),
            generate(&other).unwrap()
        );
    }

    #[test]
    fn placement() {
        let d = generate(&spec(2000, 50, 50)).unwrap();
        for (x, l) in d.points().zip(d.labels().unwrap()) {
            if l.is_outlier() && x[0] > 80.0 {
                assert!((90.0..=92.5).contains(&x[0]));
            } else if l.is_outlier() {
                assert!((61.5..=62.5).contains(&x[0]));
            }
        }
    }

    #[test]
    fn multimodal_multidim() {
        let mut s = spec(600, 10, 10);
        s.normal_mean = PerDim::Vector(vec![0.0, 100.0]);
        s.normal_sigma = PerDim::Scalar(1.0);
        s.n_clusters = 3;
        let d = generate(&s).unwrap();
        assert_eq!(d.dimension(), 2);
        // Modes at -6, 0, +6 in the first dimension.
        let near = |c: f64| d.column(0).iter().filter(|v| (*v - c).abs() < 3.0).count();
        assert!(near(-6.0) > 150 && near(0.0) > 150 && near(6.0) > 150);
    }

    #[test]
    fn shipped_specs() {
        let d = SynthSpec::shipped_default();
        assert_eq!((d.total(), d.n_global + d.n_local), (10_050, 50));
        let r = SynthSpec::shipped_recovery();
        assert_eq!((r.n_normal, r.n_global, r.n_local), (10_000, 100, 50));
        assert_eq!((r.global_offset, r.local_offset), (40.0, 12.0));
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(10, 1, 1);
        s.global_offset = -1.0;
        assert!(generate(&s).is_err());
        let mut s = spec(10, 1, 1);
        s.normal_mean = PerDim::Vector(vec![1.0, 2.0]);
        s.normal_sigma = PerDim::Vector(vec![1.0]);
        assert!(s.validate().is_err());
        assert!(SynthSpec::from_toml_str("n_normal = 3\nbogus = 1").is_err());
    }
}
