//! Local Outlier Factor baseline.
//!
//! Neighbourhoods are exact. The k-distance neighbourhood of a point holds
//! every other point no farther than its k-th nearest neighbour, so ties can
//! make it larger than `k`. Reachability distances are floored at
//! [`REACH_EPSILON`] so densities stay finite on duplicated values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::stats::positive;
use crate::types::{
    timed, Class, Dataset, DetectionReport, DetectorParams, RngSeed, Stage, Verdict,
};

pub const REACH_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LofParams {
    pub k_neighbors: usize,
    pub lof_threshold: f64,
    /// Score only a seeded random subsample of this many points.
    pub sample_size: Option<usize>,
    pub seed: RngSeed,
}

impl Default for LofParams {
    fn default() -> Self {
        LofParams {
            k_neighbors: 20,
            lof_threshold: 1.5,
            sample_size: None,
            seed: RngSeed::default(),
        }
    }
}

impl LofParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::invalid("lof_k", "must be at least 1"));
        }
        if self.sample_size == Some(0) {
            return Err(Error::invalid("sample_size", "must be at least 1"));
        }
        positive("lof_threshold", self.lof_threshold)
    }
}

/// Neighbours of one point as (position, distance), ascending by position.
struct Neighbourhood {
    k_distance: f64,
    members: Vec<(usize, f64)>,
}

#[inline]
fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn neighbourhood_brute(data: &Dataset, p: usize, k: usize) -> Neighbourhood {
    let x = data.point(p);
    let mut dists: Vec<(usize, f64)> = (0..data.len())
        .filter(|&o| o != p)
        .map(|o| (o, euclid(x, data.point(o))))
        .collect();
    let (_, kth, _) = dists.select_nth_unstable_by(k - 1, |a, b| a.1.total_cmp(&b.1));
    let k_distance = kth.1;
    dists.retain(|&(_, d)| d <= k_distance);
    dists.sort_unstable_by_key(|&(o, _)| o);
    Neighbourhood {
        k_distance,
        members: dists,
    }
}

/// Sorted-order neighbour search for univariate data: walk outwards from
/// the point's rank, taking the nearer side each step.
fn neighbourhoods_sorted(data: &Dataset, k: usize) -> Vec<Neighbourhood> {
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        data.point(a)[0]
            .total_cmp(&data.point(b)[0])
            .then(a.cmp(&b))
    });
    let ranks: Vec<usize> = (0..n).collect();
    let mut found = par_map(&ranks, |&r| {
        let p = order[r];
        let x = data.point(p);
        let d = |rank: usize| euclid(x, data.point(order[rank]));
        let (mut lo, mut hi) = (r, r + 1); // candidates: order[lo - 1] and order[hi]
        let mut members = Vec::with_capacity(k + 2);
        let mut k_distance = 0.0;
        while members.len() < k {
            let left = (lo > 0).then(|| d(lo - 1));
            let right = (hi < n).then(|| d(hi));
            let take_left = match (left, right) {
                (Some(l), Some(rt)) => l <= rt,
                (Some(_), None) => true,
                _ => false,
            };
            if take_left {
                lo -= 1;
                k_distance = left.unwrap();
                members.push((order[lo], k_distance));
            } else {
                k_distance = right.unwrap();
                members.push((order[hi], k_distance));
                hi += 1;
            }
        }
        while lo > 0 && d(lo - 1) <= k_distance {
            lo -= 1;
            members.push((order[lo], d(lo)));
        }
        while hi < n && d(hi) <= k_distance {
            members.push((order[hi], d(hi)));
            hi += 1;
        }
        members.sort_unstable_by_key(|&(o, _)| o);
        (
            p,
            Neighbourhood {
                k_distance,
                members,
            },
        )
    });
    found.sort_unstable_by_key(|(p, _)| *p);
    found.into_iter().map(|(_, nb)| nb).collect()
}

fn scores_from(neigh: &[Neighbourhood]) -> Vec<f64> {
    let lrd: Vec<f64> = neigh
        .iter()
        .map(|nb| {
            let total: f64 = nb
                .members
                .iter()
                .map(|&(o, d)| neigh[o].k_distance.max(d).max(REACH_EPSILON))
                .sum();
            nb.members.len() as f64 / total
        })
        .collect();
    neigh
        .iter()
        .zip(&lrd)
        .map(|(nb, &own)| {
            nb.members.iter().map(|&(o, _)| lrd[o] / own).sum::<f64>() / nb.members.len() as f64
        })
        .collect()
}

/// LOF score of every point, by position.
pub fn lof_scores(data: &Dataset, params: &LofParams) -> Result<Vec<f64>> {
    params.validate()?;
    let k = params.k_neighbors;
    if data.len() <= k {
        return Err(Error::InsufficientData {
            needed: k + 1,
            got: data.len(),
        });
    }
    let neigh = if data.dimension() == 1 {
        neighbourhoods_sorted(data, k)
    } else {
        let positions: Vec<usize> = (0..data.len()).collect();
        par_map(&positions, |&p| neighbourhood_brute(data, p, k))
    };
    Ok(scores_from(&neigh))
}

/// Exhaustive O(n²) scoring regardless of dimension.
pub fn lof_scores_exhaustive(data: &Dataset, params: &LofParams) -> Result<Vec<f64>> {
    params.validate()?;
    let k = params.k_neighbors;
    if data.len() <= k {
        return Err(Error::InsufficientData {
            needed: k + 1,
            got: data.len(),
        });
    }
    let positions: Vec<usize> = (0..data.len()).collect();
    let neigh = par_map(&positions, |&p| neighbourhood_brute(data, p, k));
    Ok(scores_from(&neigh))
}

/// Flags points with LOF above `lof_threshold` as local outliers.
pub fn lof_detect(data: &Dataset, params: &LofParams) -> Result<DetectionReport> {
    params.validate()?;
    let (out, ms) = timed(|| -> Result<_> {
        let sampled: Option<Vec<usize>> = match params.sample_size {
            Some(s) if s < data.len() => {
                let mut rng = params.seed.rng();
                let mut idx = rand::seq::index::sample(&mut rng, data.len(), s).into_vec();
                idx.sort_unstable();
                Some(idx)
            }
            _ => None,
        };
        let mut verdicts: Vec<Verdict> = (0..data.len())
            .map(|i| Verdict {
                index: data.index_of(i),
                class: Class::Normal,
                stage: Stage::Single,
                score: 0.0,
            })
            .collect();
        let mut unsampled = Vec::new();
        let positions: Vec<usize> = match &sampled {
            Some(idx) => {
                let mut keep = vec![false; data.len()];
                idx.iter().for_each(|&i| keep[i] = true);
                unsampled = (0..data.len())
                    .filter(|&i| !keep[i])
                    .map(|i| data.index_of(i))
                    .collect();
                idx.clone()
            }
            None => (0..data.len()).collect(),
        };
        let scores = match sampled {
            Some(_) => lof_scores(&data.subset(&positions), params)?,
            None => lof_scores(data, params)?,
        };
        for (&pos, s) in positions.iter().zip(scores) {
            let v = &mut verdicts[pos];
            v.score = s;
            if s > params.lof_threshold {
                v.class = Class::LocalOutlier;
            }
        }
        Ok((verdicts, unsampled))
    });
    let (verdicts, unsampled) = out?;
    Ok(DetectionReport::new(
        "lof",
        verdicts,
        DetectorParams::Lof {
            params: *params,
            unsampled,
        },
        ms,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: usize) -> LofParams {
        LofParams {
            k_neighbors: k,
            ..Default::default()
        }
    }

    #[test]
    fn identical_points_score_one() {
        let d = Dataset::univariate(vec![3.0; 8]).unwrap();
        for s in lof_scores(&d, &params(3)).unwrap() {
            assert_eq!(s, 1.0);
        }
        let d2 = Dataset::new(2, vec![1.0; 16]).unwrap();
        assert!(lof_scores(&d2, &params(3))
            .unwrap()
            .iter()
            .all(|&s| s == 1.0));
    }

    #[test]
    fn duplicated_k_plus_one_times() {
        // Four copies of 5.0 with k = 3 among spread-out points.
        let d = Dataset::univariate(vec![5.0, 5.0, 5.0, 5.0, 20.0, 30.0, 41.0, 55.0]).unwrap();
        let s = lof_scores(&d, &params(3)).unwrap();
        assert!(s[..4].iter().all(|&x| x == 1.0), "{s:?}");
    }

    #[test]
    fn ties_extend_neighbourhood() {
        // 0 has neighbours at 1, -1 and 2: with k = 1 both ±1 are in range.
        let d = Dataset::univariate(vec![0.0, 1.0, -1.0, 2.0]).unwrap();
        let nb = neighbourhood_brute(&d, 0, 1);
        assert_eq!(nb.k_distance, 1.0);
        assert_eq!(nb.members.len(), 2);
        let sorted = neighbourhoods_sorted(&d, 1);
        assert_eq!(sorted[0].members, nb.members);
    }

    #[test]
    fn sorted_path_matches_exhaustive() {
        let v: Vec<f64> = (0..60)
            .map(|i| ((i * 29) % 17) as f64 * 0.5 + (i % 3) as f64)
            .collect();
        let d = Dataset::univariate(v).unwrap();
        let a = lof_scores(&d, &params(4)).unwrap();
        let b = lof_scores_exhaustive(&d, &params(4)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn grid_with_isolated_point() {
        let mut v: Vec<f64> = (0..20).map(f64::from).collect();
        v.push(100.0);
        let d = Dataset::univariate(v).unwrap();
        let r = lof_detect(&d, &params(3)).unwrap();
        assert_eq!(r.outlier_indices(), vec![20]);
        let no = lof_detect(
            &d,
            &LofParams {
                lof_threshold: f64::INFINITY,
                ..params(3)
            },
        )
        .unwrap();
        assert_eq!(no.outlier_count(), 0);
    }

    #[test]
    fn needs_more_points_than_k() {
        let d = Dataset::univariate(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            lof_scores(&d, &params(3)),
            Err(Error::InsufficientData { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn subsample_marks_rest_normal() {
        let v: Vec<f64> = (0..100).map(f64::from).collect();
        let d = Dataset::univariate(v).unwrap();
        let p = LofParams {
            sample_size: Some(30),
            ..params(5)
        };
        let r = lof_detect(&d, &p).unwrap();
        let DetectorParams::Lof { unsampled, .. } = &r.params else {
            panic!()
        };
        assert_eq!(unsampled.len(), 70);
        for &i in unsampled {
            assert_eq!(r.verdicts[i].score, 0.0);
            assert_eq!(r.verdicts[i].class, Class::Normal);
        }
        assert_eq!(r.verdicts.iter().filter(|v| v.score > 0.0).count(), 30);
    }
}
