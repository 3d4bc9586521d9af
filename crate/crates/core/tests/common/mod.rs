//! Brute-force reference implementations used as test oracles.
//!
//! These follow the textbook definitions literally and share no code with
//! the library paths they check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` values on a random scale and offset, some with repeats.
pub fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-2.0..3.0));
    let offset = rng.random_range(-100.0..100.0);
    let repeats = rng.random_bool(0.2);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(-1.0..1.0);
            let u = if repeats { (u * 4.0).round() / 4.0 } else { u };
            offset + scale * u.powi(3)
        })
        .collect()
}

/// Mean by direct summation, population standard deviation by direct
/// summation of squared deviations.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut total = 0.0;
    for x in xs {
        total += *x;
    }
    let mu = total / n;
    let mut ss = 0.0;
    for x in xs {
        let dev = *x - mu;
        ss += dev * dev;
    }
    (mu, (ss / n).sqrt())
}

/// Positions strictly outside `[mu - m·sigma, mu + m·sigma]`.
pub fn msd_outliers(xs: &[f64], m: f64) -> Vec<usize> {
    let (mu, sigma) = mean_std(xs);
    let mut out = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        let below = *x < mu - m * sigma;
        let above = *x > mu + m * sigma;
        if below || above {
            out.push(i);
        }
    }
    out
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..a.len() {
        s += (a[j] - b[j]) * (a[j] - b[j]);
    }
    s.sqrt()
}

/// Textbook LOF over row-major `points` of dimension `dim`.
pub fn lof_reference(points: &[f64], dim: usize, k: usize) -> Vec<f64> {
    let n = points.len() / dim;
    let p = |i: usize| &points[i * dim..(i + 1) * dim];

    let mut kdist = vec![0.0; n];
    let mut hoods: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let mut ds: Vec<f64> = (0..n)
            .filter(|&o| o != i)
            .map(|o| dist(p(i), p(o)))
            .collect();
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        kdist[i] = ds[k - 1];
        for o in 0..n {
            if o != i && dist(p(i), p(o)) <= kdist[i] {
                hoods[i].push(o);
            }
        }
    }
    let mut lrd = vec![0.0; n];
    for i in 0..n {
        let mut total = 0.0;
        for &o in &hoods[i] {
            let reach = f64::max(kdist[o], dist(p(i), p(o)));
            total += f64::max(reach, 1e-12);
        }
        lrd[i] = hoods[i].len() as f64 / total;
    }
    let mut lof = vec![0.0; n];
    for i in 0..n {
        let mut ratio = 0.0;
        for &o in &hoods[i] {
            ratio += lrd[o] / lrd[i];
        }
        lof[i] = ratio / hoods[i].len() as f64;
    }
    lof
}

/// Minimum within-cluster sum of squares over every 2-partition of a
/// small univariate sample, with the partition that achieves it
/// (as a bitmask of points in the second cluster).
pub fn best_two_partition(xs: &[f64]) -> (f64, u32) {
    let n = xs.len();
    let mut best = (f64::INFINITY, 0);
    for mask in 1..(1u32 << n) - 1 {
        let mut wcss = 0.0;
        for side in [0, 1] {
            let members: Vec<f64> = (0..n)
                .filter(|i| ((mask >> i) & 1) == side)
                .map(|i| xs[i])
                .collect();
            let (mu, _) = mean_std(&members);
            wcss += members.iter().map(|x| (x - mu).powi(2)).sum::<f64>();
        }
        if wcss < best.0 {
            best = (wcss, mask);
        }
    }
    best
}
