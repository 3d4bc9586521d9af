mod common;

use std::collections::BTreeSet;

use msd_kmeans::ingest::{
    filter_pair, generate, read_interchange, write_interchange, GeoBox, PerDim, SynthSpec,
    TripRecord,
};
use msd_kmeans::kmeans::{self, KMeansParams};
use msd_kmeans::lof::{lof_scores, LofParams};
use msd_kmeans::metrics::evaluate;
use msd_kmeans::pipeline::{msd_kmeans_detect, MsdKmeansParams};
use msd_kmeans::stats::{
    miqr_detect, msd_detect, zscore_detect, IqrParams, MsdParams, ZScoreParams,
};
use msd_kmeans::{Class, Dataset, DetectionReport, Label, RngSeed};
use proptest::prelude::*;

fn uni(v: &[f64]) -> Dataset {
    Dataset::univariate(v.to_vec()).unwrap()
}

fn flagged(r: &DetectionReport) -> BTreeSet<usize> {
    r.outlier_indices().into_iter().collect()
}

/// Small-integer samples keep translation and power-of-two scaling exact.
fn int_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-50i32..50).prop_map(f64::from), 4..60)
}

fn all_three(d: &Dataset, t: f64) -> [BTreeSet<usize>; 3] {
    [
        flagged(&msd_detect(d, &MsdParams { multiplier: t }).unwrap()),
        flagged(&zscore_detect(d, &ZScoreParams { threshold: t }).unwrap()),
        flagged(&miqr_detect(d, &IqrParams { multiplier: t }).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fences_monotone_in_threshold(v in int_values(), a in 0.1f64..4.0, b in 0.1f64..4.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let d = uni(&v);
        for (strict, loose) in all_three(&d, hi).iter().zip(all_three(&d, lo).iter()) {
            prop_assert!(strict.is_subset(loose));
        }
    }

    #[test]
    fn fences_translation_invariant(v in int_values(), c in -1000i32..1000, t in prop::sample::select(vec![0.5, 1.0, 1.5, 2.0, 3.0])) {
        let shifted: Vec<f64> = v.iter().map(|x| x + f64::from(c)).collect();
        prop_assert_eq!(all_three(&uni(&v), t), all_three(&uni(&shifted), t));
    }

    #[test]
    fn fences_scale_equivariant(v in int_values(), e in -8i32..8, t in prop::sample::select(vec![0.5, 1.0, 1.5, 2.0, 3.0])) {
        let s = 2f64.powi(e);
        let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
        prop_assert_eq!(all_three(&uni(&v), t), all_three(&uni(&scaled), t));
    }

    #[test]
    fn kmeans_model_invariants(seed in any::<u64>(), n in 2usize..200, k in 1usize..5, dim in 1usize..3) {
        let mut rng = common::rng(seed);
        let values: Vec<f64> = (0..n * dim).flat_map(|_| common::random_values(&mut rng, 1)).collect();
        let d = Dataset::new(dim, values).unwrap();
        let k = k.min(n);
        let params = KMeansParams { k, seed: RngSeed(seed), ..Default::default() };
        let m = kmeans::fit(&d, &params).unwrap();

        prop_assert!(m.assignments().iter().all(|&c| c < k));
        prop_assert!(m.iterations_run() <= params.max_iterations);

        // Brute-force per-cluster statistics from the raw intra-distances.
        let dist = kmeans::intra_distances(&m, &d).unwrap();
        for (c, s) in m.per_cluster().iter().enumerate() {
            let member_d: Vec<f64> = dist.iter().zip(m.assignments()).filter(|(_, &a)| a == c).map(|(x, _)| *x).collect();
            prop_assert_eq!(member_d.len(), s.members);
            prop_assert!(s.threshold >= s.distance_mean && s.distance_mean >= 0.0);
            if !member_d.is_empty() {
                let (mu, sd) = common::mean_std(&member_d);
                prop_assert!((mu - s.distance_mean).abs() <= 1e-9 * mu.abs().max(1.0));
                prop_assert!((sd - s.distance_std).abs() <= 1e-9 * sd.abs().max(1.0));
                prop_assert!((mu + 1.5 * sd - s.threshold).abs() <= 1e-9 * s.threshold.abs().max(1.0));
            }
        }

        if m.converged() {
            // At label stability, each point is at least as close to its own centroid.
            for (i, x) in d.points().enumerate() {
                let own = dist[i];
                for c in m.centroids() {
                    let other = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    prop_assert!(own <= other + 1e-12 * own.max(1.0));
                }
            }
            // ...and each non-empty centroid is its members' mean.
            for c in 0..k {
                let members: Vec<usize> = (0..n).filter(|&i| m.assignments()[i] == c).collect();
                if members.is_empty() { continue; }
                for j in 0..dim {
                    let col: Vec<f64> = members.iter().map(|&i| d.point(i)[j]).collect();
                    let (mu, _) = common::mean_std(&col);
                    prop_assert!((mu - m.centroid(c)[j]).abs() <= 1e-9 * mu.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn lof_permutation_invariant(seed in any::<u64>(), n in 6usize..60, k in 1usize..5) {
        let mut rng = common::rng(seed);
        let v = common::random_values(&mut rng, n);
        let p = LofParams { k_neighbors: k, ..Default::default() };
        let scores = lof_scores(&uni(&v), &p).unwrap();
        let perm: Vec<usize> = (0..n).rev().collect();
        let shuffled: Vec<f64> = perm.iter().map(|&i| v[i]).collect();
        let s2 = lof_scores(&uni(&shuffled), &p).unwrap();
        for (pos, &orig) in perm.iter().enumerate() {
            prop_assert!((s2[pos] - scores[orig]).abs() <= 1e-9 * scores[orig].abs().max(1.0));
        }
    }

    #[test]
    fn lof_identical_points(n in 3usize..40, value in -1e6f64..1e6) {
        let scores = lof_scores(&uni(&vec![value; n]), &LofParams { k_neighbors: n - 1, ..Default::default() }).unwrap();
        prop_assert!(scores.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn interchange_round_trip(
        rows in prop::collection::vec(prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 3), 1..40),
        labeled in any::<bool>(),
    ) {
        let mut d = Dataset::new(3, rows.concat()).unwrap();
        if labeled {
            let labels = (0..d.len()).map(|i| if i % 3 == 0 { Label::Outlier } else { Label::Normal }).collect();
            d = d.with_labels(labels).unwrap();
        }
        let mut buf = Vec::new();
        write_interchange(&mut buf, &d).unwrap();
        let back = read_interchange(buf.as_slice()).unwrap();
        prop_assert_eq!(back.labels(), d.labels());
        prop_assert_eq!(back.indices(), d.indices());
        for (a, b) in back.values().iter().zip(d.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn pair_filter_idempotent(coords in prop::collection::vec((-74.1f64..-73.7, 40.6f64..40.8, -74.1f64..-73.7, 40.6f64..40.8, 1.0f64..100.0), 0..200)) {
        let records: Vec<TripRecord> = coords.iter().map(|&(plon, plat, dlon, dlat, fare)| TripRecord {
            pickup_lon: plon, pickup_lat: plat, dropoff_lon: dlon, dropoff_lat: dlat,
            trip_distance: 1.0, fare_amount: fare, passenger_count: None, pickup_time: None, dropoff_time: None,
        }).collect();
        let boxes = (GeoBox { min_lon: -74.05, max_lon: -73.9, min_lat: 40.65, max_lat: 40.75 }, GeoBox::JFK);
        let once = filter_pair(&records, &boxes.0, &boxes.1).unwrap();
        prop_assert!(once.source_rows.windows(2).all(|w| w[0] < w[1]));
        let kept: Vec<TripRecord> = once.source_rows.iter().map(|&r| records[r].clone()).collect();
        let twice = filter_pair(&kept, &boxes.0, &boxes.1).unwrap();
        prop_assert_eq!(twice.dataset.values(), once.dataset.values());
        prop_assert_eq!(twice.source_rows, (0..kept.len()).collect::<Vec<_>>());
    }

    #[test]
    fn pipeline_deterministic_and_partitioned(seed in any::<u64>(), n in 10usize..300) {
        let mut rng = common::rng(seed);
        let v = common::random_values(&mut rng, n);
        let d = uni(&v);
        let p = MsdKmeansParams { kmeans: KMeansParams { seed: RngSeed(seed), ..Default::default() }, ..Default::default() };
        let (Ok(a), Ok(b)) = (msd_kmeans_detect(&d, &p), msd_kmeans_detect(&d, &p)) else {
            return Ok(());
        };
        prop_assert_eq!(a.without_timing(), b.without_timing());
        let idx: Vec<usize> = a.verdicts.iter().map(|v| v.index).collect();
        prop_assert_eq!(idx, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn evaluate_is_pure(seed in any::<u64>(), n in 10usize..100) {
        let mut rng = common::rng(seed);
        let v = common::random_values(&mut rng, n);
        let truth: Vec<Label> = v.iter().map(|x| if x.abs() > 50.0 { Label::Outlier } else { Label::Normal }).collect();
        let r = msd_detect(&uni(&v), &MsdParams::default()).unwrap();
        prop_assert_eq!(evaluate(&r, &truth).unwrap(), evaluate(&r, &truth).unwrap());
    }
}

#[test]
fn kmeans_example_is_optimal_two_partition() {
    let v = [1.0, 2.0, 10.0, 11.0];
    let (best_wcss, mask) = common::best_two_partition(&v);
    let m = kmeans::fit(&uni(&v), &KMeansParams::default()).unwrap();
    assert_eq!(*m.wcss_history().last().unwrap(), best_wcss);
    let a = m.assignments();
    for i in 0..4 {
        for j in 0..4 {
            let same_oracle = ((mask >> i) & 1) == ((mask >> j) & 1);
            assert_eq!(a[i] == a[j], same_oracle);
        }
    }
}

#[test]
fn constructed_far_member_in_two_clusters() {
    // Clusters around 0 and 100; one member of the upper cluster sits at 130.
    let mut v: Vec<f64> = (0..10).map(f64::from).collect();
    v.extend((0..10).map(|i| 100.0 + f64::from(i)));
    v.push(130.0);
    let d = uni(&v);
    let r = kmeans::kmeans_detect(&d, &KMeansParams::default()).unwrap();
    assert_eq!(r.outlier_indices(), vec![20]);
}

#[test]
fn msd_flags_nearly_all_injected_globals() {
    let spec = SynthSpec {
        n_normal: 10_000,
        normal_mean: PerDim::Scalar(50.0),
        normal_sigma: PerDim::Scalar(5.0),
        n_global: 100,
        global_offset: 40.0,
        n_local: 0,
        local_offset: 12.0,
        n_clusters: 1,
        seed: RngSeed(3),
    };
    let d = generate(&spec).unwrap();
    let r = msd_detect(&d, &MsdParams::default()).unwrap();
    let labels = d.labels().unwrap();
    let caught = r
        .verdicts
        .iter()
        .zip(labels)
        .filter(|(v, l)| l.is_outlier() && v.class == Class::GlobalOutlier)
        .count();
    assert!(caught >= 99, "caught {caught} of 100");
}

#[test]
fn fit_parallel_matches_serial_on_ten_thousand() {
    let mut rng = common::rng(11);
    let v = common::random_values(&mut rng, 10_000);
    let d = uni(&v);
    let p = KMeansParams {
        parallel: true,
        workers: 4,
        ..Default::default()
    };
    assert_eq!(
        kmeans::fit(&d, &p).unwrap(),
        kmeans::fit_parallel(&d, &p).unwrap()
    );
}
