//! Posterior summaries, null construction, threshold calibration and
//! network extraction.

mod common;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssmar::inference::{
    build_null_dataset, calibrate_thresholds, extract_clusters, gelman_rubin, posterior_summary,
    select_edges,
};
use ssmar::sampler::ChainOutput;
use ssmar::types::{PosteriorSummary, TimeSeriesMatrix};

fn summary_from(edge: DMatrix<f64>, clust: DMatrix<f64>) -> PosteriorSummary {
    PosteriorSummary {
        clust_prob: clust,
        edge_prob: edge,
        num_samples: 1000,
    }
}

#[test]
fn summary_probabilities_are_simple_ratios() {
    let d = 3;
    let mut gamma_sum = DMatrix::from_element(d, d, 0u32);
    gamma_sum[(2, 1)] = 250;
    gamma_sum[(0, 0)] = 1000;
    let mut same = DMatrix::from_element(d, d, 0u32);
    for i in 0..d {
        same[(i, i)] = 1000;
    }
    same[(0, 1)] = 1000;
    same[(1, 0)] = 1000;
    let out = ChainOutput {
        gamma_sum,
        same_cluster_sum: same,
        n_retained: 1000,
        traces: Vec::new(),
    };
    let s = posterior_summary(&out).unwrap();
    assert_eq!(s.edge_prob[(2, 1)], 0.25);
    assert_eq!(s.edge_prob[(0, 0)], 1.0);
    assert_eq!(s.clust_prob[(0, 1)], 1.0);
    for i in 0..d {
        assert_eq!(s.clust_prob[(i, i)], 1.0);
        for j in 0..d {
            assert!((0.0..=1.0).contains(&s.edge_prob[(i, j)]));
            assert_eq!(s.clust_prob[(i, j)], s.clust_prob[(j, i)]);
        }
    }

    let empty = ChainOutput {
        gamma_sum: DMatrix::zeros(2, 2),
        same_cluster_sum: DMatrix::zeros(2, 2),
        n_retained: 0,
        traces: Vec::new(),
    };
    assert!(posterior_summary(&empty).is_err());
}

#[test]
fn null_segments_keep_pairwise_spacing() {
    let long = TimeSeriesMatrix::with_default_labels(
        DMatrix::from_fn(2, 10_000, |i, t| (i * 10_000 + t) as f64),
        1.0,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..1000 {
        let null = build_null_dataset(&long, 100, &mut rng).unwrap();
        assert_eq!(null.num_samples(), 100);
        // Channel values encode their source position, so starts can be
        // recovered and the contiguity of each segment verified.
        let start0 = null.values[(0, 0)] as usize;
        let start1 = null.values[(1, 0)] as usize - 10_000;
        for s in 0..100 {
            assert_eq!(null.values[(0, s)], (start0 + s) as f64);
            assert_eq!(null.values[(1, s)], (10_000 + start1 + s) as f64);
        }
        let gap = start0.abs_diff(start1);
        assert!(gap >= 200, "gap {gap}");
        assert!(start0 + 100 <= 10_000 && start1 + 100 <= 10_000);
    }
}

#[test]
fn null_placement_scales_to_many_channels() {
    let d = 62;
    let t_len = 1000;
    let long = TimeSeriesMatrix::with_default_labels(
        DMatrix::from_fn(d, 200_000, |i, t| ((i + 1) * 1_000_000 + t) as f64),
        1.0,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    let null = build_null_dataset(&long, t_len, &mut rng).unwrap();
    let starts: Vec<usize> = (0..d)
        .map(|i| null.values[(i, 0)] as usize - (i + 1) * 1_000_000)
        .collect();
    for i in 0..d {
        for j in (i + 1)..d {
            let gap = starts[i].abs_diff(starts[j]);
            assert!(gap >= 2 * t_len, "pair ({i},{j}) gap {gap}");
        }
    }
}

#[test]
fn infeasible_null_length_is_an_error() {
    let d = 3;
    let t_len = 50;
    // Exactly 2*T*d leaves no room for the last segment.
    let long = TimeSeriesMatrix::with_default_labels(
        DMatrix::from_fn(d, 2 * t_len * d, |_, t| t as f64),
        1.0,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    let err = build_null_dataset(&long, t_len, &mut rng).unwrap_err().to_string();
    assert!(err.contains("350"), "minimum length missing from: {err}");
}

#[test]
fn thresholds_are_pooled_type7_quantiles() {
    // 50 two-channel summaries whose ordered off-diagonal edge
    // probabilities enumerate {0.00, .., 0.99} and whose co-clustering
    // probabilities enumerate {0.00, 0.02, .., 0.98}.
    let summaries: Vec<PosteriorSummary> = (0..50)
        .map(|k| {
            let mut edge = DMatrix::zeros(2, 2);
            edge[(0, 1)] = (2 * k) as f64 / 100.0;
            edge[(1, 0)] = (2 * k + 1) as f64 / 100.0;
            let mut clust = DMatrix::identity(2, 2);
            clust[(0, 1)] = (2 * k) as f64 / 100.0;
            clust[(1, 0)] = (2 * k) as f64 / 100.0;
            summary_from(edge, clust)
        })
        .collect();
    let (thr_m, thr_g) = calibrate_thresholds(&summaries, 0.01).unwrap();
    assert!((thr_g - 0.9801).abs() < 1e-12, "{thr_g}");
    // 50 values 0.00..0.98: h = 49*0.99 = 48.51 between 0.96 and 0.98.
    assert!((thr_m - 0.9702).abs() < 1e-12, "{thr_m}");

    // Monotone in the p-value.
    let mut prev = f64::NEG_INFINITY;
    for &p in &[0.5, 0.2, 0.1, 0.05, 0.01, 0.001] {
        let (_, t) = calibrate_thresholds(&summaries, p).unwrap();
        assert!(t >= prev);
        prev = t;
    }

    assert!(calibrate_thresholds(&summaries, 0.0).is_err());
    assert!(calibrate_thresholds(&summaries, 1.0).is_err());
    assert!(calibrate_thresholds(&[], 0.01).is_err());
}

#[test]
fn degenerate_null_gives_zero_thresholds() {
    let summaries = vec![summary_from(DMatrix::zeros(3, 3), DMatrix::identity(3, 3))];
    let (thr_m, thr_g) = calibrate_thresholds(&summaries, 0.01).unwrap();
    assert_eq!((thr_m, thr_g), (0.0, 0.0));
    let mut edge = DMatrix::zeros(3, 3);
    edge[(2, 0)] = 0.3;
    let fresh = summary_from(edge, DMatrix::identity(3, 3));
    assert_eq!(select_edges(&fresh, thr_g), vec![(0, 2)]);
}

#[test]
fn cluster_extraction_takes_transitive_closure() {
    let mut clust = DMatrix::identity(3, 3);
    clust[(0, 1)] = 0.9;
    clust[(1, 0)] = 0.9;
    clust[(1, 2)] = 0.9;
    clust[(2, 1)] = 0.9;
    clust[(0, 2)] = 0.1;
    clust[(2, 0)] = 0.1;
    let s = summary_from(DMatrix::zeros(3, 3), clust);
    assert_eq!(extract_clusters(&s, 0.5), vec![vec![0, 1, 2]]);
    assert_eq!(extract_clusters(&s, 1.0), vec![vec![0], vec![1], vec![2]]);
    let all_pos = summary_from(DMatrix::zeros(3, 3), DMatrix::from_element(3, 3, 0.2));
    assert_eq!(extract_clusters(&all_pos, 0.0), vec![vec![0, 1, 2]]);
}

#[test]
fn cluster_partition_is_consistent_under_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    for _ in 0..20 {
        let d = 6;
        let mut clust = DMatrix::identity(d, d);
        for i in 0..d {
            for j in (i + 1)..d {
                let v = rng.random::<f64>();
                clust[(i, j)] = v;
                clust[(j, i)] = v;
            }
        }
        let s = summary_from(DMatrix::zeros(d, d), clust.clone());
        let parts = extract_clusters(&s, 0.5);
        // Partition: disjoint and covering.
        let mut seen = vec![false; d];
        for group in &parts {
            for &n in group {
                assert!(!seen[n]);
                seen[n] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));

        // Relabeling by reversal permutes the partition the same way.
        let perm: Vec<usize> = (0..d).rev().collect();
        let permuted = DMatrix::from_fn(d, d, |i, j| clust[(perm[i], perm[j])]);
        let sp = summary_from(DMatrix::zeros(d, d), permuted);
        let parts_p = extract_clusters(&sp, 0.5);
        let mut mapped: Vec<Vec<usize>> = parts
            .iter()
            .map(|g| {
                let mut m: Vec<usize> = g.iter().map(|&n| perm.iter().position(|&p| p == n).unwrap()).collect();
                m.sort_unstable();
                m
            })
            .collect();
        mapped.sort();
        let mut got = parts_p.clone();
        got.sort();
        assert_eq!(mapped, got);
    }
}

#[test]
fn edge_selection_is_strict_and_monotone() {
    let mut edge = DMatrix::zeros(3, 3);
    edge[(1, 0)] = 0.8;
    let s = summary_from(edge, DMatrix::identity(3, 3));
    assert_eq!(select_edges(&s, 0.5), vec![(0, 1)]);
    assert_eq!(select_edges(&s, 0.8), Vec::<(usize, usize)>::new());
    assert!(select_edges(&s, 1.0).is_empty());

    let mut rng = ChaCha8Rng::seed_from_u64(65);
    for _ in 0..20 {
        let edge = DMatrix::from_fn(4, 4, |_, _| rng.random::<f64>());
        let s = summary_from(edge, DMatrix::identity(4, 4));
        let mut prev = select_edges(&s, 0.0);
        for &t in &[0.2, 0.5, 0.7, 0.9, 1.0] {
            let cur = select_edges(&s, t);
            assert!(cur.iter().all(|e| prev.contains(e)), "threshold {t} added edges");
            prev = cur;
        }
    }
}

#[test]
fn gelman_rubin_limits() {
    let n = 5000;
    let chain: Vec<f64> = (0..n).map(|k| ((k * 37 + 11) % 101) as f64).collect();
    let r = gelman_rubin(&[chain.clone(), chain.clone()]).unwrap();
    let expect = ((n as f64 - 1.0) / n as f64).sqrt();
    assert!((r - expect).abs() < 1e-12, "{r} vs {expect}");

    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let chains: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..n).map(|_| ssmar::dist::sample_std_normal(&mut rng)).collect())
        .collect();
    let r = gelman_rubin(&chains).unwrap();
    assert!(r < 1.01, "iid chains gave {r}");

    assert!(gelman_rubin(&[vec![-1.0; 100], vec![1.0; 100]]).is_err());
    assert!(gelman_rubin(&[vec![1.0; 100]]).is_err());
    assert!(gelman_rubin(&[vec![1.0; 100], vec![1.0; 90]]).is_err());
    assert!(gelman_rubin(&[vec![1.0; 5], vec![2.0; 5]]).is_err());
}
