//! The orchestration layer: one-dataset fits, surrogate-null batches and
//! the windowed onset analysis, on small instances with short chains.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssmar::pipeline::{PeriodSpec, PipelineManifest, SeizureSpec};
use ssmar::runner::{self, FitOptions, PipelineOptions};
use ssmar::simgen::{generate_example1, SimConfig};
use ssmar::types::TimeSeriesMatrix;

fn quick_fit() -> FitOptions {
    FitOptions {
        k: None,
        n_iter: 120,
        n_burnin: 60,
        thin: 1,
        steady_state_tol: Some(1e-9),
        em_max_iter: 40,
        em_tol: 1e-6,
        trace_continuous: false,
    }
}

fn small_benchmark(seed: u64) -> TimeSeriesMatrix {
    let cfg = SimConfig {
        cluster_sizes: vec![3, 3],
        t_len: 160,
        ..SimConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_example1(&cfg, &mut rng).unwrap().y
}

#[test]
fn fit_produces_consistent_summary() {
    let y = small_benchmark(5);
    let fit = runner::fit_dataset(&y, &quick_fit(), 99).unwrap();

    let d = y.num_channels();
    assert_eq!(fit.summary.edge_prob.nrows(), d);
    assert_eq!(fit.summary.num_samples, 60);
    assert_eq!(fit.init.num_clusters(), fit.em.k_selected);
    // Diagonal dynamics are baked into the generator, so self edges should
    // dominate the posterior.
    let min_diag = (0..d)
        .map(|i| fit.summary.edge_prob[(i, i)])
        .fold(f64::INFINITY, f64::min);
    assert!(min_diag > 0.5, "weak self-edge probability {min_diag}");

    // Same seed, same everything.
    let again = runner::fit_dataset(&y, &quick_fit(), 99).unwrap();
    assert_eq!(again.summary, fit.summary);
    assert_eq!(again.chain.gamma_sum, fit.chain.gamma_sum);
}

#[test]
fn cluster_override_controls_chain_dimension() {
    let y = small_benchmark(6);
    let mut opts = quick_fit();
    opts.k = Some(2);
    let fit = runner::fit_dataset(&y, &opts, 11).unwrap();
    assert_eq!(fit.init.num_clusters(), 2);
    assert!(fit.init.labels.iter().all(|&l| l < 2));

    opts.k = Some(1);
    let fit = runner::fit_dataset(&y, &opts, 11).unwrap();
    // With one cluster every pair always co-clusters.
    let d = y.num_channels();
    assert!(fit
        .summary
        .clust_prob
        .iter()
        .all(|&v| (v - 1.0).abs() < 1e-12));
    assert_eq!(fit.init.labels, vec![0; d]);
}

#[test]
fn null_batch_is_reproducible_and_pool_independent() {
    // Long independent noise recording.
    let mut state = 0x2545f4914f6cdd1du64;
    let mut noise = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let values = DMatrix::from_fn(4, 2600, |_, _| noise());
    let long = TimeSeriesMatrix::with_default_labels(values, 100.0).unwrap();

    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| runner::run_null(&long, 80, 3, &quick_fit(), 1234).unwrap())
    };
    let one = run(1);
    let two = run(2);
    assert_eq!(one.len(), 3);
    for (a, b) in one.iter().zip(&two) {
        assert_eq!(a, b);
    }
    // Null channels are decoupled, so cross-channel edge probabilities
    // should stay moderate on average.
    let mut total = 0.0;
    let mut count = 0;
    for s in &one {
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    total += s.edge_prob[(i, j)];
                    count += 1;
                }
            }
        }
    }
    assert!(total / (count as f64) < 0.6);
}

#[test]
fn pipeline_runs_end_to_end_on_tiny_manifest() {
    // 24 s of 4-channel noise at 50 Hz with a common-mode component the
    // preprocessing must strip.
    let mut rng_state = 77u64;
    let mut noise = || {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let t_len = 1200;
    let shared: Vec<f64> = (0..t_len).map(|t| (0.07 * t as f64).sin()).collect();
    let values = DMatrix::from_fn(4, t_len, |i, t| noise() + 0.8 * (i as f64 + 1.0) * shared[t]);
    let y = TimeSeriesMatrix::with_default_labels(values, 50.0).unwrap();

    let manifest = PipelineManifest {
        seizures: vec![SeizureSpec {
            onset_s: 12.0,
            periods: vec![
                PeriodSpec { label: "pre2".into(), start_s: 0.0, end_s: 6.0 },
                PeriodSpec { label: "pre1".into(), start_s: 6.0, end_s: 12.0 },
                PeriodSpec { label: "post1".into(), start_s: 12.0, end_s: 18.0 },
                PeriodSpec { label: "post2".into(), start_s: 18.0, end_s: 24.0 },
            ],
        }],
    };
    let opts = PipelineOptions {
        target_hz: None,
        notch_hz: Some(10.0),
        notch_q: 30.0,
        remove_common: true,
        window_s: 2.0,
        fit: quick_fit(),
    };
    let result = runner::run_pipeline(&y, &manifest, &opts, 31).unwrap();

    assert_eq!(result.seizures.len(), 1);
    let periods = &result.seizures[0].periods;
    assert_eq!(periods.len(), 4);
    for p in periods {
        assert_eq!(p.n_windows, 3);
        assert_eq!(p.adc.len(), 4);
        assert!(p.adc.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(p.edge_avg.nrows(), 4);
    }
    assert_eq!(periods[0].label, "pre2");
    assert_eq!(periods[3].label, "post2");
    // Pure noise: selection may be empty but must never include every node.
    assert!(result.candidates.len() < 4);

    let again = runner::run_pipeline(&y, &manifest, &opts, 31).unwrap();
    assert_eq!(again.candidates, result.candidates);
    for (a, b) in again.seizures[0].periods.iter().zip(periods) {
        assert_eq!(a.edge_avg, b.edge_avg);
    }
}
