//! Batch orchestration behind the CLI and examples: the standard
//! EM-then-Gibbs fit of one dataset, surrogate-null runs for threshold
//! calibration, and the end-to-end onset analysis over a period manifest.
//!
//! Every independent job (null segment, analysis window) gets its own
//! seed derived from the master seed and the job's position, so results
//! do not depend on how many workers run them.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist;
use crate::em::{self, EmFit};
use crate::error::{Error, Result};
use crate::inference::{build_null_dataset, posterior_summary};
use crate::model::{self, Hyperparams, ModelParams};
use crate::pipeline::{
    adc_profile, average_probabilities, segment_series, soz_candidates, split_periods,
    PipelineManifest, SeizureAdc,
};
use crate::sampler::{run_chain, ChainConfig, ChainOutput};
use crate::signal::{downsample, notch_filter, remove_first_pc};
use crate::types::{PosteriorSummary, TimeSeriesMatrix};

/// Settings for one EM-plus-chain fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    /// Cluster-count override; `None` keeps the EM-selected count.
    pub k: Option<usize>,
    pub n_iter: usize,
    pub n_burnin: usize,
    pub thin: usize,
    pub steady_state_tol: Option<f64>,
    pub em_max_iter: usize,
    pub em_tol: f64,
    pub trace_continuous: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            k: None,
            n_iter: 10_000,
            n_burnin: 5_000,
            thin: 1,
            steady_state_tol: Some(1e-9),
            em_max_iter: 200,
            em_tol: 1e-6,
            trace_continuous: true,
        }
    }
}

/// Everything produced by one fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub em: EmFit,
    /// Chain starting point (EM estimate, possibly re-bucketed to a
    /// requested cluster count).
    pub init: ModelParams,
    pub chain: ChainOutput,
    pub summary: PosteriorSummary,
}

/// Restate an estimate with exactly `k` clusters: clusters are ordered by
/// size (largest first), overflow labels collapse into the last bucket,
/// and block probabilities and weights restart from prior midpoints (the
/// chain redraws both in its first sweep).
fn with_cluster_count(theta: &ModelParams, k: usize, h: &Hyperparams) -> Result<ModelParams> {
    if k == 0 {
        return Err(Error::invalid("cluster count must be positive"));
    }
    let old_k = theta.num_clusters();
    let mut sizes = vec![0usize; old_k];
    for &l in &theta.labels {
        sizes[l] += 1;
    }
    let mut order: Vec<usize> = (0..old_k).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(sizes[c]), c));
    let mut rank = vec![0usize; old_k];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let mut out = theta.clone();
    out.labels = theta.labels.iter().map(|&l| rank[l].min(k - 1)).collect();
    out.block_probs = DMatrix::from_fn(k, k, |r, c| {
        if r == c {
            (h.within_lo + 1.0) / 2.0
        } else {
            h.between_hi / 2.0
        }
    });
    out.weights = vec![1.0 / k as f64; k];
    Ok(out)
}

/// EM initialisation (which also selects the cluster count), then one
/// Gibbs chain from the EM estimate.
pub fn fit_dataset(y: &TimeSeriesMatrix, opts: &FitOptions, seed: u64) -> Result<FitResult> {
    let d = y.num_channels();
    let h_full = model::default_hyperparams(d)?;
    let em = em::em_fit(y, &h_full, opts.em_max_iter, opts.em_tol)?;

    let k = opts.k.unwrap_or(em.k_selected);
    let h = model::default_hyperparams(k)?;
    let init = if k == em.params.num_clusters() {
        em.params.clone()
    } else {
        with_cluster_count(&em.params, k, &h)?
    };

    let cfg = ChainConfig {
        n_iter: opts.n_iter,
        n_burnin: opts.n_burnin,
        thin: opts.thin,
        seed,
        k,
        steady_state_tol: opts.steady_state_tol,
        trace_continuous: opts.trace_continuous,
    };
    let chain = run_chain(y, &init, &cfg, &h)?;
    let summary = posterior_summary(&chain)?;
    Ok(FitResult {
        em,
        init,
        chain,
        summary,
    })
}

/// Cut `n_segments` surrogate datasets out of a long recording and fit
/// each one.  The summaries feed threshold calibration; traces are not
/// kept.  Segment jobs run in parallel with per-job seeds.
pub fn run_null(
    long_series: &TimeSeriesMatrix,
    t_len: usize,
    n_segments: usize,
    opts: &FitOptions,
    master_seed: u64,
) -> Result<Vec<PosteriorSummary>> {
    if n_segments == 0 {
        return Err(Error::invalid("need at least one null segment"));
    }
    let mut fit_opts = opts.clone();
    fit_opts.trace_continuous = false;
    (0..n_segments as u64)
        .into_par_iter()
        .map(|job| {
            let mut rng = ChaCha8Rng::seed_from_u64(dist::derive_seed(master_seed, 2 * job));
            let null_y = build_null_dataset(long_series, t_len, &mut rng)?;
            let fit = fit_dataset(&null_y, &fit_opts, dist::derive_seed(master_seed, 2 * job + 1))?;
            Ok(fit.summary)
        })
        .collect()
}

/// Settings for the full onset analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Decimate to this rate first; `None` keeps the input rate.
    pub target_hz: Option<f64>,
    /// Notch frequency; `None` disables the notch.
    pub notch_hz: Option<f64>,
    pub notch_q: f64,
    /// Remove the first principal component of the whole recording.
    pub remove_common: bool,
    pub window_s: f64,
    pub fit: FitOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            target_hz: None,
            notch_hz: Some(60.0),
            notch_q: 30.0,
            remove_common: true,
            window_s: 1.0,
            fit: FitOptions::default(),
        }
    }
}

/// Conditioning stage of the onset analysis, usable on its own.
pub fn preprocess(y: &TimeSeriesMatrix, opts: &PipelineOptions) -> Result<TimeSeriesMatrix> {
    let mut data = match opts.target_hz {
        Some(hz) => downsample(y, hz)?,
        None => y.clone(),
    };
    if let Some(freq) = opts.notch_hz {
        data = notch_filter(&data, freq, opts.notch_q)?;
    }
    if opts.remove_common {
        data = remove_first_pc(&data)?;
    }
    Ok(data)
}

/// Averaged probabilities and connectivity profile of one period.
#[derive(Debug, Clone)]
pub struct PeriodResult {
    pub label: String,
    pub n_windows: usize,
    pub clust_avg: DMatrix<f64>,
    pub edge_avg: DMatrix<f64>,
    pub adc: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SeizureResult {
    pub onset_s: f64,
    /// Period results in manifest order.
    pub periods: Vec<PeriodResult>,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub channel_labels: Vec<String>,
    pub seizures: Vec<SeizureResult>,
    /// Channels whose onset rise clears the baseline fluctuation bar.
    pub candidates: Vec<usize>,
}

/// Full chain: condition the recording, window every period, fit each
/// window, average per period, reduce to connectivity profiles and
/// select onset candidates.
pub fn run_pipeline(
    y: &TimeSeriesMatrix,
    manifest: &PipelineManifest,
    opts: &PipelineOptions,
    master_seed: u64,
) -> Result<PipelineResult> {
    if manifest.seizures.is_empty() {
        return Err(Error::invalid("manifest lists no seizures"));
    }
    let data = preprocess(y, opts)?;

    // One flat deterministic job list so seeds are stable no matter how
    // the pool schedules them.
    let mut jobs: Vec<(usize, usize, TimeSeriesMatrix)> = Vec::new();
    for (si, seizure) in manifest.seizures.iter().enumerate() {
        for (pi, period) in seizure.periods.iter().enumerate() {
            let segments = segment_series(&data, opts.window_s, std::slice::from_ref(period))?;
            for seg in segments {
                jobs.push((si, pi, seg.data));
            }
        }
    }

    let mut fit_opts = opts.fit.clone();
    fit_opts.trace_continuous = false;
    let summaries: Vec<PosteriorSummary> = jobs
        .par_iter()
        .enumerate()
        .map(|(job, (_, _, seg))| {
            let fit = fit_dataset(seg, &fit_opts, dist::derive_seed(master_seed, job as u64))?;
            Ok(fit.summary)
        })
        .collect::<Result<_>>()?;

    let mut seizures = Vec::with_capacity(manifest.seizures.len());
    for (si, seizure) in manifest.seizures.iter().enumerate() {
        let mut periods = Vec::with_capacity(seizure.periods.len());
        for (pi, period) in seizure.periods.iter().enumerate() {
            let group: Vec<PosteriorSummary> = jobs
                .iter()
                .zip(&summaries)
                .filter(|((s, p, _), _)| *s == si && *p == pi)
                .map(|(_, summary)| summary.clone())
                .collect();
            let (clust_avg, edge_avg) = average_probabilities(&group)?;
            let adc = adc_profile(&edge_avg)?;
            periods.push(PeriodResult {
                label: period.label.clone(),
                n_windows: group.len(),
                clust_avg,
                edge_avg,
                adc,
            });
        }
        seizures.push(SeizureResult {
            onset_s: seizure.onset_s,
            periods,
        });
    }

    // Regroup profiles around each onset for candidate selection.
    let mut adc_groups = Vec::with_capacity(manifest.seizures.len());
    for (si, seizure) in manifest.seizures.iter().enumerate() {
        let (pre, post) = split_periods(seizure)?;
        let find = |label: &str| -> Vec<f64> {
            seizures[si]
                .periods
                .iter()
                .find(|p| p.label == label)
                .map(|p| p.adc.clone())
                .unwrap_or_default()
        };
        adc_groups.push(SeizureAdc {
            pre: pre.iter().map(|p| find(&p.label)).collect(),
            post: post.iter().map(|p| find(&p.label)).collect(),
        });
    }
    let candidates = soz_candidates(&adc_groups)?;

    Ok(PipelineResult {
        channel_labels: data.channel_labels.clone(),
        seizures,
        candidates,
    })
}
