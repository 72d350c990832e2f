//! Windowing of recordings around seizure onsets and the downstream
//! aggregation that turns per-window edge probabilities into onset-zone
//! candidates.
//!
//! The driving quantity is the average directed connectivity of a
//! channel: the mean over sources of the period-averaged edge
//! probabilities into that channel.  A channel is a candidate when its
//! rise from the last pre-onset period to the first post-onset period
//! clears the largest fluctuation seen between the two baseline periods.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{PosteriorSummary, TimeSeriesMatrix};

/// A labeled stretch of a recording, in seconds from its start.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// One seizure: the clinically marked onset and the analysis periods
/// around it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeizureSpec {
    pub onset_s: f64,
    pub periods: Vec<PeriodSpec>,
}

/// On-disk description of the periods to analyze in a recording.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub seizures: Vec<SeizureSpec>,
}

/// A window cut from a recording, tagged with the period it came from.
#[derive(Debug, Clone)]
pub struct Segment {
    pub period_label: String,
    pub data: TimeSeriesMatrix,
}

/// Cut each period into consecutive non-overlapping windows of
/// `window_s` seconds, aligned to the period start.  A trailing partial
/// window is dropped; a period shorter than one window is an error.
pub fn segment_series(
    y: &TimeSeriesMatrix,
    window_s: f64,
    periods: &[PeriodSpec],
) -> Result<Vec<Segment>> {
    if !(window_s > 0.0) {
        return Err(Error::invalid("window length must be positive"));
    }
    let rate = y.sample_rate_hz;
    let window = (window_s * rate).round() as usize;
    if window < 2 {
        return Err(Error::invalid(
            "window must span at least two samples at this rate",
        ));
    }
    let t_len = y.num_samples();
    let mut segments = Vec::new();
    for p in periods {
        if !(p.end_s > p.start_s) || p.start_s < 0.0 {
            return Err(Error::invalid(format!(
                "period {} has an empty or negative time range",
                p.label
            )));
        }
        let start = (p.start_s * rate).round() as usize;
        let end = (p.end_s * rate).round() as usize;
        if end > t_len {
            return Err(Error::invalid(format!(
                "period {} ends at sample {end} but the recording has {t_len}",
                p.label
            )));
        }
        let n_windows = (end - start) / window;
        if n_windows == 0 {
            return Err(Error::invalid(format!(
                "period {} is shorter than one {window_s} s window",
                p.label
            )));
        }
        for w in 0..n_windows {
            let lo = start + w * window;
            let values = DMatrix::from_fn(y.num_channels(), window, |i, t| y.values[(i, lo + t)]);
            segments.push(Segment {
                period_label: p.label.clone(),
                data: TimeSeriesMatrix::new(values, rate, y.channel_labels.clone())?,
            });
        }
    }
    Ok(segments)
}

/// Element-wise mean of the cluster and edge probability matrices over a
/// group of window summaries (typically all windows of one period).
pub fn average_probabilities(summaries: &[PosteriorSummary]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::invalid("cannot average an empty set of summaries"))?;
    let d = first.edge_prob.nrows();
    let mut clust = DMatrix::zeros(d, d);
    let mut edge = DMatrix::zeros(d, d);
    for s in summaries {
        if s.edge_prob.nrows() != d || s.clust_prob.nrows() != d {
            return Err(Error::invalid("summaries differ in channel count"));
        }
        clust += &s.clust_prob;
        edge += &s.edge_prob;
    }
    let n = summaries.len() as f64;
    Ok((clust / n, edge / n))
}

/// Average directed connectivity per target channel: the column means
/// of a period-averaged edge probability matrix.
pub fn adc_profile(edge_prob_avg: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = edge_prob_avg.nrows();
    if d == 0 || edge_prob_avg.ncols() != d {
        return Err(Error::invalid("edge probability matrix must be square"));
    }
    if edge_prob_avg.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::invalid("edge probabilities must lie in [0, 1]"));
    }
    Ok((0..d)
        .map(|j| edge_prob_avg.column(j).sum() / d as f64)
        .collect())
}

/// Per-seizure connectivity profiles, ordered oldest first within each
/// group: `pre` holds the baseline periods before onset and `post` the
/// periods after it.
#[derive(Debug, Clone)]
pub struct SeizureAdc {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

/// Channels whose mean onset rise in average directed connectivity
/// exceeds the largest baseline fluctuation.  The rise is the first
/// post-onset profile minus the last pre-onset one, averaged over
/// seizures; the bar is the largest absolute change between the two
/// most recent pre-onset periods across all channels and seizures.
pub fn soz_candidates(seizures: &[SeizureAdc]) -> Result<Vec<usize>> {
    if seizures.is_empty() {
        return Err(Error::invalid("no seizures to analyze"));
    }
    let d = seizures[0]
        .pre
        .last()
        .map(|v| v.len())
        .ok_or_else(|| Error::invalid("seizure has no pre-onset periods"))?;
    let mut rise_sum = vec![0.0; d];
    let mut baseline_max = f64::NEG_INFINITY;
    for s in seizures {
        if s.pre.len() < 2 {
            return Err(Error::invalid(
                "need at least 2 pre-onset periods to set a baseline",
            ));
        }
        let post1 = s
            .post
            .first()
            .ok_or_else(|| Error::invalid("seizure has no post-onset periods"))?;
        let pre1 = &s.pre[s.pre.len() - 1];
        let pre2 = &s.pre[s.pre.len() - 2];
        if pre1.len() != d || pre2.len() != d || post1.len() != d {
            return Err(Error::invalid("profiles differ in channel count"));
        }
        for j in 0..d {
            rise_sum[j] += post1[j] - pre1[j];
            baseline_max = baseline_max.max((pre1[j] - pre2[j]).abs());
        }
    }
    let n = seizures.len() as f64;
    Ok((0..d)
        .filter(|&j| rise_sum[j] / n > baseline_max)
        .collect())
}

/// Split a seizure's periods into pre- and post-onset groups by their
/// time range, each ordered oldest first.  Periods straddling the onset
/// are an error.
pub fn split_periods(spec: &SeizureSpec) -> Result<(Vec<&PeriodSpec>, Vec<&PeriodSpec>)> {
    let mut pre: Vec<&PeriodSpec> = Vec::new();
    let mut post: Vec<&PeriodSpec> = Vec::new();
    for p in &spec.periods {
        if p.end_s <= spec.onset_s {
            pre.push(p);
        } else if p.start_s >= spec.onset_s {
            post.push(p);
        } else {
            return Err(Error::invalid(format!(
                "period {} straddles the onset at {} s",
                p.label, spec.onset_s
            )));
        }
    }
    pre.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    post.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    Ok((pre, post))
}
