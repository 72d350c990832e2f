//! Post-processing of chain output: posterior probabilities, empirical-null
//! threshold calibration, cluster and edge extraction, and the Gelman-Rubin
//! convergence statistic.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sampler::ChainOutput;
use crate::types::{NetworkEstimate, PosteriorSummary, TimeSeriesMatrix};

/// Turn accumulated draws into co-clustering and edge probabilities.
pub fn posterior_summary(out: &ChainOutput) -> Result<PosteriorSummary> {
    if out.n_retained == 0 {
        return Err(Error::invalid("chain retained no draws"));
    }
    let s = out.n_retained as f64;
    let d = out.gamma_sum.nrows();
    let edge_prob = DMatrix::from_fn(d, d, |i, j| out.gamma_sum[(i, j)] as f64 / s);
    let clust_prob = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            1.0
        } else {
            out.same_cluster_sum[(i, j)] as f64 / s
        }
    });
    Ok(PosteriorSummary {
        clust_prob,
        edge_prob,
        num_samples: out.n_retained,
    })
}

/// Cut one segment of length `t_len` per channel out of a long recording,
/// with every pairwise start distance at least `2 t_len` so the segments
/// behave as draws from unconnected channels.
pub fn build_null_dataset(
    long_series: &TimeSeriesMatrix,
    t_len: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<TimeSeriesMatrix> {
    let d = long_series.num_channels();
    let len = long_series.num_samples();
    if t_len < 2 {
        return Err(Error::invalid("segment length must be at least 2"));
    }
    let needed = 2 * t_len * d + t_len;
    if len < needed {
        return Err(Error::invalid(format!(
            "null construction needs at least {needed} samples for {d} channels \
             at segment length {t_len}, got {len}"
        )));
    }

    // Sorted uniforms stretched by the spacing: draw in the slack interval,
    // sort, then add 2 t_len per rank.
    let slack = (len - t_len) - (d - 1) * 2 * t_len;
    let mut offsets: Vec<usize> = (0..d)
        .map(|_| rng.random_range(0..=slack))
        .collect();
    offsets.sort_unstable();
    let mut starts: Vec<usize> = offsets
        .iter()
        .enumerate()
        .map(|(rank, &u)| u + rank * 2 * t_len)
        .collect();
    // Random channel assignment so rank order carries no information.
    for i in (1..d).rev() {
        let j = rng.random_range(0..=i);
        starts.swap(i, j);
    }

    let values = DMatrix::from_fn(d, t_len, |i, s| long_series.values[(i, starts[i] + s)]);
    Ok(TimeSeriesMatrix {
        values,
        sample_rate_hz: long_series.sample_rate_hz,
        channel_labels: long_series.channel_labels.clone(),
    })
}

/// Linear-interpolation empirical quantile (the type-7 convention).
fn type7_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Thresholds at the (1 - pvalue) quantile of the pooled null
/// probabilities: unordered off-diagonal pairs for co-clustering, ordered
/// off-diagonal pairs for edges.
pub fn calibrate_thresholds(
    null_summaries: &[PosteriorSummary],
    pvalue: f64,
) -> Result<(f64, f64)> {
    if !(pvalue > 0.0 && pvalue < 1.0) {
        return Err(Error::invalid("pvalue must lie strictly between 0 and 1"));
    }
    let mut clust_pool = Vec::new();
    let mut edge_pool = Vec::new();
    for s in null_summaries {
        let d = s.clust_prob.nrows();
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                edge_pool.push(s.edge_prob[(i, j)]);
                if i < j {
                    clust_pool.push(s.clust_prob[(i, j)]);
                }
            }
        }
    }
    if clust_pool.is_empty() || edge_pool.is_empty() {
        return Err(Error::invalid("no off-diagonal null probabilities to pool"));
    }
    clust_pool.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edge_pool.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = 1.0 - pvalue;
    Ok((
        type7_quantile(&clust_pool, q),
        type7_quantile(&edge_pool, q),
    ))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of the graph with an edge wherever the
/// co-clustering probability strictly exceeds the threshold.  Components
/// are ordered by smallest member, members ascending.
pub fn extract_clusters(summary: &PosteriorSummary, threshold_m: f64) -> Vec<Vec<usize>> {
    let d = summary.clust_prob.nrows();
    let mut uf = UnionFind::new(d);
    for i in 0..d {
        for j in (i + 1)..d {
            if summary.clust_prob[(i, j)] > threshold_m {
                uf.union(i, j);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; d];
    for i in 0..d {
        let r = uf.find(i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

/// Directed edges (from, to) whose posterior probability strictly exceeds
/// the threshold; self loops are not reported.
pub fn select_edges(summary: &PosteriorSummary, threshold_gamma: f64) -> Vec<(usize, usize)> {
    let d = summary.edge_prob.nrows();
    let mut edges = Vec::new();
    for j in 0..d {
        for i in 0..d {
            if i != j && summary.edge_prob[(i, j)] > threshold_gamma {
                edges.push((j, i));
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Bundle clusters and edges extracted at the given thresholds.
pub fn network_estimate(
    summary: &PosteriorSummary,
    threshold_m: f64,
    threshold_gamma: f64,
) -> NetworkEstimate {
    NetworkEstimate {
        clusters: extract_clusters(summary, threshold_m),
        edges: select_edges(summary, threshold_gamma),
        clust_threshold: threshold_m,
        edge_threshold: threshold_gamma,
    }
}

/// Potential scale reduction factor over parallel chains of equal length.
pub fn gelman_rubin(traces: &[Vec<f64>]) -> Result<f64> {
    let m = traces.len();
    if m < 2 {
        return Err(Error::invalid("need at least two chains"));
    }
    let n = traces[0].len();
    if n < 10 {
        return Err(Error::invalid("chains must have length at least 10"));
    }
    if traces.iter().any(|t| t.len() != n) {
        return Err(Error::invalid("chains must have equal lengths"));
    }
    let nf = n as f64;
    let means: Vec<f64> = traces.iter().map(|t| t.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m as f64;
    let b_var = nf / (m as f64 - 1.0)
        * means.iter().map(|&mu| (mu - grand) * (mu - grand)).sum::<f64>();
    let w = traces
        .iter()
        .zip(&means)
        .map(|(t, &mu)| t.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m as f64;
    if w <= 0.0 {
        return Err(Error::numerical(
            "zero within-chain variance, traces are degenerate",
        ));
    }
    Ok(((nf - 1.0) / nf + b_var / (nf * w)).sqrt())
}
