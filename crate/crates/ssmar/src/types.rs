//! Core data containers passed between pipeline stages.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Multichannel recording, one row per channel, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesMatrix {
    /// `d x T` sample matrix.
    pub values: DMatrix<f64>,
    pub sample_rate_hz: f64,
    /// One label per row.
    pub channel_labels: Vec<String>,
}

impl TimeSeriesMatrix {
    /// Validating constructor used at API boundaries.  Internal code may build
    /// the struct directly when the invariants hold by construction.
    pub fn new(
        values: DMatrix<f64>,
        sample_rate_hz: f64,
        channel_labels: Vec<String>,
    ) -> Result<Self> {
        if values.nrows() < 2 || values.ncols() < 2 {
            return Err(Error::invalid(format!(
                "time series needs at least 2 channels and 2 samples, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if channel_labels.len() != values.nrows() {
            return Err(Error::invalid(format!(
                "{} channel labels for {} channels",
                channel_labels.len(),
                values.nrows()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("time series contains non-finite samples"));
        }
        Ok(TimeSeriesMatrix {
            values,
            sample_rate_hz,
            channel_labels,
        })
    }

    /// Labels channels `ch1..chd`.
    pub fn with_default_labels(values: DMatrix<f64>, sample_rate_hz: f64) -> Result<Self> {
        let labels = default_labels(values.nrows());
        Self::new(values, sample_rate_hz, labels)
    }

    pub fn num_channels(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.values.ncols()
    }
}

pub fn default_labels(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("ch{i}")).collect()
}

/// Latent state trajectories, `d x (T+1)`; column `t` holds `x(t)` with
/// column 0 the initial state `x(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentStates {
    pub values: DMatrix<f64>,
}

impl LatentStates {
    pub fn num_channels(&self) -> usize {
        self.values.nrows()
    }

    /// Number of observed time points (columns minus the initial state).
    pub fn num_steps(&self) -> usize {
        self.values.ncols() - 1
    }
}

/// Monte Carlo edge and co-clustering probabilities from one or more chains.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// `clust_prob[(i, j)]`: posterior probability channels i and j share a
    /// cluster.  Symmetric, unit diagonal.
    pub clust_prob: DMatrix<f64>,
    /// `edge_prob[(i, j)]`: posterior probability of a directed edge j -> i.
    pub edge_prob: DMatrix<f64>,
    /// Retained draws behind the averages.
    pub num_samples: usize,
}

impl PosteriorSummary {
    pub fn num_channels(&self) -> usize {
        self.edge_prob.nrows()
    }
}

/// Thresholded point estimate of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEstimate {
    /// Partition of `0..d` into clusters, each sorted, clusters ordered by
    /// smallest member.
    pub clusters: Vec<Vec<usize>>,
    /// Directed edges `(from, to)` meaning `from -> to`.
    pub edges: Vec<(usize, usize)>,
    pub clust_threshold: f64,
    pub edge_threshold: f64,
}
