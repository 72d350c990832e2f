//! Directed network inference for multivariate time series.
//!
//! A recorded signal `y_i(t)` is modelled as a noisy 1-d projection of a latent
//! state `x_i(t)`, and the latent states follow a first-order vector
//! autoregression whose coefficient matrix is masked by a binary edge matrix.
//! Edges are given a stochastic blockmodel prior, so channels that share a
//! cluster are a priori densely connected while channels in different clusters
//! are sparsely connected.  A collapsed Gibbs sampler (with the autoregressive
//! weights integrated out of the edge draws) produces posterior edge and
//! co-clustering probabilities; a MAP-EM pass both initialises the chain and
//! selects the number of clusters.
//!
//! The library covers the whole workflow:
//!
//! - [`model`]: parameter containers, priors, forward simulation, joint density
//! - [`statespace`]: Kalman filter, RTS smoother, posterior state draws
//! - [`sampler`]: the Gibbs sweep and full chains with edge/cluster accumulators
//! - [`em`]: data-driven initialisation and MAP-EM with cluster-count selection
//! - [`inference`]: posterior summaries, null calibration, thresholded networks,
//!   convergence diagnostics
//! - [`simgen`]: synthetic benchmark generator and ROC evaluation
//! - [`signal`]: decimation, notch filtering, common-component removal
//! - [`pipeline`]: windowing long recordings, per-period averages, channel
//!   ranking around an event onset
//! - [`runner`], [`io`]: batch orchestration and file formats used by the CLI
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! examples/
//! ├── simulate_benchmark.rs    # clustered VAR benchmark + ROC of a crude baseline
//! ├── fit_small_network.rs     # EM init + Gibbs chain on a 12-channel system
//! ├── cluster_selection.rs     # MAP-EM collapsing d singleton clusters
//! ├── state_smoothing.rs       # filter/smoother/sampled states on one channel
//! ├── null_calibration.rs      # surrogate nulls and 1% thresholds
//! ├── convergence_check.rs     # potential scale reduction across chains
//! ├── preprocess_signals.rs    # decimate, notch, remove shared component
//! └── onset_localization.rs    # windowed fits + per-period averages + ranking
//! ```
//!
//! ```bash
//! cargo run --example simulate_benchmark
//! cargo run --example fit_small_network
//! ```
//!
//! The `ssmar` binary exposes the same steps as subcommands
//! (`simulate`, `fit`, `null`, `calibrate`, `network`, `roc`, `pipeline`,
//! `diag`); every run writes a manifest with its config, seed and input hashes.

pub mod dist;
pub mod em;
pub mod error;
pub mod inference;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod runner;
pub mod sampler;
pub mod signal;
pub mod simgen;
pub mod statespace;
pub mod types;

pub use error::{Error, Result};
pub use model::{Hyperparams, ModelParams};
pub use sampler::{ChainConfig, ChainOutput};
pub use types::{LatentStates, NetworkEstimate, PosteriorSummary, TimeSeriesMatrix};
