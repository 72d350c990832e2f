//! Partially collapsed Gibbs sampler over states and parameters.
//!
//! One iteration draws, in fixed order: latent states by FFBS; every
//! (edge, coefficient) pair in a row-major sweep with the coefficient
//! integrated out of the edge draw; cluster labels sequentially; block
//! probabilities; cluster weights; then per-channel gains, noise variances
//! and initial means.  Edge accumulators and co-clustering accumulators are
//! collected after burn-in at the configured thinning.
//!
//! The edge sweep maintains each row's fitted prediction incrementally so a
//! full pass costs O(d^2 T) rather than O(d^3 T).

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dist;
use crate::error::{Error, Result};
use crate::model::{Hyperparams, ModelParams};
use crate::statespace;
use crate::types::{LatentStates, TimeSeriesMatrix};

/// Settings for one chain.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChainConfig {
    pub n_iter: usize,
    pub n_burnin: usize,
    pub thin: usize,
    pub seed: u64,
    /// Cluster count; must match the initial parameters.
    pub k: usize,
    /// Freeze filter gains once predicted covariances settle to this relative
    /// tolerance.  `None` runs the exact recursion every step.
    pub steady_state_tol: Option<f64>,
    /// Record thinned scalar traces (gains, noise variances, block
    /// probabilities, and coefficients when d <= 20).
    pub trace_continuous: bool,
}

impl ChainConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        ChainConfig {
            n_iter: 10_000,
            n_burnin: 5_000,
            thin: 1,
            seed,
            k,
            steady_state_tol: Some(1e-9),
            trace_continuous: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_burnin >= self.n_iter {
            return Err(Error::invalid(format!(
                "burn-in {} must be below iteration count {}",
                self.n_burnin, self.n_iter
            )));
        }
        if self.thin == 0 || self.k == 0 {
            return Err(Error::invalid("thin and k must be positive"));
        }
        Ok(())
    }
}

/// Named scalar trace for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTrace {
    pub name: String,
    pub values: Vec<f64>,
}

/// Accumulated chain results.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    /// Entrywise count of retained draws with the edge present.
    pub gamma_sum: DMatrix<u32>,
    /// Entrywise count of retained draws with channels i and j sharing a
    /// cluster; symmetric, diagonal equals `n_retained`.
    pub same_cluster_sum: DMatrix<u32>,
    pub n_retained: usize,
    pub traces: Vec<ScalarTrace>,
}

/// Log odds of an edge being present, with its coefficient integrated out.
///
/// `s_xx` and `s_xr` are the source-signal energy and the source/residual
/// cross-moment; `prior_prob` is the blockmodel entry for the pair.
pub fn edge_log_odds(s_xx: f64, s_xr: f64, prior_prob: f64, coeff_sd: f64) -> f64 {
    if prior_prob >= 1.0 {
        return f64::INFINITY;
    }
    if prior_prob <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let v = coeff_sd * coeff_sd;
    let denom = 1.0 + v * s_xx;
    prior_prob.ln() - (1.0 - prior_prob).ln() - 0.5 * denom.ln()
        + v * s_xr * s_xr / (2.0 * denom)
}

/// Conditional for an observation gain given state/observation moments.
/// Returns (mean, variance).
pub fn gain_conditional(s_xx: f64, s_xy: f64, noise_var: f64, gain_sd: f64) -> (f64, f64) {
    let var = 1.0 / (s_xx / noise_var + 1.0 / (gain_sd * gain_sd));
    (var * s_xy / noise_var, var)
}

fn sigmoid(log_odds: f64) -> f64 {
    if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    }
}

/// Draw (edge, coefficient); the coefficient comes from its conditional when
/// the edge is on, from the prior otherwise (keeps the full joint invariant).
fn draw_edge_weight(
    s_xx: f64,
    s_xr: f64,
    prior_prob: f64,
    coeff_sd: f64,
    rng: &mut (impl Rng + ?Sized),
) -> (u8, f64) {
    let p_on = sigmoid(edge_log_odds(s_xx, s_xr, prior_prob, coeff_sd));
    let on = rng.random::<f64>() < p_on;
    if on {
        let prec = s_xx + 1.0 / (coeff_sd * coeff_sd);
        let var = 1.0 / prec;
        (1, dist::sample_normal(s_xr * var, var.sqrt(), rng))
    } else {
        (0, dist::sample_normal(0.0, coeff_sd, rng))
    }
}

/// Single-site edge/coefficient update; recomputes the row residual from
/// scratch.  The chain sweep uses the same draw with incremental residuals.
pub fn sample_edge_and_weight(
    i: usize,
    j: usize,
    x: &LatentStates,
    state: &mut ModelParams,
    h: &Hyperparams,
    rng: &mut (impl Rng + ?Sized),
) -> Result<(u8, f64)> {
    let d = state.num_channels();
    if i >= d || j >= d || x.num_channels() != d {
        return Err(Error::invalid("edge indices out of range"));
    }
    let t_len = x.num_steps();
    let mut s_xx = 0.0;
    let mut s_xr = 0.0;
    for t in 1..=t_len {
        let xj = x.values[(j, t - 1)];
        let mut r = x.values[(i, t)];
        for l in 0..d {
            if l != j && state.edge_ind[(i, l)] == 1 {
                r -= state.coeffs[(i, l)] * x.values[(l, t - 1)];
            }
        }
        s_xx += xj * xj;
        s_xr += xj * r;
    }
    let q = state.block_probs[(state.labels[i], state.labels[j])];
    let (g, a) = draw_edge_weight(s_xx, s_xr, q, h.coeff_sd, rng);
    state.edge_ind[(i, j)] = g;
    state.coeffs[(i, j)] = a;
    Ok((g, a))
}

fn ln_bern(bit: u8, q: f64) -> f64 {
    if bit == 1 {
        if q > 0.0 {
            q.ln()
        } else {
            f64::NEG_INFINITY
        }
    } else if q < 1.0 {
        (1.0 - q).ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Unnormalized log conditional pmf of channel i's cluster label.
pub fn label_conditional_log_pmf(state: &ModelParams, i: usize) -> Vec<f64> {
    let d = state.num_channels();
    let k_count = state.num_clusters();
    let mut log_w = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let mut acc = if state.weights[k] > 0.0 {
            state.weights[k].ln()
        } else {
            f64::NEG_INFINITY
        };
        acc += ln_bern(state.edge_ind[(i, i)], state.block_probs[(k, k)]);
        for j in 0..d {
            if j == i {
                continue;
            }
            let mj = state.labels[j];
            acc += ln_bern(state.edge_ind[(i, j)], state.block_probs[(k, mj)]);
            acc += ln_bern(state.edge_ind[(j, i)], state.block_probs[(mj, k)]);
        }
        log_w.push(acc);
    }
    log_w
}

/// Sequential draw of every cluster label from its conditional.
pub fn sample_cluster_labels(
    state: &mut ModelParams,
    rng: &mut (impl Rng + ?Sized),
) -> Result<()> {
    for i in 0..state.num_channels() {
        let log_w = label_conditional_log_pmf(state, i);
        state.labels[i] = dist::sample_categorical_from_log(&log_w, rng)?;
    }
    Ok(())
}

/// Present/absent edge counts per ordered block pair, self-pairs included.
pub(crate) fn block_edge_counts(state: &ModelParams) -> (DMatrix<u32>, DMatrix<u32>) {
    let d = state.num_channels();
    let k = state.num_clusters();
    let mut n1 = DMatrix::zeros(k, k);
    let mut n0 = DMatrix::zeros(k, k);
    for i in 0..d {
        for j in 0..d {
            let cell = (state.labels[i], state.labels[j]);
            if state.edge_ind[(i, j)] == 1 {
                n1[cell] += 1;
            } else {
                n0[cell] += 1;
            }
        }
    }
    (n1, n0)
}

/// Truncated-Beta draws for every block probability; empty blocks fall back
/// to the prior interval.
pub fn sample_block_probs(
    state: &mut ModelParams,
    h: &Hyperparams,
    rng: &mut (impl Rng + ?Sized),
) -> Result<()> {
    let k = state.num_clusters();
    let (n1, n0) = block_edge_counts(state);
    for r in 0..k {
        for c in 0..k {
            let (lo, hi) = if r == c {
                (h.within_lo, 1.0)
            } else {
                (0.0, h.between_hi)
            };
            let a = 1.0 + n1[(r, c)] as f64;
            let b = 1.0 + n0[(r, c)] as f64;
            state.block_probs[(r, c)] = dist::sample_truncated_beta(a, b, lo, hi, rng)?;
        }
    }
    Ok(())
}

/// Dirichlet draw for cluster weights given label counts.
pub fn sample_cluster_weights(
    state: &mut ModelParams,
    h: &Hyperparams,
    rng: &mut (impl Rng + ?Sized),
) -> Result<()> {
    let k = state.num_clusters();
    if h.num_clusters() != k {
        return Err(Error::invalid("hyperparameter cluster count mismatch"));
    }
    let mut alpha = h.cluster_alpha.clone();
    for &m in &state.labels {
        alpha[m] += 1.0;
    }
    state.weights = dist::sample_dirichlet(&alpha, rng)?;
    Ok(())
}

/// Conjugate draws of gains, noise variances and initial means, channel by
/// channel (gain first, then noise, then initial mean).
pub fn sample_observation_params(
    y: &TimeSeriesMatrix,
    x: &LatentStates,
    state: &mut ModelParams,
    h: &Hyperparams,
    rng: &mut (impl Rng + ?Sized),
) -> Result<()> {
    let d = state.num_channels();
    let t_len = y.num_samples();
    if y.num_channels() != d || x.num_channels() != d || x.num_steps() != t_len {
        return Err(Error::invalid("observation/state dimension mismatch"));
    }
    let gain_var = h.gain_sd * h.gain_sd;
    for i in 0..d {
        let mut s_xx = 0.0;
        let mut s_xy = 0.0;
        for t in 1..=t_len {
            let xi = x.values[(i, t)];
            s_xx += xi * xi;
            s_xy += xi * y.values[(i, t - 1)];
        }
        let (mean, var) = gain_conditional(s_xx, s_xy, state.noise_var[i], h.gain_sd);
        state.obs_gain[i] = dist::sample_normal(mean, var.sqrt(), rng);

        let c_i = state.obs_gain[i];
        let mut ssr = 0.0;
        for t in 1..=t_len {
            let r = y.values[(i, t - 1)] - c_i * x.values[(i, t)];
            ssr += r * r;
        }
        state.noise_var[i] = dist::sample_inv_gamma(
            h.noise_shape + 0.5 * t_len as f64,
            h.noise_shape + 0.5 * ssr,
            rng,
        )?;

        let shrink = gain_var / (1.0 + gain_var);
        state.init_mean[i] =
            dist::sample_normal(x.values[(i, 0)] * shrink, shrink.sqrt(), rng);
    }
    Ok(())
}

/// One full Gibbs sweep: latent states by forward-filter backward-sample,
/// then every parameter conditional in the fixed scan order (edges and
/// coefficients, cluster labels, block probabilities, cluster weights,
/// observation parameters).  Returns the sampled states.  This is the
/// exact transition kernel `run_chain` iterates; it is public so custom
/// drivers and kernel-level diagnostics can reuse it.
pub fn gibbs_sweep(
    y: &TimeSeriesMatrix,
    params: &mut ModelParams,
    h: &Hyperparams,
    steady_state_tol: Option<f64>,
    rng: &mut impl Rng,
) -> Result<LatentStates> {
    let d = params.num_channels();
    let t_len = y.num_samples();
    let x = statespace::ffbs_sample_opt(y, params, steady_state_tol, rng)?;
    let mut xlag = vec![vec![0.0f64; t_len]; d];
    let mut xcur = vec![vec![0.0f64; t_len]; d];
    let mut sxx = vec![0.0f64; d];
    for j in 0..d {
        let (lag, cur) = (&mut xlag[j], &mut xcur[j]);
        let mut acc = 0.0;
        for t in 0..t_len {
            let v = x.values[(j, t)];
            lag[t] = v;
            acc += v * v;
            cur[t] = x.values[(j, t + 1)];
        }
        sxx[j] = acc;
    }
    sweep_edges(&xlag, &xcur, &sxx, params, h, rng);
    sample_cluster_labels(params, rng)?;
    sample_block_probs(params, h, rng)?;
    sample_cluster_weights(params, h, rng)?;
    sample_observation_params(y, &x, params, h, rng)?;
    Ok(x)
}

/// Row-major edge sweep over all (i, j) with incremental residual upkeep.
fn sweep_edges(
    xlag: &[Vec<f64>],
    xcur: &[Vec<f64>],
    sxx: &[f64],
    params: &mut ModelParams,
    h: &Hyperparams,
    rng: &mut (impl Rng + ?Sized),
) {
    let d = params.num_channels();
    let t_len = xlag.first().map_or(0, Vec::len);
    let mut fitted = vec![0.0f64; t_len];
    for i in 0..d {
        fitted.fill(0.0);
        for l in 0..d {
            if params.edge_ind[(i, l)] == 1 {
                let a = params.coeffs[(i, l)];
                for (f, &v) in fitted.iter_mut().zip(&xlag[l]) {
                    *f += a * v;
                }
            }
        }
        for j in 0..d {
            let old = if params.edge_ind[(i, j)] == 1 {
                params.coeffs[(i, j)]
            } else {
                0.0
            };
            let mut dot = 0.0;
            for ((&xl, &xc), &f) in xlag[j].iter().zip(&xcur[i]).zip(&fitted) {
                dot += xl * (xc - f);
            }
            let s_xr = dot + old * sxx[j];
            let q = params.block_probs[(params.labels[i], params.labels[j])];
            let (g, a) = draw_edge_weight(sxx[j], s_xr, q, h.coeff_sd, rng);
            let new = if g == 1 { a } else { 0.0 };
            let delta = new - old;
            if delta != 0.0 {
                for (f, &v) in fitted.iter_mut().zip(&xlag[j]) {
                    *f += delta * v;
                }
            }
            params.edge_ind[(i, j)] = g;
            params.coeffs[(i, j)] = a;
        }
    }
}

struct TracePlan {
    names: Vec<String>,
    trace_coeffs: bool,
}

fn trace_plan(d: usize, k: usize, enabled: bool) -> TracePlan {
    if !enabled {
        return TracePlan {
            names: Vec::new(),
            trace_coeffs: false,
        };
    }
    let trace_coeffs = d <= 20;
    let mut names = Vec::new();
    for i in 0..d {
        names.push(format!("gain[{i}]"));
    }
    for i in 0..d {
        names.push(format!("noise_var[{i}]"));
    }
    for r in 0..k {
        for c in 0..k {
            names.push(format!("block_prob[{r},{c}]"));
        }
    }
    if trace_coeffs {
        for i in 0..d {
            for j in 0..d {
                names.push(format!("coeff[{i},{j}]"));
            }
        }
    }
    TracePlan {
        names,
        trace_coeffs,
    }
}

fn push_trace_values(
    traces: &mut [ScalarTrace],
    plan: &TracePlan,
    params: &ModelParams,
) {
    if plan.names.is_empty() {
        return;
    }
    let d = params.num_channels();
    let k = params.num_clusters();
    let mut idx = 0;
    for i in 0..d {
        traces[idx].values.push(params.obs_gain[i]);
        idx += 1;
    }
    for i in 0..d {
        traces[idx].values.push(params.noise_var[i]);
        idx += 1;
    }
    for r in 0..k {
        for c in 0..k {
            traces[idx].values.push(params.block_probs[(r, c)]);
            idx += 1;
        }
    }
    if plan.trace_coeffs {
        for i in 0..d {
            for j in 0..d {
                traces[idx].values.push(params.coeffs[(i, j)]);
                idx += 1;
            }
        }
    }
}

/// Run one chain from the given initial parameters.
pub fn run_chain(
    y: &TimeSeriesMatrix,
    init: &ModelParams,
    cfg: &ChainConfig,
    h: &Hyperparams,
) -> Result<ChainOutput> {
    cfg.validate()?;
    init.validate()?;
    h.validate()?;
    let d = init.num_channels();
    let k = init.num_clusters();
    if y.num_channels() != d {
        return Err(Error::invalid("observation/parameter channel mismatch"));
    }
    if k != cfg.k || h.num_clusters() != k {
        return Err(Error::invalid(format!(
            "cluster count disagreement: params {k}, config {}, hyperparams {}",
            cfg.k,
            h.num_clusters()
        )));
    }
    if y.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("observations contain non-finite values"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init.clone();

    let plan = trace_plan(d, k, cfg.trace_continuous);
    let mut traces: Vec<ScalarTrace> = plan
        .names
        .iter()
        .map(|n| ScalarTrace {
            name: n.clone(),
            values: Vec::new(),
        })
        .collect();

    let mut gamma_sum: DMatrix<u32> = DMatrix::zeros(d, d);
    let mut same_cluster_sum: DMatrix<u32> = DMatrix::zeros(d, d);
    let mut n_retained = 0usize;

    for iter in 0..cfg.n_iter {
        gibbs_sweep(y, &mut params, h, cfg.steady_state_tol, &mut rng)?;

        if iter >= cfg.n_burnin && (iter - cfg.n_burnin) % cfg.thin == 0 {
            n_retained += 1;
            for i in 0..d {
                for j in 0..d {
                    if params.edge_ind[(i, j)] == 1 {
                        gamma_sum[(i, j)] += 1;
                    }
                    if params.labels[i] == params.labels[j] {
                        same_cluster_sum[(i, j)] += 1;
                    }
                }
            }
            push_trace_values(&mut traces, &plan, &params);
        }
    }

    Ok(ChainOutput {
        gamma_sum,
        same_cluster_sum,
        n_retained,
        traces,
    })
}
