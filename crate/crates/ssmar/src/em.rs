//! MAP expectation-maximization with the latent states integrated out.
//!
//! The optimizer serves two roles: it picks the number of clusters by
//! letting singleton clusters merge or die out, and its fixed point seeds
//! the Gibbs chain.  The E-step runs the exact smoother for the state
//! moments; the M-step applies closed-form updates to the continuous
//! parameters and best-response (ICM) passes to the discrete ones, so the
//! penalized objective log p(Y|theta) + log p(theta) never decreases.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{log_prior_density, Hyperparams, ModelParams};
use crate::sampler::{block_edge_counts, label_conditional_log_pmf};
use crate::statespace::{run_filter, smoothed_moments};
use crate::types::TimeSeriesMatrix;

/// Result of an EM run: the fitted parameters with clusters compacted to
/// `0..k_selected`, and the objective value after each iteration
/// (entry 0 is the objective at the initializer).
#[derive(Debug, Clone)]
pub struct EmFit {
    pub params: ModelParams,
    pub k_selected: usize,
    pub objective_trace: Vec<f64>,
}

fn channel_moments(y: &TimeSeriesMatrix) -> Result<Vec<(f64, f64)>> {
    let d = y.num_channels();
    let t_len = y.num_samples();
    let mut out = Vec::with_capacity(d);
    for i in 0..d {
        let row = y.values.row(i);
        let mean = row.sum() / t_len as f64;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (t_len - 1) as f64;
        let spread = row.max() - row.min();
        if !(var > 0.0 && var.is_finite()) || spread == 0.0 {
            return Err(Error::invalid(format!(
                "channel {} ({}) has zero variance",
                i + 1,
                y.channel_labels[i]
            )));
        }
        out.push((mean, var));
    }
    Ok(out)
}

/// Lag-one least-squares coefficients on per-channel standardized data,
/// with a small ridge term for numerical safety.  Also serves as the
/// non-model baseline in benchmark comparisons.
pub fn lag1_coefficients(y: &TimeSeriesMatrix) -> Result<DMatrix<f64>> {
    let d = y.num_channels();
    let t_len = y.num_samples();
    let moments = channel_moments(y)?;
    let z = DMatrix::from_fn(d, t_len, |i, t| {
        (y.values[(i, t)] - moments[i].0) / moments[i].1.sqrt()
    });
    let z_lag = z.columns(0, t_len - 1);
    let z_cur = z.columns(1, t_len - 1);
    let mut gram = &z_lag * z_lag.transpose();
    let ridge = 1e-6 * (t_len - 1) as f64;
    for i in 0..d {
        gram[(i, i)] += ridge;
    }
    let cross = &z_cur * z_lag.transpose();
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::numerical("lag-one regression gram matrix not positive definite"))?;
    Ok(chol.solve(&cross.transpose()).transpose())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Data-driven starting point with every channel in its own cluster.
/// Gains come from channel scale, the coefficient matrix from lag-one
/// least squares, and edges from thresholding that matrix at its row
/// median.  Returned parameters have K = d clusters.
pub fn initial_params(y: &TimeSeriesMatrix, h: &Hyperparams) -> Result<ModelParams> {
    h.validate()?;
    let d = y.num_channels();
    if d < 2 {
        return Err(Error::invalid("need at least two channels"));
    }
    let moments = channel_moments(y)?;
    let coeffs = lag1_coefficients(y)?;
    let edge_ind = DMatrix::from_fn(d, d, |i, j| {
        let row: Vec<f64> = (0..d).map(|l| coeffs[(i, l)].abs()).collect();
        u8::from(coeffs[(i, j)].abs() > median(row))
    });
    let obs_gain: Vec<f64> = moments.iter().map(|&(_, var)| var.sqrt()).collect();
    let noise_var: Vec<f64> = moments.iter().map(|&(_, var)| 0.1 * var).collect();
    let init_mean: Vec<f64> = (0..d).map(|i| y.values[(i, 0)] / obs_gain[i]).collect();
    let block_probs = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            0.5 * (h.within_lo + 1.0)
        } else {
            0.5 * h.between_hi
        }
    });
    let params = ModelParams {
        edge_ind,
        coeffs,
        block_probs,
        labels: (0..d).collect(),
        obs_gain,
        noise_var,
        init_mean,
        weights: vec![1.0 / d as f64; d],
    };
    params.validate()?;
    Ok(params)
}

fn hyperparams_for(theta: &ModelParams, h: &Hyperparams) -> Result<Hyperparams> {
    if h.num_clusters() == theta.num_clusters() {
        Ok(h.clone())
    } else {
        h.with_clusters(theta.num_clusters())
    }
}

/// Penalized marginal objective log p(Y|theta) + log p(theta).
pub fn map_objective(y: &TimeSeriesMatrix, theta: &ModelParams, h: &Hyperparams) -> Result<f64> {
    let hk = hyperparams_for(theta, h)?;
    let loglik = run_filter(y, theta, None)?.loglik;
    Ok(loglik + log_prior_density(theta, &hk)?)
}

/// One full EM iteration: exact E-step followed by one ascent pass over
/// every parameter block.  Never decreases the objective of `map_objective`.
pub fn em_step(y: &TimeSeriesMatrix, theta: &ModelParams, h: &Hyperparams) -> Result<ModelParams> {
    let hk = hyperparams_for(theta, h)?;
    let d = theta.num_channels();
    let t_len = y.num_samples();
    let sm = smoothed_moments(y, theta, None)?;
    let w1 = &sm.sum_prev_outer;
    let w2 = &sm.sum_cross_outer;
    let w3 = &sm.sum_cur_outer;
    let coeff_prec = 1.0 / (hk.coeff_sd * hk.coeff_sd);
    let gain_var = hk.gain_sd * hk.gain_sd;

    let mut new = theta.clone();

    // Edge indicators by per-site best response, then a joint ridge refit
    // of each row's active coefficients.  g[j] tracks the expected
    // prediction-cross term sum_l gamma_il a_il W1[l, j] so each candidate
    // flip costs O(d), not O(d^2).
    for i in 0..d {
        let mut g = vec![0.0; d];
        for l in 0..d {
            if new.edge_ind[(i, l)] == 1 {
                let a = new.coeffs[(i, l)];
                for (jj, gv) in g.iter_mut().enumerate() {
                    *gv += a * w1[(l, jj)];
                }
            }
        }
        for j in 0..d {
            let q = new.block_probs[(new.labels[i], new.labels[j])];
            let a_cur = if new.edge_ind[(i, j)] == 1 {
                new.coeffs[(i, j)]
            } else {
                0.0
            };
            let resid_cross = w2[(i, j)] - (g[j] - a_cur * w1[(j, j)]);
            let denom = w1[(j, j)] + coeff_prec;
            // Turning the edge on, with its coefficient at the conditional
            // optimum, beats keeping it off when the quadratic gain
            // outweighs the prior log odds of absence.
            let on = if q >= 1.0 {
                true
            } else if q <= 0.0 {
                false
            } else {
                0.5 * resid_cross * resid_cross / denom + (q / (1.0 - q)).ln() > 0.0
            };
            let a_new = if on { resid_cross / denom } else { 0.0 };
            let delta = a_new - a_cur;
            if delta != 0.0 {
                for (jj, gv) in g.iter_mut().enumerate() {
                    *gv += delta * w1[(j, jj)];
                }
            }
            new.edge_ind[(i, j)] = u8::from(on);
            new.coeffs[(i, j)] = a_new;
        }

        let active: Vec<usize> = (0..d).filter(|&j| new.edge_ind[(i, j)] == 1).collect();
        if !active.is_empty() {
            let k = active.len();
            let mut gram = DMatrix::from_fn(k, k, |r, c| w1[(active[r], active[c])]);
            for r in 0..k {
                gram[(r, r)] += coeff_prec;
            }
            let cross = DVector::from_fn(k, |r, _| w2[(i, active[r])]);
            let chol = Cholesky::new(gram)
                .ok_or_else(|| Error::numerical("coefficient update system not positive definite"))?;
            let sol = chol.solve(&cross);
            for (r, &j) in active.iter().enumerate() {
                new.coeffs[(i, j)] = sol[r];
            }
        }
    }

    // Observation gain then noise variance per channel, each at its
    // conditional MAP, then the initial-state mean.
    for i in 0..d {
        let s_xx = w3[(i, i)];
        let s_xy = sm.sum_state_obs[i];
        let s_yy: f64 = y.values.row(i).iter().map(|&v| v * v).sum();
        let tau = new.noise_var[i];
        let c = (s_xy / tau) / (s_xx / tau + 1.0 / gain_var);
        let expected_ssr = (s_yy - 2.0 * c * s_xy + c * c * s_xx).max(0.0);
        new.obs_gain[i] = c;
        new.noise_var[i] = ((hk.noise_shape + 0.5 * expected_ssr)
            / (0.5 * t_len as f64 + hk.noise_shape + 1.0))
            .max(1e-12);
        new.init_mean[i] = sm.init_mean[i] * gain_var / (1.0 + gain_var);
    }

    // Cluster labels by sequential best response.  The current label always
    // has finite weight, so the argmax is well defined even when some
    // block probability sits on the boundary.
    for i in 0..d {
        let log_w = label_conditional_log_pmf(&new, i);
        let mut best = new.labels[i];
        let mut best_w = log_w[best];
        for (k, &w) in log_w.iter().enumerate() {
            if w > best_w {
                best = k;
                best_w = w;
            }
        }
        new.labels[i] = best;
    }

    // Block probabilities: empirical rate projected onto the prior box,
    // kept a margin away from 0 and 1 so a boundary estimate cannot turn
    // into an infinite barrier for later label moves.  The margin never
    // excludes the incoming value, which keeps this a coordinate-ascent
    // step.  Blocks with no member pairs sit at the box midpoint.
    const EDGE_MARGIN: f64 = 1e-2;
    let (n1, n0) = block_edge_counts(&new);
    let k_all = new.num_clusters();
    for r in 0..k_all {
        for c in 0..k_all {
            let old = new.block_probs[(r, c)];
            let (lo, hi) = if r == c {
                let hi = (1.0 - EDGE_MARGIN).max(old.min(1.0)).max(hk.within_lo);
                (hk.within_lo, hi)
            } else {
                let lo = EDGE_MARGIN
                    .min(0.5 * hk.between_hi)
                    .min(old.max(0.0))
                    .min(hk.between_hi);
                (lo, hk.between_hi)
            };
            let total = n1[(r, c)] + n0[(r, c)];
            new.block_probs[(r, c)] = if total == 0 {
                0.5 * (lo + hi)
            } else {
                (n1[(r, c)] as f64 / total as f64).clamp(lo, hi)
            };
        }
    }

    // Cluster weights: Dirichlet MAP with the usual clamped numerator.
    let mut counts = vec![0.0f64; k_all];
    for &m in &new.labels {
        counts[m] += 1.0;
    }
    let nums: Vec<f64> = counts
        .iter()
        .zip(&hk.cluster_alpha)
        .map(|(&n, &a)| (n + a - 1.0).max(0.0))
        .collect();
    let total: f64 = nums.iter().sum();
    new.weights = if total > 0.0 {
        nums.iter().map(|&v| v / total).collect()
    } else {
        vec![1.0 / k_all as f64; k_all]
    };

    Ok(new)
}

/// Drop empty clusters and renumber the survivors by first appearance.
fn compact_clusters(theta: &ModelParams) -> (ModelParams, usize) {
    let mut order: Vec<usize> = Vec::new();
    for &m in &theta.labels {
        if !order.contains(&m) {
            order.push(m);
        }
    }
    let k = order.len();
    let mut new = theta.clone();
    new.labels = theta
        .labels
        .iter()
        .map(|&m| order.iter().position(|&o| o == m).unwrap())
        .collect();
    new.block_probs = DMatrix::from_fn(k, k, |r, c| theta.block_probs[(order[r], order[c])]);
    let kept: Vec<f64> = order.iter().map(|&o| theta.weights[o]).collect();
    let total: f64 = kept.iter().sum();
    new.weights = if total > 0.0 {
        kept.iter().map(|&w| w / total).collect()
    } else {
        vec![1.0 / k as f64; k]
    };
    (new, k)
}

/// Fit by MAP-EM from the singleton-cluster initializer.  Deterministic:
/// no randomness enters at any point.  `tol` is the relative objective
/// improvement below which iteration stops.
pub fn em_fit(y: &TimeSeriesMatrix, h: &Hyperparams, max_iter: usize, tol: f64) -> Result<EmFit> {
    if max_iter < 1 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::invalid("tol must be finite and non-negative"));
    }
    if y.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("data contains non-finite values"));
    }
    let d = y.num_channels();
    let hd = h.with_clusters(d)?;
    let mut theta = initial_params(y, &hd)?;
    let mut trace = vec![map_objective(y, &theta, &hd)?];
    for _ in 0..max_iter {
        theta = em_step(y, &theta, &hd)?;
        let obj = map_objective(y, &theta, &hd)?;
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if obj - prev < tol * prev.abs().max(1.0) {
            break;
        }
    }
    let (params, k_selected) = compact_clusters(&theta);
    Ok(EmFit {
        params,
        k_selected,
        objective_trace: trace,
    })
}
