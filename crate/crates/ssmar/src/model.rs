//! Model parameters, priors, forward simulation and the joint log density.
//!
//! The generative model, per channel i of d and time t in 1..T:
//!
//! ```text
//! y_i(t) = c_i x_i(t) + eps_i(t),            eps_i ~ N(0, tau_i)
//! x_i(t) = sum_j gamma_ij a_ij x_j(t-1) + eta_i(t),  eta_i ~ N(0, 1)
//! x_i(0) ~ N(mu_i, 1)
//! ```
//!
//! Edges get a blockmodel prior: channel i has cluster label m_i, and
//! `gamma_ij ~ Bern(B[m_i, m_j])` where diagonal blocks of B live in
//! `[within_lo, 1]` and off-diagonal blocks in `[0, between_hi]`.  The state
//! noise variance is pinned to one; amplitude lives in the gains c.
//!
//! `log_joint_terms` is the single source of truth the sampler and EM steps
//! are tested against.

use nalgebra::DMatrix;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::dist;
use crate::error::{Error, Result};
use crate::types::{LatentStates, TimeSeriesMatrix};

/// Prior settings.  One instance serves one cluster count K
/// (`cluster_alpha.len() == K`).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Hyperparams {
    /// Lower bound of the uniform prior on within-cluster connection
    /// probabilities (diagonal of B).
    pub within_lo: f64,
    /// Upper bound of the uniform prior on between-cluster connection
    /// probabilities (off-diagonal of B).
    pub between_hi: f64,
    /// Prior standard deviation of connection coefficients.
    pub coeff_sd: f64,
    /// Prior standard deviation of observation gains and initial-state means.
    pub gain_sd: f64,
    /// Shape and scale of the inverse-gamma prior on observation noise
    /// variances; small values make it near-flat.
    pub noise_shape: f64,
    /// Dirichlet concentration for cluster weights, one entry per cluster.
    pub cluster_alpha: Vec<f64>,
}

/// Defaults: dense within (0.9), sparse between (0.1), unit-variance
/// coefficient prior, diffuse gain/mean prior, near-flat noise prior,
/// uniform cluster weights.
pub fn default_hyperparams(k: usize) -> Result<Hyperparams> {
    if k < 1 {
        return Err(Error::invalid("cluster count must be at least 1"));
    }
    Ok(Hyperparams {
        within_lo: 0.9,
        between_hi: 0.1,
        coeff_sd: 1.0,
        gain_sd: 10.0,
        noise_shape: 0.01,
        cluster_alpha: vec![1.0; k],
    })
}

impl Hyperparams {
    pub fn num_clusters(&self) -> usize {
        self.cluster_alpha.len()
    }

    /// Same scalar settings for a different cluster count.
    pub fn with_clusters(&self, k: usize) -> Result<Hyperparams> {
        if k < 1 {
            return Err(Error::invalid("cluster count must be at least 1"));
        }
        let mut h = self.clone();
        h.cluster_alpha = vec![self.cluster_alpha.first().copied().unwrap_or(1.0); k];
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.between_hi > 0.0 && self.within_lo < 1.0 && self.between_hi < self.within_lo) {
            return Err(Error::invalid(format!(
                "need 0 < between_hi < within_lo < 1, got {} and {}",
                self.between_hi, self.within_lo
            )));
        }
        if !(self.coeff_sd > 0.0 && self.gain_sd > 0.0 && self.noise_shape > 0.0) {
            return Err(Error::invalid("prior scales must be positive"));
        }
        if self.cluster_alpha.is_empty() || self.cluster_alpha.iter().any(|&a| a <= 0.0) {
            return Err(Error::invalid("cluster_alpha must be non-empty positive"));
        }
        Ok(())
    }
}

/// Full parameter set of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Edge indicators; entry (i, j) = 1 means j drives i (includes i = j).
    pub edge_ind: DMatrix<u8>,
    /// Connection coefficients, same orientation as `edge_ind`.
    pub coeffs: DMatrix<f64>,
    /// Block connection probabilities, K x K; entry (k, l) is the edge
    /// probability from a cluster-l source into a cluster-k target.
    pub block_probs: DMatrix<f64>,
    /// Cluster label per channel, 0-based.
    pub labels: Vec<usize>,
    /// Observation gains.
    pub obs_gain: Vec<f64>,
    /// Observation noise variances.
    pub noise_var: Vec<f64>,
    /// Initial-state means.
    pub init_mean: Vec<f64>,
    /// Cluster weights on the simplex.
    pub weights: Vec<f64>,
}

impl ModelParams {
    pub fn num_channels(&self) -> usize {
        self.labels.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.weights.len()
    }

    /// Effective transition matrix: coefficients masked by edge indicators.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let d = self.num_channels();
        DMatrix::from_fn(d, d, |i, j| {
            if self.edge_ind[(i, j)] == 1 {
                self.coeffs[(i, j)]
            } else {
                0.0
            }
        })
    }

    /// Structural consistency; prior-support violations are not errors here,
    /// they make the joint density -inf instead.
    pub fn validate(&self) -> Result<()> {
        let d = self.num_channels();
        let k = self.num_clusters();
        if d == 0 || k == 0 {
            return Err(Error::invalid("empty parameter set"));
        }
        let square = |m: usize, n: usize| m == d && n == d;
        if !square(self.edge_ind.nrows(), self.edge_ind.ncols())
            || !square(self.coeffs.nrows(), self.coeffs.ncols())
        {
            return Err(Error::invalid("edge/coefficient matrices must be d x d"));
        }
        if self.block_probs.nrows() != k || self.block_probs.ncols() != k {
            return Err(Error::invalid("block_probs must be K x K"));
        }
        if self.obs_gain.len() != d || self.noise_var.len() != d || self.init_mean.len() != d {
            return Err(Error::invalid("per-channel vectors must have length d"));
        }
        if self.edge_ind.iter().any(|&g| g > 1) {
            return Err(Error::invalid("edge indicators must be 0/1"));
        }
        if self.labels.iter().any(|&m| m >= k) {
            return Err(Error::invalid("cluster label out of range"));
        }
        if self.noise_var.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::invalid("noise variances must be positive finite"));
        }
        if self.block_probs.iter().any(|&b| !(0.0..=1.0).contains(&b)) {
            return Err(Error::invalid("block probabilities must lie in [0,1]"));
        }
        let wsum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| w < 0.0) || (wsum - 1.0).abs() > 1e-8 {
            return Err(Error::invalid("cluster weights must form a simplex"));
        }
        Ok(())
    }
}

/// Draw a full parameter set from the prior.
pub fn sample_prior(d: usize, h: &Hyperparams, rng: &mut impl Rng) -> Result<ModelParams> {
    h.validate()?;
    if d == 0 {
        return Err(Error::invalid("need at least one channel"));
    }
    let k = h.num_clusters();
    let weights = dist::sample_dirichlet(&h.cluster_alpha, rng)?;
    let log_w: Vec<f64> = weights.iter().map(|&w| w.ln()).collect();
    let mut labels = Vec::with_capacity(d);
    for _ in 0..d {
        labels.push(dist::sample_categorical_from_log(&log_w, rng)?);
    }
    let block_probs = DMatrix::from_fn(k, k, |r, c| {
        if r == c {
            h.within_lo + rng.random::<f64>() * (1.0 - h.within_lo)
        } else {
            rng.random::<f64>() * h.between_hi
        }
    });
    let edge_ind = DMatrix::from_fn(d, d, |i, j| {
        u8::from(rng.random::<f64>() < block_probs[(labels[i], labels[j])])
    });
    let coeffs = DMatrix::from_fn(d, d, |_, _| dist::sample_normal(0.0, h.coeff_sd, rng));
    let obs_gain = (0..d).map(|_| dist::sample_normal(0.0, h.gain_sd, rng)).collect();
    let init_mean = (0..d).map(|_| dist::sample_normal(0.0, h.gain_sd, rng)).collect();
    let mut noise_var = Vec::with_capacity(d);
    for _ in 0..d {
        noise_var.push(dist::sample_inv_gamma(h.noise_shape, h.noise_shape, rng)?);
    }
    Ok(ModelParams {
        edge_ind,
        coeffs,
        block_probs,
        labels,
        obs_gain,
        noise_var,
        init_mean,
        weights,
    })
}

/// Simulate latent states for `t_len` steps (plus the initial column).
pub fn simulate_states(theta: &ModelParams, t_len: usize, rng: &mut impl Rng) -> LatentStates {
    let d = theta.num_channels();
    let f = theta.transition_matrix();
    let mut x = DMatrix::zeros(d, t_len + 1);
    for i in 0..d {
        x[(i, 0)] = theta.init_mean[i] + dist::sample_std_normal(rng);
    }
    for t in 1..=t_len {
        let prev = x.column(t - 1).clone_owned();
        let mean = &f * prev;
        for i in 0..d {
            x[(i, t)] = mean[i] + dist::sample_std_normal(rng);
        }
    }
    LatentStates { values: x }
}

/// Simulate observations given states.  Builds the container directly so
/// degenerate sizes stay usable in simulation studies.
pub fn simulate_observations(
    x: &LatentStates,
    theta: &ModelParams,
    sample_rate_hz: f64,
    rng: &mut impl Rng,
) -> Result<TimeSeriesMatrix> {
    let d = theta.num_channels();
    if x.num_channels() != d {
        return Err(Error::invalid("state/parameter channel mismatch"));
    }
    let t_len = x.num_steps();
    let mut y = DMatrix::zeros(d, t_len);
    for t in 1..=t_len {
        for i in 0..d {
            let sd = theta.noise_var[i].sqrt();
            y[(i, t - 1)] = theta.obs_gain[i] * x.values[(i, t)] + dist::sample_normal(0.0, sd, rng);
        }
    }
    Ok(TimeSeriesMatrix {
        values: y,
        sample_rate_hz,
        channel_labels: crate::types::default_labels(d),
    })
}

/// Additive pieces of the unnormalized joint log density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDensityTerms {
    /// Sum over i,t of log N(y_i(t); c_i x_i(t), tau_i).
    pub obs: f64,
    /// Sum over i,t of log N(x_i(t); masked-AR prediction, 1).
    pub state_trans: f64,
    /// Sum over i of log N(x_i(0); mu_i, 1).
    pub state_init: f64,
    /// Bernoulli edge-indicator terms under the blockmodel.
    pub edge_prior: f64,
    /// Normal prior over every coefficient (active or not).
    pub coeff_prior: f64,
    /// Truncated-uniform support terms for block probabilities.
    pub block_prior: f64,
    /// Multinomial label terms.
    pub label_prior: f64,
    /// Dirichlet weight term.
    pub weight_prior: f64,
    /// Normal priors on gains and initial-state means.
    pub gain_prior: f64,
    /// Inverse-gamma noise-variance terms.
    pub noise_prior: f64,
}

impl JointDensityTerms {
    pub fn total(&self) -> f64 {
        self.obs
            + self.state_trans
            + self.state_init
            + self.edge_prior
            + self.coeff_prior
            + self.block_prior
            + self.label_prior
            + self.weight_prior
            + self.gain_prior
            + self.noise_prior
    }
}

pub(crate) fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + r * r / var)
}

fn ln_bernoulli(bit: u8, q: f64) -> f64 {
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

/// Unnormalized joint log density, split into its additive terms.
/// Returns -inf terms (not errors) when a parameter leaves its prior support.
pub fn log_joint_terms(
    y: &TimeSeriesMatrix,
    x: &LatentStates,
    theta: &ModelParams,
    h: &Hyperparams,
) -> Result<JointDensityTerms> {
    theta.validate()?;
    h.validate()?;
    let d = theta.num_channels();
    let k = theta.num_clusters();
    let t_len = y.num_samples();
    if y.num_channels() != d || x.num_channels() != d || x.num_steps() != t_len {
        return Err(Error::invalid("Y, X and parameters disagree on dimensions"));
    }
    if h.num_clusters() != k {
        return Err(Error::invalid("hyperparameter cluster count mismatch"));
    }

    let mut obs = 0.0;
    for t in 1..=t_len {
        for i in 0..d {
            obs += ln_normal(
                y.values[(i, t - 1)],
                theta.obs_gain[i] * x.values[(i, t)],
                theta.noise_var[i],
            );
        }
    }

    let f = theta.transition_matrix();
    let mut state_trans = 0.0;
    for t in 1..=t_len {
        let pred = &f * x.values.column(t - 1);
        for i in 0..d {
            state_trans += ln_normal(x.values[(i, t)], pred[i], 1.0);
        }
    }

    let mut state_init = 0.0;
    for i in 0..d {
        state_init += ln_normal(x.values[(i, 0)], theta.init_mean[i], 1.0);
    }

    let prior = prior_terms_unchecked(theta, h);
    Ok(JointDensityTerms {
        obs,
        state_trans,
        state_init,
        edge_prior: prior.edge,
        coeff_prior: prior.coeff,
        block_prior: prior.block,
        label_prior: prior.label,
        weight_prior: prior.weight,
        gain_prior: prior.gain,
        noise_prior: prior.noise,
    })
}

struct PriorTerms {
    edge: f64,
    coeff: f64,
    block: f64,
    label: f64,
    weight: f64,
    gain: f64,
    noise: f64,
}

impl PriorTerms {
    fn total(&self) -> f64 {
        self.edge + self.coeff + self.block + self.label + self.weight + self.gain + self.noise
    }
}

fn prior_terms_unchecked(theta: &ModelParams, h: &Hyperparams) -> PriorTerms {
    let d = theta.num_channels();
    let k = theta.num_clusters();

    let mut edge = 0.0;
    for i in 0..d {
        for j in 0..d {
            let q = theta.block_probs[(theta.labels[i], theta.labels[j])];
            edge += ln_bernoulli(theta.edge_ind[(i, j)], q);
        }
    }

    let mut coeff = 0.0;
    let coeff_var = h.coeff_sd * h.coeff_sd;
    for a in theta.coeffs.iter() {
        coeff += ln_normal(*a, 0.0, coeff_var);
    }

    let mut block = 0.0;
    for r in 0..k {
        for c in 0..k {
            let b = theta.block_probs[(r, c)];
            block += if r == c {
                if (h.within_lo..=1.0).contains(&b) {
                    -(1.0 - h.within_lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            } else if (0.0..=h.between_hi).contains(&b) {
                -h.between_hi.ln()
            } else {
                f64::NEG_INFINITY
            };
        }
    }

    let mut label = 0.0;
    for &m in &theta.labels {
        let w = theta.weights[m];
        label += if w > 0.0 { w.ln() } else { f64::NEG_INFINITY };
    }

    let alpha_sum: f64 = h.cluster_alpha.iter().sum();
    let mut weight = ln_gamma(alpha_sum);
    for (&a, &w) in h.cluster_alpha.iter().zip(&theta.weights) {
        weight -= ln_gamma(a);
        if a != 1.0 {
            weight += if w > 0.0 {
                (a - 1.0) * w.ln()
            } else {
                f64::NEG_INFINITY
            };
        }
    }

    let gain_var = h.gain_sd * h.gain_sd;
    let mut gain = 0.0;
    for i in 0..d {
        gain += ln_normal(theta.obs_gain[i], 0.0, gain_var);
        gain += ln_normal(theta.init_mean[i], 0.0, gain_var);
    }

    // Density proportional to tau^-(1+r) exp(-r/tau) with r = noise_shape.
    let r0 = h.noise_shape;
    let ig_const = r0 * r0.ln() - ln_gamma(r0);
    let mut noise = 0.0;
    for &tau in &theta.noise_var {
        noise += ig_const - (r0 + 1.0) * tau.ln() - r0 / tau;
    }

    PriorTerms {
        edge,
        coeff,
        block,
        label,
        weight,
        gain,
        noise,
    }
}

/// Log prior density of a parameter set, without any data terms.
/// Used as the penalty part of the MAP objective.
pub fn log_prior_density(theta: &ModelParams, h: &Hyperparams) -> Result<f64> {
    theta.validate()?;
    h.validate()?;
    if h.num_clusters() != theta.num_clusters() {
        return Err(Error::invalid("hyperparameter cluster count mismatch"));
    }
    Ok(prior_terms_unchecked(theta, h).total())
}

pub fn log_joint_density(
    y: &TimeSeriesMatrix,
    x: &LatentStates,
    theta: &ModelParams,
    h: &Hyperparams,
) -> Result<f64> {
    Ok(log_joint_terms(y, x, theta, h)?.total())
}
