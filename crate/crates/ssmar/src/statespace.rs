//! Kalman filter, RTS smoother and posterior state draws for the masked-AR
//! state-space model.
//!
//! The system is `x(t) = F x(t-1) + eta`, `y(t) = H x(t) + eps` with
//! `F = gamma (.) A`, unit state noise, `H = diag(c)`, `R = diag(tau)` and
//! `x(0) ~ N(mu, I)`.  Covariance updates use the Joseph form plus explicit
//! symmetrization so long sampling runs stay positive semidefinite.
//!
//! Time-invariant systems reach a steady-state filter covariance quickly.
//! The crate-internal entry points accept a tolerance; once consecutive
//! predicted covariances agree within it, gains and covariances are frozen
//! and only mean recursions run.  This turns an O(d^3 T) sweep into
//! O(d^3 t_ss + d^2 T) and is what makes long Gibbs chains affordable.
//! `None` runs the exact recursion everywhere; the public functions are
//! always exact.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::dist;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::types::{LatentStates, TimeSeriesMatrix};

/// Forward-pass moments.  `filt_*[t]` is conditioned on `y(1..t)`, so entry 0
/// holds the initial prior; `pred_*[t-1]` predicts time t from `y(1..t-1)`.
#[derive(Debug, Clone)]
pub struct FilterResult {
    pub pred_mean: Vec<DVector<f64>>,
    pub pred_cov: Vec<DMatrix<f64>>,
    pub filt_mean: Vec<DVector<f64>>,
    pub filt_cov: Vec<DMatrix<f64>>,
    /// Marginal log p(Y | theta).
    pub loglik: f64,
}

/// Backward-pass moments over `t = 0..T`; `crosscov[t-1]` holds
/// `Cov(x(t), x(t-1) | Y)`.
#[derive(Debug, Clone)]
pub struct SmootherResult {
    pub smooth_mean: Vec<DVector<f64>>,
    pub smooth_cov: Vec<DMatrix<f64>>,
    pub crosscov: Vec<DMatrix<f64>>,
}

/// Smoothed second-moment sums the EM M-step consumes, accumulated without
/// storing per-step covariances.
#[derive(Debug, Clone)]
pub struct SmoothedMoments {
    /// Sum over t=1..T of E[x(t-1) x(t-1)' | Y].
    pub sum_prev_outer: DMatrix<f64>,
    /// Sum over t=1..T of E[x(t) x(t-1)' | Y].
    pub sum_cross_outer: DMatrix<f64>,
    /// Sum over t=1..T of E[x(t) x(t)' | Y].
    pub sum_cur_outer: DMatrix<f64>,
    /// Per channel, sum over t of y_i(t) E[x_i(t) | Y].
    pub sum_state_obs: Vec<f64>,
    /// E[x(0) | Y].
    pub init_mean: DVector<f64>,
    pub loglik: f64,
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky-like factor L with L L' = m, tolerating semidefinite input by
/// jitter, then an eigenvalue clamp.
fn robust_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Ok(ch.unpack());
    }
    let scale = m.diagonal().amax().max(1e-300);
    for jitter in [1e-12, 1e-8] {
        let mut bumped = m.clone();
        for i in 0..m.nrows() {
            bumped[(i, i)] += jitter * scale;
        }
        if let Some(ch) = Cholesky::new(bumped) {
            return Ok(ch.unpack());
        }
    }
    let eig = m.clone().symmetric_eigen();
    let mut fac = eig.eigenvectors;
    for (j, &ev) in eig.eigenvalues.iter().enumerate() {
        let s = ev.max(0.0).sqrt();
        fac.column_mut(j).scale_mut(s);
    }
    if fac.iter().all(|v| v.is_finite()) {
        Ok(fac)
    } else {
        Err(Error::numerical("covariance factorization failed"))
    }
}

/// Shared forward pass.  Covariance history is kept only up to the freeze
/// point; afterwards the frozen set answers for every later step.
pub(crate) struct FilterCore {
    t_len: usize,
    pred_mean: Vec<DVector<f64>>,
    filt_mean: Vec<DVector<f64>>,
    pred_cov: Vec<DMatrix<f64>>,
    filt_cov: Vec<DMatrix<f64>>,
    /// First prediction index served by the frozen set.
    frozen_at: Option<usize>,
    frozen_pred: DMatrix<f64>,
    frozen_filt: DMatrix<f64>,
    pub(crate) loglik: f64,
}

impl FilterCore {
    fn pred_cov_at(&self, t: usize) -> &DMatrix<f64> {
        match self.frozen_at {
            Some(tf) if t >= tf => &self.frozen_pred,
            _ => &self.pred_cov[t - 1],
        }
    }

    fn filt_cov_at(&self, t: usize) -> &DMatrix<f64> {
        match self.frozen_at {
            Some(tf) if t >= tf => &self.frozen_filt,
            _ => &self.filt_cov[t],
        }
    }
}

pub(crate) fn run_filter(
    y: &TimeSeriesMatrix,
    theta: &ModelParams,
    steady_state_tol: Option<f64>,
) -> Result<FilterCore> {
    theta.validate()?;
    let d = theta.num_channels();
    if y.num_channels() != d {
        return Err(Error::invalid("observation/parameter channel mismatch"));
    }
    let t_len = y.num_samples();
    let f = theta.transition_matrix();
    let c = &theta.obs_gain;
    let tau = &theta.noise_var;

    let mut core = FilterCore {
        t_len,
        pred_mean: Vec::with_capacity(t_len),
        filt_mean: Vec::with_capacity(t_len + 1),
        pred_cov: Vec::new(),
        filt_cov: Vec::new(),
        frozen_at: None,
        frozen_pred: DMatrix::zeros(0, 0),
        frozen_filt: DMatrix::zeros(0, 0),
        loglik: 0.0,
    };
    core.filt_mean.push(DVector::from_column_slice(&theta.init_mean));
    core.filt_cov.push(DMatrix::identity(d, d));

    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    // Frozen pieces; populated once the covariance recursion settles.
    let mut frozen_gain: Option<DMatrix<f64>> = None;
    let mut frozen_chol: Option<Cholesky<f64, Dyn>> = None;
    let mut frozen_logdet = 0.0;
    let mut settle_count = 0usize;

    for t in 1..=t_len {
        let y_t = y.values.column(t - 1);
        let x_prev = core.filt_mean.last().expect("nonempty");
        let x_pred = &f * x_prev;

        if let (Some(_), Some(gain), Some(chol)) =
            (core.frozen_at, frozen_gain.as_ref(), frozen_chol.as_ref())
        {
            let mut innov = DVector::zeros(d);
            for i in 0..d {
                innov[i] = y_t[i] - c[i] * x_pred[i];
            }
            let solved = chol.solve(&innov);
            core.loglik -=
                0.5 * (d as f64 * ln_2pi + frozen_logdet + innov.dot(&solved));
            let x_filt = &x_pred + gain * &innov;
            core.pred_mean.push(x_pred);
            core.filt_mean.push(x_filt);
            continue;
        }

        let p_prev = core.filt_cov.last().expect("nonempty");
        let mut p_pred = &f * p_prev * f.transpose();
        for i in 0..d {
            p_pred[(i, i)] += 1.0;
        }
        symmetrize(&mut p_pred);

        // Innovation covariance c_i c_j P_ij + diag(tau); PD whenever tau > 0.
        let mut s = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                s[(i, j)] = c[i] * c[j] * p_pred[(i, j)];
            }
            s[(i, i)] += tau[i];
        }
        let chol = Cholesky::new(s).ok_or_else(|| {
            Error::numerical(format!(
                "innovation covariance not positive definite at t={t} (degenerate tau or c)"
            ))
        })?;
        let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();

        let mut innov = DVector::zeros(d);
        for i in 0..d {
            innov[i] = y_t[i] - c[i] * x_pred[i];
        }
        let solved = chol.solve(&innov);
        core.loglik -= 0.5 * (d as f64 * ln_2pi + logdet + innov.dot(&solved));

        // Gain K = P H' S^-1 via S^-1 (H P) transposed.
        let mut hp = p_pred.clone();
        for i in 0..d {
            for j in 0..d {
                hp[(i, j)] *= c[i];
            }
        }
        let gain = chol.solve(&hp).transpose();

        // Joseph update (I - K H) P (I - K H)' + K R K'.
        let mut i_kh = DMatrix::identity(d, d);
        for r in 0..d {
            for cc in 0..d {
                i_kh[(r, cc)] -= gain[(r, cc)] * c[cc];
            }
        }
        let mut p_filt = &i_kh * &p_pred * i_kh.transpose();
        for r in 0..d {
            for cc in 0..d {
                let mut acc = 0.0;
                for l in 0..d {
                    acc += gain[(r, l)] * tau[l] * gain[(cc, l)];
                }
                p_filt[(r, cc)] += acc;
            }
        }
        symmetrize(&mut p_filt);

        let x_filt = &x_pred + &gain * &innov;
        core.pred_mean.push(x_pred);
        core.filt_mean.push(x_filt);

        if let Some(tol) = steady_state_tol {
            if let Some(prev) = core.pred_cov.last() {
                let mut diff: f64 = 0.0;
                let mut scale: f64 = 1.0;
                for (a, b) in p_pred.iter().zip(prev.iter()) {
                    diff = diff.max((a - b).abs());
                    scale = scale.max(a.abs());
                }
                if diff <= tol * scale {
                    settle_count += 1;
                } else {
                    settle_count = 0;
                }
            }
            if settle_count >= 2 {
                core.frozen_at = Some(t + 1);
                core.frozen_pred = p_pred.clone();
                core.frozen_filt = p_filt.clone();
                frozen_logdet = logdet;
                frozen_gain = Some(gain);
                frozen_chol = Some(chol);
                core.pred_cov.push(p_pred);
                core.filt_cov.push(p_filt);
                continue;
            }
        }
        core.pred_cov.push(p_pred);
        core.filt_cov.push(p_filt);
    }
    Ok(core)
}

/// Exact Kalman filter with full moment history.
pub fn kalman_filter(y: &TimeSeriesMatrix, theta: &ModelParams) -> Result<FilterResult> {
    let core = run_filter(y, theta, None)?;
    Ok(FilterResult {
        pred_mean: core.pred_mean,
        pred_cov: core.pred_cov,
        filt_mean: core.filt_mean,
        filt_cov: core.filt_cov,
        loglik: core.loglik,
    })
}

/// Smoother gain J_t = P_filt(t) F' P_pred(t+1)^-1.
fn smoother_gain(core: &FilterCore, f: &DMatrix<f64>, t: usize) -> Result<DMatrix<f64>> {
    let p_pred_next = core.pred_cov_at(t + 1);
    let chol = Cholesky::new(p_pred_next.clone())
        .ok_or_else(|| Error::numerical("predicted covariance lost positive definiteness"))?;
    // J' = P_pred^-1 F P_filt for symmetric inputs.
    let j_t = chol.solve(&(f * core.filt_cov_at(t))).transpose();
    Ok(j_t)
}

/// Exact RTS smoother with lag-one cross-covariances.
pub fn kalman_smoother(y: &TimeSeriesMatrix, theta: &ModelParams) -> Result<SmootherResult> {
    let core = run_filter(y, theta, None)?;
    let f = theta.transition_matrix();
    let t_len = core.t_len;

    let mut smooth_mean = vec![DVector::zeros(0); t_len + 1];
    let mut smooth_cov = vec![DMatrix::zeros(0, 0); t_len + 1];
    let mut crosscov = vec![DMatrix::zeros(0, 0); t_len];
    smooth_mean[t_len] = core.filt_mean[t_len].clone();
    smooth_cov[t_len] = core.filt_cov_at(t_len).clone();

    for t in (0..t_len).rev() {
        let j_t = smoother_gain(&core, &f, t)?;
        let resid_mean = &smooth_mean[t + 1] - &core.pred_mean[t];
        smooth_mean[t] = &core.filt_mean[t] + &j_t * resid_mean;
        let resid_cov = &smooth_cov[t + 1] - core.pred_cov_at(t + 1);
        let mut cov = core.filt_cov_at(t) + &j_t * resid_cov * j_t.transpose();
        symmetrize(&mut cov);
        // Cov(x(t+1), x(t) | Y) follows from x(t) | x(t+1), Y regression.
        crosscov[t] = &smooth_cov[t + 1] * j_t.transpose();
        smooth_cov[t] = cov;
    }
    Ok(SmootherResult {
        smooth_mean,
        smooth_cov,
        crosscov,
    })
}

/// One joint posterior draw of the latent states, exact recursion.
pub fn ffbs_sample(
    y: &TimeSeriesMatrix,
    theta: &ModelParams,
    rng: &mut impl Rng,
) -> Result<LatentStates> {
    ffbs_sample_opt(y, theta, None, rng)
}

/// FFBS with optional steady-state freezing; the chain driver uses this.
pub(crate) fn ffbs_sample_opt(
    y: &TimeSeriesMatrix,
    theta: &ModelParams,
    steady_state_tol: Option<f64>,
    rng: &mut impl Rng,
) -> Result<LatentStates> {
    let core = run_filter(y, theta, steady_state_tol)?;
    let f = theta.transition_matrix();
    let d = theta.num_channels();
    let t_len = core.t_len;
    let mut x = DMatrix::zeros(d, t_len + 1);

    let draw = |mean: &DVector<f64>, fac: &DMatrix<f64>, rng: &mut dyn rand::RngCore| {
        let z = DVector::from_fn(d, |_, _| dist::sample_std_normal(rng));
        mean + fac * z
    };

    let fac_last = robust_factor(core.filt_cov_at(t_len))?;
    x.set_column(t_len, &draw(&core.filt_mean[t_len], &fac_last, rng));

    // Inside the frozen region the backward gain and conditional covariance
    // are constant; factor them once.
    let mut frozen_gain: Option<(DMatrix<f64>, DMatrix<f64>)> = None;
    if let Some(tf) = core.frozen_at {
        if tf + 1 <= t_len {
            let j = smoother_gain(&core, &f, tf)?;
            let mut cond = core.filt_cov_at(tf) - &j * core.pred_cov_at(tf + 1) * j.transpose();
            symmetrize(&mut cond);
            frozen_gain = Some((j, robust_factor(&cond)?));
        }
    }

    for t in (0..t_len).rev() {
        let frozen_here = matches!((core.frozen_at, &frozen_gain), (Some(tf), Some(_)) if t >= tf);
        let (j_t, fac);
        let (j_ref, fac_ref): (&DMatrix<f64>, &DMatrix<f64>) = if frozen_here {
            let (j, f_) = frozen_gain.as_ref().expect("frozen set exists");
            (j, f_)
        } else {
            j_t = smoother_gain(&core, &f, t)?;
            let mut cond = core.filt_cov_at(t) - &j_t * core.pred_cov_at(t + 1) * j_t.transpose();
            symmetrize(&mut cond);
            fac = robust_factor(&cond)?;
            (&j_t, &fac)
        };
        let resid = x.column(t + 1).clone_owned() - &core.pred_mean[t];
        let mean = &core.filt_mean[t] + j_ref * resid;
        x.set_column(t, &draw(&mean, fac_ref, rng));
    }
    Ok(LatentStates { values: x })
}

/// Smoothed sufficient statistics for EM, with optional freezing.
pub(crate) fn smoothed_moments(
    y: &TimeSeriesMatrix,
    theta: &ModelParams,
    steady_state_tol: Option<f64>,
) -> Result<SmoothedMoments> {
    let core = run_filter(y, theta, steady_state_tol)?;
    let f = theta.transition_matrix();
    let d = theta.num_channels();
    let t_len = core.t_len;

    let mut sum_prev_outer = DMatrix::zeros(d, d);
    let mut sum_cross_outer = DMatrix::zeros(d, d);
    let mut sum_cur_outer = DMatrix::zeros(d, d);
    let mut sum_state_obs = vec![0.0; d];

    let mut mean_next = core.filt_mean[t_len].clone();
    let mut cov_next = core.filt_cov_at(t_len).clone();

    let add_outer = |acc: &mut DMatrix<f64>, cov: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>| {
        for r in 0..d {
            for cc in 0..d {
                acc[(r, cc)] += cov[(r, cc)] + a[r] * b[cc];
            }
        }
    };

    // Frozen backward quantities reused across the settled range.
    let mut frozen: Option<(DMatrix<f64>, DMatrix<f64>)> = None;
    if let Some(tf) = core.frozen_at {
        if tf + 1 <= t_len {
            let j = smoother_gain(&core, &f, tf)?;
            frozen = Some((j.clone(), core.pred_cov_at(tf + 1).clone()));
        }
    }

    for t in (0..t_len).rev() {
        // Accumulate terms for step t+1 using (mean_next, cov_next).
        for i in 0..d {
            sum_state_obs[i] += y.values[(i, t)] * mean_next[i];
        }
        add_outer(&mut sum_cur_outer, &cov_next, &mean_next, &mean_next);

        let frozen_here = matches!((core.frozen_at, &frozen), (Some(tf), Some(_)) if t >= tf);
        let (j_owned, pred_owned);
        let (j_ref, pred_ref): (&DMatrix<f64>, &DMatrix<f64>) = if frozen_here {
            let (j, p) = frozen.as_ref().expect("frozen set exists");
            (j, p)
        } else {
            j_owned = smoother_gain(&core, &f, t)?;
            pred_owned = core.pred_cov_at(t + 1).clone();
            (&j_owned, &pred_owned)
        };

        let mean_t = &core.filt_mean[t] + j_ref * (&mean_next - &core.pred_mean[t]);
        let mut cov_t = core.filt_cov_at(t) + j_ref * (&cov_next - pred_ref) * j_ref.transpose();
        symmetrize(&mut cov_t);
        let cross = &cov_next * j_ref.transpose();

        add_outer(&mut sum_prev_outer, &cov_t, &mean_t, &mean_t);
        add_outer(&mut sum_cross_outer, &cross, &mean_next, &mean_t);

        mean_next = mean_t;
        cov_next = cov_t;
    }

    Ok(SmoothedMoments {
        sum_prev_outer,
        sum_cross_outer,
        sum_cur_outer,
        sum_state_obs,
        init_mean: mean_next,
        loglik: core.loglik,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_hyperparams, sample_prior, simulate_observations, simulate_states};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Stable-ish random instance with moderate noise.
    fn random_instance(d: usize, t_len: usize, seed: u64) -> (TimeSeriesMatrix, ModelParams) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = default_hyperparams(2).unwrap();
        let mut theta = sample_prior(d, &h, &mut rng).unwrap();
        for v in theta.coeffs.iter_mut() {
            *v *= 0.3;
        }
        for i in 0..d {
            theta.obs_gain[i] = 0.5 + 0.1 * i as f64;
            theta.noise_var[i] = 0.5 + 0.05 * i as f64;
            theta.init_mean[i] = 0.1 * i as f64;
        }
        let x = simulate_states(&theta, t_len, &mut rng);
        let y = simulate_observations(&x, &theta, 1.0, &mut rng).unwrap();
        (y, theta)
    }

    #[test]
    fn smoother_matches_filter_at_final_step() {
        let (y, theta) = random_instance(3, 12, 21);
        let filt = kalman_filter(&y, &theta).unwrap();
        let smth = kalman_smoother(&y, &theta).unwrap();
        let dm = (&smth.smooth_mean[12] - &filt.filt_mean[12]).amax();
        let dc = (&smth.smooth_cov[12] - &filt.filt_cov[12]).amax();
        assert!(dm < 1e-12 && dc < 1e-12);
    }

    #[test]
    fn covariances_stay_symmetric_psd() {
        let (y, theta) = random_instance(4, 40, 22);
        let filt = kalman_filter(&y, &theta).unwrap();
        let smth = kalman_smoother(&y, &theta).unwrap();
        let check = |m: &DMatrix<f64>| {
            assert!((m - m.transpose()).amax() < 1e-10, "asymmetric");
            let min_ev = m.clone().symmetric_eigen().eigenvalues.min();
            assert!(min_ev > -1e-8, "negative eigenvalue {min_ev}");
        };
        filt.pred_cov.iter().for_each(&check);
        filt.filt_cov.iter().for_each(&check);
        smth.smooth_cov.iter().for_each(&check);
    }

    #[test]
    fn steady_state_filter_matches_exact() {
        let (y, theta) = random_instance(6, 300, 23);
        let exact = run_filter(&y, &theta, None).unwrap();
        let fast = run_filter(&y, &theta, Some(1e-12)).unwrap();
        assert!(fast.frozen_at.is_some(), "expected covariance settling");
        assert!(
            (exact.loglik - fast.loglik).abs() < 1e-6,
            "loglik {} vs {}",
            exact.loglik,
            fast.loglik
        );
        let dm = (&exact.filt_mean[300] - &fast.filt_mean[300]).amax();
        assert!(dm < 1e-8, "final mean diff {dm}");
    }

    #[test]
    fn steady_state_ffbs_matches_exact_with_same_seed() {
        let (y, theta) = random_instance(5, 200, 24);
        let mut rng_a = ChaCha8Rng::seed_from_u64(7);
        let mut rng_b = ChaCha8Rng::seed_from_u64(7);
        let exact = ffbs_sample_opt(&y, &theta, None, &mut rng_a).unwrap();
        let fast = ffbs_sample_opt(&y, &theta, Some(1e-11), &mut rng_b).unwrap();
        let diff = (&exact.values - &fast.values).amax();
        assert!(diff < 1e-5, "state draw diff {diff}");
    }

    #[test]
    fn steady_state_moments_match_exact() {
        let (y, theta) = random_instance(5, 250, 25);
        let exact = smoothed_moments(&y, &theta, None).unwrap();
        let fast = smoothed_moments(&y, &theta, Some(1e-12)).unwrap();
        for (a, b) in [
            (&exact.sum_prev_outer, &fast.sum_prev_outer),
            (&exact.sum_cross_outer, &fast.sum_cross_outer),
            (&exact.sum_cur_outer, &fast.sum_cur_outer),
        ] {
            let rel = (a - b).amax() / a.amax().max(1.0);
            assert!(rel < 1e-7, "moment diff {rel}");
        }
    }

    #[test]
    fn smoothed_moments_agree_with_full_smoother() {
        let (y, theta) = random_instance(3, 30, 26);
        let smth = kalman_smoother(&y, &theta).unwrap();
        let mom = smoothed_moments(&y, &theta, None).unwrap();
        let d = 3;
        let t_len = 30;
        let mut w1 = DMatrix::zeros(d, d);
        let mut w2 = DMatrix::zeros(d, d);
        let mut w3 = DMatrix::zeros(d, d);
        for t in 1..=t_len {
            w1 += &smth.smooth_cov[t - 1]
                + &smth.smooth_mean[t - 1] * smth.smooth_mean[t - 1].transpose();
            w2 += &smth.crosscov[t - 1] + &smth.smooth_mean[t] * smth.smooth_mean[t - 1].transpose();
            w3 += &smth.smooth_cov[t] + &smth.smooth_mean[t] * smth.smooth_mean[t].transpose();
        }
        assert!((&w1 - &mom.sum_prev_outer).amax() < 1e-8);
        assert!((&w2 - &mom.sum_cross_outer).amax() < 1e-8);
        assert!((&w3 - &mom.sum_cur_outer).amax() < 1e-8);
        assert!((&mom.init_mean - &smth.smooth_mean[0]).amax() < 1e-10);
    }

    #[test]
    fn ffbs_is_deterministic_given_seed() {
        let (y, theta) = random_instance(4, 25, 27);
        let mut rng_a = ChaCha8Rng::seed_from_u64(99);
        let mut rng_b = ChaCha8Rng::seed_from_u64(99);
        let a = ffbs_sample(&y, &theta, &mut rng_a).unwrap();
        let b = ffbs_sample(&y, &theta, &mut rng_b).unwrap();
        assert_eq!(a.values, b.values);
    }
}
