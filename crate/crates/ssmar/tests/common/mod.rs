//! Shared oracles for the integration suites.
//!
//! The dense joint-Gaussian oracle builds the full covariance of the stacked
//! vector (x(0..T), y(1..T)) by first principles and answers marginal and
//! conditional questions by plain Gaussian algebra.  It shares no code with
//! the filtering recursions it checks.

#![allow(dead_code)]

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssmar::model::{default_hyperparams, sample_prior, simulate_observations, simulate_states};
use ssmar::{ModelParams, TimeSeriesMatrix};

pub fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + r * r / var)
}

/// Moderate random instance: prior structure, damped coefficients, O(1)
/// gains and noise so nothing degenerates.
pub fn stable_instance(
    d: usize,
    t_len: usize,
    seed: u64,
) -> (TimeSeriesMatrix, ModelParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = default_hyperparams(2).unwrap();
    let mut theta = sample_prior(d, &h, &mut rng).unwrap();
    for v in theta.coeffs.iter_mut() {
        *v *= 0.35;
    }
    for i in 0..d {
        theta.obs_gain[i] = 0.6 + 0.15 * (i as f64);
        theta.noise_var[i] = 0.4 + 0.1 * (i as f64);
        theta.init_mean[i] = 0.2 * (i as f64) - 0.1;
    }
    let x = simulate_states(&theta, t_len, &mut rng);
    let y = simulate_observations(&x, &theta, 100.0, &mut rng).unwrap();
    (y, theta)
}

/// Joint Gaussian over the stacked vector [x(0), .., x(T), y(1), .., y(T)].
pub struct DenseJoint {
    pub d: usize,
    pub t_len: usize,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl DenseJoint {
    pub fn x_offset(&self, t: usize) -> usize {
        t * self.d
    }

    pub fn y_offset(&self, t: usize) -> usize {
        (self.t_len + 1) * self.d + (t - 1) * self.d
    }

    fn nx(&self) -> usize {
        (self.t_len + 1) * self.d
    }

    fn ny(&self) -> usize {
        self.t_len * self.d
    }

    /// log N(y_obs; mean_y, cov_yy), the exact marginal likelihood.
    pub fn marginal_loglik(&self, y: &TimeSeriesMatrix) -> f64 {
        let ny = self.ny();
        let yv = stack_observations(y);
        let my = self.mean.rows(self.nx(), ny).clone_owned();
        let cyy = self.cov.view((self.nx(), self.nx()), (ny, ny)).clone_owned();
        let chol = Cholesky::new(cyy).expect("oracle covariance PD");
        let resid = &yv - &my;
        let solved = chol.solve(&resid);
        let logdet: f64 = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|v| v.ln())
                .sum::<f64>();
        -0.5 * (ny as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + resid.dot(&solved))
    }

    /// Conditional distribution of the x-stack given the observations.
    pub fn condition_on(&self, y: &TimeSeriesMatrix) -> (DVector<f64>, DMatrix<f64>) {
        let (nx, ny) = (self.nx(), self.ny());
        let yv = stack_observations(y);
        let mx = self.mean.rows(0, nx).clone_owned();
        let my = self.mean.rows(nx, ny).clone_owned();
        let cxx = self.cov.view((0, 0), (nx, nx)).clone_owned();
        let cxy = self.cov.view((0, nx), (nx, ny)).clone_owned();
        let cyy = self.cov.view((nx, nx), (ny, ny)).clone_owned();
        let chol = Cholesky::new(cyy).expect("oracle covariance PD");
        // Cyy^-1 Cyx and Cyy^-1 (y - my).
        let solved_cross = chol.solve(&cxy.transpose());
        let solved_resid = chol.solve(&(&yv - &my));
        let mean = &mx + &cxy * solved_resid;
        let cov = &cxx - &cxy * solved_cross;
        (mean, cov)
    }
}

pub fn stack_observations(y: &TimeSeriesMatrix) -> DVector<f64> {
    let d = y.num_channels();
    let t_len = y.num_samples();
    DVector::from_fn(d * t_len, |k, _| y.values[(k % d, k / d)])
}

/// Build the dense joint by propagating means and covariances through the
/// linear system, block by block.
pub fn dense_joint(theta: &ModelParams, t_len: usize) -> DenseJoint {
    let d = theta.num_channels();
    let f = theta.transition_matrix();
    let nx = (t_len + 1) * d;
    let ny = t_len * d;
    let n = nx + ny;
    let mut mean = DVector::zeros(n);
    let mut cov = DMatrix::zeros(n, n);

    // State means.
    let mut m_prev = DVector::from_column_slice(&theta.init_mean);
    mean.rows_mut(0, d).copy_from(&m_prev);
    for t in 1..=t_len {
        let m_t = &f * &m_prev;
        mean.rows_mut(t * d, d).copy_from(&m_t);
        m_prev = m_t;
    }

    // State covariance blocks, upper-left corner, exploiting
    // Cov(x(t), x(s)) = F Cov(x(t-1), x(s)) for s < t.
    let get = |cov: &DMatrix<f64>, t: usize, s: usize| -> DMatrix<f64> {
        cov.view((t * d, s * d), (d, d)).clone_owned()
    };
    let put = |cov: &mut DMatrix<f64>, t: usize, s: usize, b: &DMatrix<f64>| {
        cov.view_mut((t * d, s * d), (d, d)).copy_from(b);
        if t != s {
            cov.view_mut((s * d, t * d), (d, d)).copy_from(&b.transpose());
        }
    };
    put(&mut cov, 0, 0, &DMatrix::identity(d, d));
    for t in 1..=t_len {
        for s in 0..t {
            let b = &f * get(&cov, t - 1, s);
            put(&mut cov, t, s, &b);
        }
        let mut diag = &f * get(&cov, t - 1, t - 1) * f.transpose();
        for i in 0..d {
            diag[(i, i)] += 1.0;
        }
        put(&mut cov, t, t, &diag);
    }

    // Observation parts: y(t) = H x(t) + eps, H = diag(c).
    let h_scale = |b: &DMatrix<f64>, left: bool, right: bool| -> DMatrix<f64> {
        let mut out = b.clone();
        for r in 0..d {
            for c_ in 0..d {
                if left {
                    out[(r, c_)] *= theta.obs_gain[r];
                }
                if right {
                    out[(r, c_)] *= theta.obs_gain[c_];
                }
            }
        }
        out
    };
    for t in 1..=t_len {
        let mx_t = mean.rows(t * d, d).clone_owned();
        for i in 0..d {
            mean[nx + (t - 1) * d + i] = theta.obs_gain[i] * mx_t[i];
        }
    }
    for t in 1..=t_len {
        // Cov(y(t), x(s)) for all s.
        for s in 0..=t_len {
            let b = h_scale(&get(&cov, t, s), true, false);
            cov.view_mut((nx + (t - 1) * d, s * d), (d, d)).copy_from(&b);
            cov.view_mut((s * d, nx + (t - 1) * d), (d, d))
                .copy_from(&b.transpose());
        }
        // Cov(y(t), y(u)).
        for u in 1..=t {
            let mut b = h_scale(&get(&cov, t, u), true, true);
            if u == t {
                for i in 0..d {
                    b[(i, i)] += theta.noise_var[i];
                }
            }
            cov.view_mut((nx + (t - 1) * d, nx + (u - 1) * d), (d, d))
                .copy_from(&b);
            if u != t {
                cov.view_mut((nx + (u - 1) * d, nx + (t - 1) * d), (d, d))
                    .copy_from(&b.transpose());
            }
        }
    }
    DenseJoint {
        d,
        t_len,
        mean,
        cov,
    }
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Batch-means standard error for autocorrelated sequences.
pub fn batch_means_se(xs: &[f64], n_batches: usize) -> f64 {
    let b = xs.len() / n_batches;
    assert!(b >= 2, "batches too small");
    let means: Vec<f64> = (0..n_batches)
        .map(|k| xs[k * b..(k + 1) * b].iter().sum::<f64>() / b as f64)
        .collect();
    let (_, se_of_batch) = mean_se(&means);
    se_of_batch
}

/// Fisher-Yates draw of `k` distinct indices from `0..n`.
pub fn sample_indices(n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.random_range(0..(n - i));
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}
