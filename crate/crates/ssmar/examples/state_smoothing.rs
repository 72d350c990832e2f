//! Latent state recovery on one channel: filtered means, smoothed means
//! and a handful of posterior state draws around the truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssmar::model::{default_hyperparams, sample_prior, simulate_observations, simulate_states};
use ssmar::statespace::{ffbs_sample, kalman_filter, kalman_smoother};

fn main() -> ssmar::Result<()> {
    let d = 3;
    let t_len = 12;
    let h = default_hyperparams(1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut theta = sample_prior(d, &h, &mut rng)?;
    // Keep the example well behaved: moderate dynamics, tight noise.
    theta.coeffs *= 0.4;
    theta.noise_var.iter_mut().for_each(|v| *v = 0.3);
    theta.obs_gain.iter_mut().for_each(|c| *c = 1.0);

    let states = simulate_states(&theta, t_len, &mut rng);
    let y = simulate_observations(&states, &theta, 1.0, &mut rng)?;
    let filt = kalman_filter(&y, &theta)?;
    let smooth = kalman_smoother(&y, &theta)?;

    println!("marginal log-likelihood: {:.4}", filt.loglik);
    println!();
    println!("channel 1:  t    truth   filtered  smoothed   draws...");
    let mut draws = Vec::new();
    for k in 0..3 {
        let mut draw_rng = ChaCha8Rng::seed_from_u64(300 + k);
        draws.push(ffbs_sample(&y, &theta, &mut draw_rng)?);
    }
    for t in 1..=t_len {
        let sampled: Vec<String> = draws
            .iter()
            .map(|x| format!("{:>7.3}", x.values[(0, t)]))
            .collect();
        println!(
            "           {t:>2}  {:>7.3}  {:>8.3}  {:>8.3}  {}",
            states.values[(0, t)],
            filt.filt_mean[t][0],
            smooth.smooth_mean[t][0],
            sampled.join(" ")
        );
    }
    println!();

    // The smoother pools future observations, so its errors should not
    // exceed the filter's on average.
    let (mut fe, mut se) = (0.0, 0.0);
    for t in 1..=t_len {
        for i in 0..d {
            fe += (filt.filt_mean[t][i] - states.values[(i, t)]).powi(2);
            se += (smooth.smooth_mean[t][i] - states.values[(i, t)]).powi(2);
        }
    }
    let n = (d * t_len) as f64;
    println!("mean squared error: filtered {:.4}, smoothed {:.4}", fe / n, se / n);
    Ok(())
}
