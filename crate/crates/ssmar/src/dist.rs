//! Random draws and seed plumbing shared by the samplers.
//!
//! Everything takes an explicit `&mut impl Rng` so chains stay reproducible
//! from a single seed.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// splitmix64 finalizer; decorrelates nearby seeds.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-task seed from a master seed and a task index.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix64(master ^ mix64(stream))
}

pub fn sample_std_normal(rng: &mut (impl Rng + ?Sized)) -> f64 {
    StandardNormal.sample(rng)
}

pub fn sample_normal(mean: f64, sd: f64, rng: &mut (impl Rng + ?Sized)) -> f64 {
    mean + sd * sample_std_normal(rng)
}

/// Gamma(shape, scale) draw.
pub fn sample_gamma(shape: f64, scale: f64, rng: &mut (impl Rng + ?Sized)) -> Result<f64> {
    let g = Gamma::new(shape, scale)
        .map_err(|e| Error::invalid(format!("gamma({shape}, {scale}): {e}")))?;
    Ok(g.sample(rng))
}

/// Inverse-gamma draw with density proportional to
/// `x^-(shape+1) * exp(-scale/x)`.
pub fn sample_inv_gamma(shape: f64, scale: f64, rng: &mut (impl Rng + ?Sized)) -> Result<f64> {
    // 1/x is Gamma(shape) with rate `scale`.
    let g = sample_gamma(shape, 1.0 / scale, rng)?;
    if g <= 0.0 {
        // Subnormal gamma draw; retry once before giving up.
        let g2 = sample_gamma(shape, 1.0 / scale, rng)?;
        if g2 <= 0.0 {
            return Err(Error::numerical("gamma draw underflowed to zero"));
        }
        return Ok(1.0 / g2);
    }
    Ok(1.0 / g)
}

/// Dirichlet draw via normalized gammas.
pub fn sample_dirichlet(alpha: &[f64], rng: &mut (impl Rng + ?Sized)) -> Result<Vec<f64>> {
    if alpha.is_empty() || alpha.iter().any(|&a| !(a.is_finite() && a > 0.0)) {
        return Err(Error::invalid("dirichlet needs positive concentrations"));
    }
    if alpha.len() == 1 {
        return Ok(vec![1.0]);
    }
    let mut draws = Vec::with_capacity(alpha.len());
    let mut total = 0.0;
    for &a in alpha {
        let g = sample_gamma(a, 1.0, rng)?;
        total += g;
        draws.push(g);
    }
    if total <= 0.0 {
        return Err(Error::numerical("dirichlet gamma draws all underflowed"));
    }
    for g in &mut draws {
        *g /= total;
    }
    Ok(draws)
}

/// Categorical draw from unnormalized log weights.
pub fn sample_categorical_from_log(log_w: &[f64], rng: &mut (impl Rng + ?Sized)) -> Result<usize> {
    let m = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::numerical("categorical weights are all zero"));
    }
    let mut total = 0.0;
    let w: Vec<f64> = log_w.iter().map(|&lw| (lw - m).exp()).collect();
    for v in &w {
        total += v;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, v) in w.iter().enumerate() {
        acc += v;
        if u < acc {
            return Ok(k);
        }
    }
    Ok(w.len() - 1)
}

/// Unnormalized Beta(a, b) log density.
fn beta_log_density(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        // Valid only at interior points; endpoints handled by callers.
        if (x == 0.0 && a >= 1.0) || (x == 1.0 && b >= 1.0) {
            return if (x == 0.0 && a > 1.0) || (x == 1.0 && b > 1.0) {
                f64::NEG_INFINITY
            } else {
                0.0
            };
        }
        return f64::INFINITY;
    }
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln()
}

/// Beta(a, b) draw restricted to `[lo, hi]`.
///
/// Inverse CDF by bisection on the regularized incomplete beta; when the
/// truncated mass underflows (deep-tail truncation) the CDF is flat at
/// machine precision, so fall back to rejection under an exponential
/// envelope tangent to the log density at the boundary nearest the mode.
pub fn sample_truncated_beta(a: f64, b: f64, lo: f64, hi: f64, rng: &mut (impl Rng + ?Sized)) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::invalid(format!("beta shapes must be positive: {a}, {b}")));
    }
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
        return Err(Error::invalid(format!("bad truncation interval [{lo}, {hi}]")));
    }
    let f_lo = beta_reg(a, b, lo);
    let f_hi = beta_reg(a, b, hi);
    let mass = f_hi - f_lo;
    if mass > 1e-12 {
        let target = f_lo + rng.random::<f64>() * mass;
        let (mut l, mut h) = (lo, hi);
        for _ in 0..80 {
            let mid = 0.5 * (l + h);
            if beta_reg(a, b, mid) >= target {
                h = mid;
            } else {
                l = mid;
            }
        }
        return Ok(0.5 * (l + h));
    }
    sample_truncated_beta_tail(a, b, lo, hi, rng)
}

/// Rejection sampler for the underflow regime.  The log density is concave
/// for `a, b >= 1`, so a tangent line at either boundary dominates it.
fn sample_truncated_beta_tail(
    a: f64,
    b: f64,
    lo: f64,
    hi: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Result<f64> {
    let eps = 1e-300;
    let lo_in = lo.max(eps);
    let hi_in = hi.min(1.0 - 1e-16);
    let dlog = |x: f64| (a - 1.0) / x - (b - 1.0) / (1.0 - x);
    let width = hi_in - lo_in;
    let concave = a >= 1.0 && b >= 1.0;

    // (anchor, signed slope toward the interior); None means uniform proposal.
    let plan = if concave && dlog(lo_in) <= 0.0 {
        Some((lo_in, -dlog(lo_in), false))
    } else if concave && dlog(hi_in) >= 0.0 {
        Some((hi_in, dlog(hi_in), true))
    } else {
        None
    };

    for _ in 0..10_000 {
        let (x, log_env) = match plan {
            Some((anchor, rate, from_hi)) => {
                let u = rng.random::<f64>();
                let offset = if rate * width < 1e-12 {
                    u * width
                } else {
                    -(1.0 - u * (1.0 - (-rate * width).exp())).ln() / rate
                };
                let x = if from_hi { anchor - offset } else { anchor + offset };
                let x = x.clamp(lo_in, hi_in);
                let env = beta_log_density(a, b, anchor) - rate * offset;
                (x, env)
            }
            None => {
                let x = lo_in + rng.random::<f64>() * width;
                let cap = beta_log_density(a, b, lo_in).max(beta_log_density(a, b, hi_in));
                (x, cap.max(beta_log_density(a, b, x)))
            }
        };
        let log_accept = beta_log_density(a, b, x) - log_env;
        if log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept {
            return Ok(x);
        }
    }
    // Numerically a point mass at the denser boundary.
    if beta_log_density(a, b, lo_in) >= beta_log_density(a, b, hi_in) {
        Ok(lo_in)
    } else {
        Ok(hi_in)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn derived_seeds_differ_across_streams() {
        let s: Vec<u64> = (0..100).map(|i| derive_seed(42, i)).collect();
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        // Same inputs reproduce.
        assert_eq!(derive_seed(42, 7), derive_seed(42, 7));
    }

    #[test]
    fn inv_gamma_moments() {
        // IG(5, 8): mean = 8/4 = 2, var = 64/(16*3) = 4/3.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = sample_inv_gamma(5.0, 8.0, &mut rng).unwrap();
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
        assert!((var - 4.0 / 3.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn dirichlet_moments() {
        // Dir(2, 3, 5): E = (0.2, 0.3, 0.5), Var_1 = 0.2*0.8/11.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mut mean = [0.0; 3];
        let mut m2 = 0.0;
        for _ in 0..n {
            let p = sample_dirichlet(&[2.0, 3.0, 5.0], &mut rng).unwrap();
            for k in 0..3 {
                mean[k] += p[k];
            }
            m2 += p[0] * p[0];
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        m2 /= n as f64;
        assert!((mean[0] - 0.2).abs() < 0.005);
        assert!((mean[1] - 0.3).abs() < 0.005);
        assert!((mean[2] - 0.5).abs() < 0.005);
        let var = m2 - mean[0] * mean[0];
        assert!((var - 0.2 * 0.8 / 11.0).abs() < 0.002, "var {var}");
    }

    #[test]
    fn dirichlet_single_component_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(sample_dirichlet(&[1.0], &mut rng).unwrap(), vec![1.0]);
    }

    #[test]
    fn categorical_from_log_matches_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // Large shared offset must not disturb the normalized weights.
        let log_w = [1000.0 + 0.1f64.ln(), 1000.0 + 0.6f64.ln(), 1000.0 + 0.3f64.ln()];
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[sample_categorical_from_log(&log_w, &mut rng).unwrap()] += 1;
        }
        let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        assert!((freq[0] - 0.1).abs() < 0.005);
        assert!((freq[1] - 0.6).abs() < 0.005);
        assert!((freq[2] - 0.3).abs() < 0.005);
    }

    #[test]
    fn categorical_ignores_impossible_categories() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let log_w = [f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY];
        for _ in 0..100 {
            assert_eq!(sample_categorical_from_log(&log_w, &mut rng).unwrap(), 1);
        }
        assert!(sample_categorical_from_log(&[f64::NEG_INFINITY; 2], &mut rng).is_err());
    }

    #[test]
    fn truncated_beta_rejects_bad_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(sample_truncated_beta(0.0, 1.0, 0.0, 1.0, &mut rng).is_err());
        assert!(sample_truncated_beta(1.0, 1.0, 0.7, 0.2, &mut rng).is_err());
        assert!(sample_truncated_beta(1.0, 1.0, -0.1, 0.5, &mut rng).is_err());
    }

    #[test]
    fn truncated_beta_stays_inside_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let x = sample_truncated_beta(3.0, 2.0, 0.9, 1.0, &mut rng).unwrap();
            assert!((0.9..=1.0).contains(&x));
            let y = sample_truncated_beta(400.0, 3.0, 0.0, 0.1, &mut rng).unwrap();
            assert!((0.0..=0.1).contains(&y));
        }
    }
}
