//! Signal conditioning for recordings: anti-aliased integer down-sampling,
//! zero-phase notch filtering, and removal of the first principal
//! component.  All three are linear, and the filters are zero phase so
//! lead-lag structure survives for the directional model downstream.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::types::TimeSeriesMatrix;

/// Blackman windowed-sinc low-pass taps with unit DC gain.  Frequencies
/// are fractions of the sample rate; the tap count follows from the
/// requested transition width.
fn lowpass_taps(cutoff: f64, transition: f64) -> Vec<f64> {
    let mut n_taps = (5.5 / transition).ceil() as usize;
    if n_taps % 2 == 0 {
        n_taps += 1;
    }
    let m = (n_taps - 1) as f64;
    let mut taps: Vec<f64> = (0..n_taps)
        .map(|n| {
            let x = n as f64 - m / 2.0;
            let sinc = if x == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * x).sin() / (PI * x)
            };
            let window = 0.42 - 0.5 * (2.0 * PI * n as f64 / m).cos()
                + 0.08 * (4.0 * PI * n as f64 / m).cos();
            sinc * window
        })
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|v| *v /= total);
    taps
}

/// Symmetric FIR applied centered (zero phase), with even reflection at
/// the edges.
fn convolve_centered(row: &[f64], taps: &[f64]) -> Vec<f64> {
    let t_len = row.len() as isize;
    let half = (taps.len() / 2) as isize;
    let sample = |idx: isize| -> f64 {
        // Reflect indices back into range; series are much longer than
        // the kernel half-width in practice, but fold defensively.
        let mut i = idx;
        loop {
            if i < 0 {
                i = -i;
            } else if i >= t_len {
                i = 2 * (t_len - 1) - i;
            } else {
                return row[i as usize];
            }
        }
    };
    (0..t_len)
        .map(|t| {
            taps.iter()
                .enumerate()
                .map(|(k, &h)| h * sample(t + k as isize - half))
                .sum()
        })
        .collect()
}

/// Low-pass at 0.4 times the target rate, then keep every factor-th
/// sample.  The rate ratio must be an integer.
pub fn downsample(y: &TimeSeriesMatrix, target_hz: f64) -> Result<TimeSeriesMatrix> {
    if !(target_hz > 0.0) {
        return Err(Error::invalid("target rate must be positive"));
    }
    let ratio = y.sample_rate_hz / target_hz;
    let factor = ratio.round();
    if (ratio - factor).abs() > 1e-9 || factor < 1.0 {
        return Err(Error::invalid(format!(
            "target rate {target_hz} Hz does not divide the sample rate {} Hz by an integer",
            y.sample_rate_hz
        )));
    }
    let factor = factor as usize;
    let cutoff = 0.4 * target_hz / y.sample_rate_hz;
    let transition = 0.05 / factor as f64;
    let taps = lowpass_taps(cutoff, transition);

    let d = y.num_channels();
    let t_out = (y.num_samples() - 1) / factor + 1;
    let mut values = DMatrix::zeros(d, t_out);
    for i in 0..d {
        let row: Vec<f64> = y.values.row(i).iter().cloned().collect();
        let filtered = convolve_centered(&row, &taps);
        for (t, v) in values.row_mut(i).iter_mut().enumerate() {
            *v = filtered[t * factor];
        }
    }
    TimeSeriesMatrix::new(values, target_hz, y.channel_labels.clone())
}

/// Biquad coefficients of a notch at `freq` (fraction of sample rate)
/// with quality factor `q`, normalized so a0 = 1.
fn notch_biquad(freq: f64, q: f64) -> ([f64; 3], [f64; 3]) {
    let omega = 2.0 * PI * freq;
    let alpha = omega.sin() / (2.0 * q);
    let cosw = omega.cos();
    let a0 = 1.0 + alpha;
    (
        [1.0 / a0, -2.0 * cosw / a0, 1.0 / a0],
        [1.0, -2.0 * cosw / a0, (1.0 - alpha) / a0],
    )
}

/// Direct form II transposed, with the state opened at the step steady
/// state for the first sample so a constant passes through exactly.
fn biquad_forward(xs: &mut [f64], b: [f64; 3], a: [f64; 3]) {
    let g = (b[0] + b[1] + b[2]) / (1.0 + a[1] + a[2]);
    let x0 = xs.first().copied().unwrap_or(0.0);
    let mut z1 = x0 * (b[1] + b[2] - (a[1] + a[2]) * g);
    let mut z2 = x0 * (b[2] - a[2] * g);
    for x in xs.iter_mut() {
        let y = b[0] * *x + z1;
        z1 = b[1] * *x - a[1] * y + z2;
        z2 = b[2] * *x - a[2] * y;
        *x = y;
    }
}

/// Second-order notch run forward and backward (zero phase), with odd
/// reflection padding long enough to absorb the filter transient.
pub fn notch_filter(y: &TimeSeriesMatrix, freq_hz: f64, q: f64) -> Result<TimeSeriesMatrix> {
    let nyquist = y.sample_rate_hz / 2.0;
    if !(freq_hz > 0.0 && freq_hz < nyquist) {
        return Err(Error::invalid(format!(
            "notch frequency {freq_hz} Hz must lie below the Nyquist rate {nyquist} Hz"
        )));
    }
    if !(q > 0.0) {
        return Err(Error::invalid("quality factor must be positive"));
    }
    let (b, a) = notch_biquad(freq_hz / y.sample_rate_hz, q);
    let t_len = y.num_samples();
    // Transient scale: ring-down time of a notch is q cycles of the notch
    // frequency; three of those comfortably cover it.
    let pad = ((3.0 * q * y.sample_rate_hz / freq_hz).ceil() as usize).min(t_len - 1);

    let d = y.num_channels();
    let mut values = DMatrix::zeros(d, t_len);
    for i in 0..d {
        let row: Vec<f64> = y.values.row(i).iter().cloned().collect();
        let mut padded = Vec::with_capacity(t_len + 2 * pad);
        for k in (1..=pad).rev() {
            padded.push(2.0 * row[0] - row[k]);
        }
        padded.extend_from_slice(&row);
        for k in 1..=pad {
            padded.push(2.0 * row[t_len - 1] - row[t_len - 1 - k]);
        }
        biquad_forward(&mut padded, b, a);
        padded.reverse();
        biquad_forward(&mut padded, b, a);
        padded.reverse();
        for (t, v) in values.row_mut(i).iter_mut().enumerate() {
            *v = padded[pad + t];
        }
    }
    TimeSeriesMatrix::new(values, y.sample_rate_hz, y.channel_labels.clone())
}

/// Center each channel over time and project out the first principal
/// direction of the channel covariance.
pub fn remove_first_pc(y: &TimeSeriesMatrix) -> Result<TimeSeriesMatrix> {
    let d = y.num_channels();
    let t_len = y.num_samples();
    let mut centered = y.values.clone();
    for i in 0..d {
        let mean = centered.row(i).sum() / t_len as f64;
        centered.row_mut(i).iter_mut().for_each(|v| *v -= mean);
    }
    let cov = &centered * centered.transpose() / (t_len as f64 - 1.0);
    let eig = cov.symmetric_eigen();
    let (mut top_idx, mut top_val) = (0usize, f64::NEG_INFINITY);
    let mut total = 0.0;
    for (k, &v) in eig.eigenvalues.iter().enumerate() {
        total += v.max(0.0);
        if v > top_val {
            top_val = v;
            top_idx = k;
        }
    }
    if !(top_val > 0.0) || total <= 0.0 {
        return Err(Error::invalid("input has no variance to decompose"));
    }
    let v = eig.eigenvectors.column(top_idx).clone_owned();
    let scores = v.transpose() * &centered;
    let values = centered - v * scores;
    TimeSeriesMatrix::new(values, y.sample_rate_hz, y.channel_labels.clone())
}
