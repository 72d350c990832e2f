//! The conditioning steps on synthetic tones: decimation with its
//! anti-alias filter, the zero-phase notch, and removal of a shared
//! component across channels.

use nalgebra::DMatrix;
use ssmar::signal::{downsample, notch_filter, remove_first_pc};
use ssmar::types::TimeSeriesMatrix;

/// RMS over the middle half of the series, away from edge transients.
fn rms(y: &TimeSeriesMatrix, channel: usize) -> f64 {
    let t = y.num_samples();
    let mid = y.values.row(channel).columns(t / 4, t / 2).clone_owned();
    (mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt()
}

fn main() -> ssmar::Result<()> {
    // Two tones at 4 kHz: 100 Hz survives decimation to 1 kHz, 450 Hz sits
    // above the new passband and must disappear.
    let rate = 4000.0;
    let t_len = 16_000;
    let tone = |f: f64, t: usize| (2.0 * std::f64::consts::PI * f * t as f64 / rate).sin();
    let values = DMatrix::from_fn(2, t_len, |i, t| tone([100.0, 450.0][i], t));
    let y = TimeSeriesMatrix::new(values, rate, vec!["keep".into(), "alias".into()])?;

    let down = downsample(&y, 1000.0)?;
    println!("downsample 4000 Hz -> 1000 Hz ({} -> {} samples)", t_len, down.num_samples());
    println!("  100 Hz tone RMS: {:.4} (was {:.4})", rms(&down, 0), rms(&y, 0));
    println!(
        "  450 Hz tone RMS: {:.5} (was {:.4}), attenuation {:.0} dB",
        rms(&down, 1),
        rms(&y, 1),
        20.0 * (rms(&y, 1) / rms(&down, 1)).log10()
    );

    // Line interference: 60 Hz dies, a 50 Hz neighbor survives.
    let rate = 1000.0;
    let tone = |f: f64, t: usize| (2.0 * std::f64::consts::PI * f * t as f64 / rate).sin();
    let values = DMatrix::from_fn(2, 8000, |i, t| tone([60.0, 50.0][i], t));
    let y = TimeSeriesMatrix::new(values, rate, vec!["line".into(), "near".into()])?;
    let notched = notch_filter(&y, 60.0, 30.0)?;
    println!();
    println!("notch at 60 Hz (q = 30):");
    println!(
        "  60 Hz RMS {:.5} -> attenuation {:.0} dB",
        rms(&notched, 0),
        20.0 * (rms(&y, 0) / rms(&notched, 0)).log10()
    );
    println!("  50 Hz RMS {:.4} (unchanged to {:.2}%)", rms(&notched, 1),
        100.0 * (1.0 - rms(&notched, 1) / rms(&y, 1)).abs());

    // A strong shared component riding on three independent signals.
    let t_len = 2000;
    let shared: Vec<f64> = (0..t_len).map(|t| 3.0 * (0.011 * t as f64).sin()).collect();
    let own = |i: usize, t: usize| (0.005 * (i + 2) as f64 * t as f64).cos() * 0.4;
    let values = DMatrix::from_fn(3, t_len, |i, t| shared[t] * (1.0 + 0.2 * i as f64) + own(i, t));
    let y = TimeSeriesMatrix::with_default_labels(values, 1000.0)?;
    let cleaned = remove_first_pc(&y)?;
    println!();
    println!("first-principal-component removal:");
    for i in 0..3 {
        println!("  channel {} RMS: {:.3} -> {:.3}", i + 1, rms(&y, i), rms(&cleaned, i));
    }
    Ok(())
}
