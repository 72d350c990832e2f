//! How MAP-EM selects the number of clusters: it starts from d singleton
//! clusters and lets the label updates merge them while the penalized
//! objective climbs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssmar::em::em_fit;
use ssmar::model::default_hyperparams;
use ssmar::simgen::{generate_example1, SimConfig};

fn main() -> ssmar::Result<()> {
    let cfg = SimConfig {
        cluster_sizes: vec![4, 4, 4],
        t_len: 500,
        ..SimConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let data = generate_example1(&cfg, &mut rng)?;

    let d = data.y.num_channels();
    let h = default_hyperparams(d)?;
    let fit = em_fit(&data.y, &h, 200, 1e-6)?;

    println!("true partition: three clusters of four channels");
    println!("EM started from {d} singletons and selected {} clusters", fit.k_selected);
    println!("labels: {:?}", fit.params.labels);

    let trace = &fit.objective_trace;
    println!("objective over {} steps:", trace.len() - 1);
    println!("  start {:.2}", trace[0]);
    for (step, pair) in trace.windows(2).enumerate().take(5) {
        println!("  step {:>2}: {:.2}  (+{:.3})", step + 1, pair[1], pair[1] - pair[0]);
    }
    if trace.len() > 6 {
        println!("  ...");
    }
    println!("  final {:.2}", trace.last().unwrap());

    let monotone = trace.windows(2).all(|w| w[1] >= w[0] - 1e-8 * (1.0 + w[0].abs()));
    println!("monotone ascent: {monotone}");
    Ok(())
}
