//! Potential scale reduction across independent chains on the same data:
//! values near 1 mean the chains explore the same distribution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssmar::inference::gelman_rubin;
use ssmar::runner::{fit_dataset, FitOptions};
use ssmar::simgen::{generate_example1, SimConfig};

fn main() -> ssmar::Result<()> {
    let cfg = SimConfig {
        cluster_sizes: vec![3, 3],
        t_len: 300,
        ..SimConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data = generate_example1(&cfg, &mut rng)?;

    let opts = FitOptions {
        n_iter: 1_500,
        n_burnin: 750,
        ..FitOptions::default()
    };
    let n_chains = 4;
    println!("running {n_chains} chains...");
    let fits: Vec<_> = (0..n_chains)
        .map(|c| fit_dataset(&data.y, &opts, 1000 + c as u64))
        .collect::<ssmar::Result<_>>()?;

    // Group the scalar traces by name across chains.
    let names: Vec<String> = fits[0].chain.traces.iter().map(|t| t.name.clone()).collect();
    println!("{} traced parameters; a sample of R-hat values:", names.len());
    let mut worst: (f64, String) = (f64::NEG_INFINITY, String::new());
    for (idx, name) in names.iter().enumerate() {
        let per_chain: Vec<Vec<f64>> = fits
            .iter()
            .map(|f| f.chain.traces[idx].values.clone())
            .collect();
        let rhat = gelman_rubin(&per_chain)?;
        if rhat > worst.0 {
            worst = (rhat, name.clone());
        }
        if idx % (names.len() / 8).max(1) == 0 {
            println!("  {name:<12} {rhat:.4}");
        }
    }
    println!("worst: {} at {:.4}", worst.1, worst.0);
    Ok(())
}
