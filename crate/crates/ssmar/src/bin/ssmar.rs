//! Command-line front end.  Each subcommand is a thin wrapper over the
//! library: parse flags, read files, call one runner or inference entry
//! point, write results plus a run manifest (config, seed, input hashes).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ssmar::inference::{calibrate_thresholds, network_estimate};
use ssmar::io;
use ssmar::pipeline::PipelineManifest;
use ssmar::runner::{self, FitOptions, PipelineOptions};
use ssmar::simgen::{generate_example1, roc_curve, GroundTruth, Restrict, SimConfig};

#[derive(Parser)]
#[command(
    name = "ssmar",
    about = "Directed network inference from multivariate time series",
    version
)]
struct Cli {
    /// Worker threads for parallel jobs (default: available cores).
    /// Results are identical for any value.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a clustered VAR benchmark dataset with ground truth.
    Simulate(SimulateArgs),
    /// EM initialisation plus one Gibbs chain on a dataset.
    Fit(FitArgs),
    /// Cut decoupled surrogate segments from a recording and fit each.
    Null(NullArgs),
    /// Selection thresholds from null summaries at a p-value.
    Calibrate(CalibrateArgs),
    /// Threshold a summary into clusters and directed edges.
    Network(NetworkArgs),
    /// ROC curve and AUC of a score matrix against ground truth.
    Roc(RocArgs),
    /// Full onset analysis over a period manifest.
    Pipeline(PipelineArgs),
    /// Potential scale reduction over chain trace files.
    Diag(DiagArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Comma-separated cluster sizes.
    #[arg(long, default_value = "15,15,20")]
    clusters: String,
    #[arg(long, default_value_t = 1000)]
    t_len: usize,
    #[arg(long, default_value_t = 0.9)]
    within: f64,
    #[arg(long, default_value_t = 0.09)]
    between: f64,
    #[arg(long, default_value_t = 10.0)]
    snr: f64,
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
}

#[derive(Args)]
struct FitArgs {
    /// Input recording CSV (sidecar JSON read if present).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Cluster-count override; omitted = EM-selected.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    /// Burn-in; defaults to half the iterations.
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct NullArgs {
    /// Long recording the surrogate segments are cut from.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Samples per surrogate segment.
    #[arg(long)]
    t_len: usize,
    #[arg(long, default_value_t = 10)]
    segments: usize,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Null summaries JSON written by `null`.
    #[arg(long)]
    nulls: PathBuf,
    /// Null exceedance probability for the thresholds.
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct NetworkArgs {
    /// Posterior summary JSON.
    #[arg(long)]
    summary: PathBuf,
    /// Co-clustering probability threshold.
    #[arg(long)]
    pm: f64,
    /// Edge probability threshold.
    #[arg(long)]
    pg: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RocArgs {
    /// Score matrix CSV (d x d).
    #[arg(long)]
    scores: PathBuf,
    /// Ground truth JSON written by `simulate`.
    #[arg(long)]
    truth: PathBuf,
    /// Candidate pairs to score: all, within or between.
    #[arg(long, default_value = "all")]
    restrict: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// Recording CSV.
    #[arg(long)]
    data: PathBuf,
    /// Period manifest JSON: {seizures: [{onset_s, periods: [...]}]}.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    window: f64,
    /// Decimate to this rate before anything else.
    #[arg(long)]
    target_hz: Option<f64>,
    /// Notch frequency; 0 disables.
    #[arg(long, default_value_t = 60.0)]
    notch: f64,
    #[arg(long, default_value_t = 30.0)]
    notch_q: f64,
    /// Skip first-principal-component removal.
    #[arg(long)]
    no_pc: bool,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    #[arg(long)]
    burnin: Option<usize>,
    /// Cluster-count override passed to every window fit.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct DiagArgs {
    /// Trace CSV files, one per chain (at least two).
    #[arg(long, required = true, num_args = 1..)]
    traces: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_sizes(text: &str) -> anyhow::Result<Vec<usize>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .with_context(|| format!("bad cluster size {part:?} in --clusters"))
        })
        .collect()
}

fn fit_options(k: Option<usize>, iters: usize, burnin: Option<usize>, thin: usize) -> FitOptions {
    FitOptions {
        k,
        n_iter: iters,
        n_burnin: burnin.unwrap_or(iters / 2),
        thin,
        ..FitOptions::default()
    }
}

fn ensure_out(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write_run_manifest(
    out: &Path,
    command: &str,
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: &[&Path],
) -> anyhow::Result<()> {
    let mut manifest = io::RunManifest::new(command, config, seed);
    for input in inputs {
        manifest
            .add_input(input)
            .with_context(|| format!("hashing input {}", input.display()))?;
    }
    manifest.write(out.join("run_manifest.json"))?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let cfg = SimConfig {
        cluster_sizes: parse_sizes(&args.clusters)?,
        t_len: args.t_len,
        within_density: args.within,
        between_density: args.between,
        snr: args.snr,
        sample_rate_hz: args.rate,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let data = generate_example1(&cfg, &mut rng)?;
    ensure_out(&args.out)?;
    io::write_time_series(args.out.join("y.csv"), &data.y)?;
    io::write_json(args.out.join("truth.json"), &data.truth)?;
    write_run_manifest(
        &args.out,
        "simulate",
        serde_json::to_value(&cfg)?,
        Some(args.seed),
        &[],
    )
}

fn cmd_fit(args: FitArgs) -> anyhow::Result<()> {
    let y = io::read_time_series(&args.data)
        .with_context(|| format!("reading --data {}", args.data.display()))?;
    let opts = fit_options(args.k, args.iters, args.burnin, args.thin);
    let fit = runner::fit_dataset(&y, &opts, args.seed)?;
    ensure_out(&args.out)?;
    io::write_chain_output(args.out.join("chain_output.json"), &fit.chain)?;
    io::write_traces_csv(args.out.join("traces.csv"), &fit.chain.traces)?;
    io::write_summary(args.out.join("summary.json"), &fit.summary)?;
    io::write_params(args.out.join("em_params.json"), &fit.em.params)?;
    write_run_manifest(
        &args.out,
        "fit",
        serde_json::to_value(&opts)?,
        Some(args.seed),
        &[&args.data],
    )?;
    println!(
        "fit: d={} k={} retained={}",
        y.num_channels(),
        fit.init.num_clusters(),
        fit.chain.n_retained
    );
    Ok(())
}

fn cmd_null(args: NullArgs) -> anyhow::Result<()> {
    let y = io::read_time_series(&args.data)
        .with_context(|| format!("reading --data {}", args.data.display()))?;
    let opts = fit_options(None, args.iters, args.burnin, 1);
    let summaries = runner::run_null(&y, args.t_len, args.segments, &opts, args.seed)?;
    ensure_out(&args.out)?;
    io::write_summaries(args.out.join("null_summaries.json"), &summaries)?;
    let config = serde_json::json!({
        "t_len": args.t_len,
        "segments": args.segments,
        "fit": opts,
    });
    write_run_manifest(&args.out, "null", config, Some(args.seed), &[&args.data])?;
    println!("null: {} segment summaries", summaries.len());
    Ok(())
}

fn cmd_calibrate(args: CalibrateArgs) -> anyhow::Result<()> {
    let summaries = io::read_summaries(&args.nulls)
        .with_context(|| format!("reading --nulls {}", args.nulls.display()))?;
    let (threshold_m, threshold_gamma) = calibrate_thresholds(&summaries, args.p)?;
    ensure_out(&args.out)?;
    io::write_json(
        args.out.join("thresholds.json"),
        &serde_json::json!({
            "p": args.p,
            "threshold_m": threshold_m,
            "threshold_gamma": threshold_gamma,
        }),
    )?;
    write_run_manifest(
        &args.out,
        "calibrate",
        serde_json::json!({ "p": args.p }),
        None,
        &[&args.nulls],
    )?;
    println!("calibrate: threshold_m={threshold_m} threshold_gamma={threshold_gamma}");
    Ok(())
}

fn cmd_network(args: NetworkArgs) -> anyhow::Result<()> {
    let summary = io::read_summary(&args.summary)
        .with_context(|| format!("reading --summary {}", args.summary.display()))?;
    let network = network_estimate(&summary, args.pm, args.pg);
    ensure_out(&args.out)?;
    io::write_network(args.out.join("network.json"), &network)?;
    let edge_rows: Vec<(usize, usize, f64)> = network
        .edges
        .iter()
        .map(|&(from, to)| (from, to, summary.edge_prob[(to, from)]))
        .collect();
    io::write_edge_csv(args.out.join("edges.csv"), &edge_rows)?;
    io::write_cluster_csv(args.out.join("clusters.csv"), &network.clusters)?;
    write_run_manifest(
        &args.out,
        "network",
        serde_json::json!({ "pm": args.pm, "pg": args.pg }),
        None,
        &[&args.summary],
    )?;
    println!(
        "network: {} clusters, {} edges",
        network.clusters.len(),
        network.edges.len()
    );
    Ok(())
}

fn cmd_roc(args: RocArgs) -> anyhow::Result<()> {
    let scores = io::read_matrix_csv(&args.scores)
        .with_context(|| format!("reading --scores {}", args.scores.display()))?;
    let truth: GroundTruth = io::read_json(&args.truth)
        .with_context(|| format!("reading --truth {}", args.truth.display()))?;
    let restrict = match args.restrict.as_str() {
        "all" => Restrict::All,
        "within" => Restrict::Within,
        "between" => Restrict::Between,
        other => bail!("--restrict must be all, within or between, got {other:?}"),
    };
    let (points, auc) = roc_curve(&scores, &truth, restrict)?;
    ensure_out(&args.out)?;
    io::write_roc_csv(args.out.join("roc.csv"), &points)?;
    io::write_json(
        args.out.join("roc.json"),
        &serde_json::json!({ "auc": auc, "restrict": args.restrict, "points": points.len() }),
    )?;
    write_run_manifest(
        &args.out,
        "roc",
        serde_json::json!({ "restrict": args.restrict }),
        None,
        &[&args.scores, &args.truth],
    )?;
    println!("roc: auc={auc:.4}");
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs) -> anyhow::Result<()> {
    let y = io::read_time_series(&args.data)
        .with_context(|| format!("reading --data {}", args.data.display()))?;
    let manifest: PipelineManifest = io::read_json(&args.manifest)
        .with_context(|| format!("reading --manifest {}", args.manifest.display()))?;
    let opts = PipelineOptions {
        target_hz: args.target_hz,
        notch_hz: (args.notch > 0.0).then_some(args.notch),
        notch_q: args.notch_q,
        remove_common: !args.no_pc,
        window_s: args.window,
        fit: fit_options(args.k, args.iters, args.burnin, 1),
    };
    let result = runner::run_pipeline(&y, &manifest, &opts, args.seed)?;
    ensure_out(&args.out)?;

    let mut adc_rows: Vec<(String, Vec<f64>)> = Vec::new();
    for (si, seizure) in result.seizures.iter().enumerate() {
        for period in &seizure.periods {
            adc_rows.push((format!("s{}:{}", si + 1, period.label), period.adc.clone()));
        }
    }
    io::write_adc_csv(args.out.join("adc.csv"), &result.channel_labels, &adc_rows)?;
    io::write_candidates_csv(
        args.out.join("candidates.csv"),
        &result.channel_labels,
        &result.candidates,
    )?;
    write_run_manifest(
        &args.out,
        "pipeline",
        serde_json::to_value(&opts)?,
        Some(args.seed),
        &[&args.data, &args.manifest],
    )?;
    let names: Vec<&str> = result
        .candidates
        .iter()
        .map(|&j| result.channel_labels[j].as_str())
        .collect();
    println!("pipeline: candidates [{}]", names.join(", "));
    Ok(())
}

fn cmd_diag(args: DiagArgs) -> anyhow::Result<()> {
    if args.traces.len() < 2 {
        bail!("--traces needs at least 2 chain files");
    }
    let chains: Vec<Vec<ssmar::sampler::ScalarTrace>> = args
        .traces
        .iter()
        .map(|p| io::read_traces_csv(p).with_context(|| format!("reading {}", p.display())))
        .collect::<anyhow::Result<_>>()?;

    // R-hat per parameter name present in every chain.
    let mut rows: Vec<(String, f64)> = Vec::new();
    for trace in &chains[0] {
        let mut per_chain: Vec<Vec<f64>> = vec![trace.values.clone()];
        for chain in &chains[1..] {
            match chain.iter().find(|t| t.name == trace.name) {
                Some(t) => per_chain.push(t.values.clone()),
                None => bail!("trace {:?} missing from one of the chains", trace.name),
            }
        }
        let rhat = ssmar::inference::gelman_rubin(&per_chain)?;
        rows.push((trace.name.clone(), rhat));
    }

    ensure_out(&args.out)?;
    let mut w = csv::Writer::from_path(args.out.join("rhat.csv"))?;
    w.write_record(["parameter", "rhat"])?;
    for (name, rhat) in &rows {
        w.write_record([name.clone(), format!("{rhat}")])?;
    }
    w.flush()?;
    let inputs: Vec<&Path> = args.traces.iter().map(PathBuf::as_path).collect();
    write_run_manifest(
        &args.out,
        "diag",
        serde_json::json!({ "chains": args.traces.len() }),
        None,
        &inputs,
    )?;
    let worst = rows.iter().map(|(_, r)| *r).fold(f64::NEG_INFINITY, f64::max);
    println!("diag: {} parameters, max rhat {worst:.4}", rows.len());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("initialising worker pool")?;
    }
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Null(args) => cmd_null(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Network(args) => cmd_network(args),
        Command::Roc(args) => cmd_roc(args),
        Command::Pipeline(args) => cmd_pipeline(args),
        Command::Diag(args) => cmd_diag(args),
    }
}
