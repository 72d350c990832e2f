//! File formats shared by the CLI, the examples and downstream tooling.
//!
//! Recordings travel as CSV (one row per channel, optional first row of
//! channel labels) with a JSON sidecar carrying the sample rate.  Model
//! parameters, summaries and network estimates are JSON with fixed field
//! names; cluster labels and node indices are 1-based on disk and 0-based
//! in memory.  Every CLI run also writes a manifest recording its config,
//! seed and the SHA-256 of each input file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read as _};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sampler::{ChainOutput, ScalarTrace};
use crate::types::{default_labels, NetworkEstimate, PosteriorSummary, TimeSeriesMatrix};

/// Write any serializable value as pretty JSON.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

/// Read a JSON file into a deserializable value.
pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let file = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

/// Sidecar path of a data CSV: same stem, `.json` extension.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    sample_rate_hz: f64,
    channel_labels: Vec<String>,
}

/// Write a recording as CSV (label header row, then one row per channel)
/// plus its sidecar.
pub fn write_time_series(csv_path: impl AsRef<Path>, y: &TimeSeriesMatrix) -> Result<()> {
    let csv_path = csv_path.as_ref();
    // Flexible: the label header has d fields while data rows have T.
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(csv_path)?;
    w.write_record(&y.channel_labels)?;
    for i in 0..y.num_channels() {
        w.write_record(y.values.row(i).iter().map(|v| format!("{v:.17e}")))?;
    }
    w.flush().map_err(Error::Io)?;
    write_json(
        sidecar_path(csv_path),
        &Sidecar {
            sample_rate_hz: y.sample_rate_hz,
            channel_labels: y.channel_labels.clone(),
        },
    )
}

/// Read a recording written by [`write_time_series`], or any CSV with one
/// row per channel.  A first row that does not parse as numbers is taken
/// as channel labels.  Without a sidecar the sample rate defaults to 1 Hz.
pub fn read_time_series(csv_path: impl AsRef<Path>) -> Result<TimeSeriesMatrix> {
    let csv_path = csv_path.as_ref();
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(csv_path)?;
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in r.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(vals) => rows.push(vals),
            Err(_) if idx == 0 => {
                header = Some(record.iter().map(|f| f.trim().to_string()).collect());
            }
            Err(_) => {
                return Err(Error::invalid(format!(
                    "non-numeric value in data row {} of {}",
                    idx + 1,
                    csv_path.display()
                )));
            }
        }
    }
    let d = rows.len();
    let t_len = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != t_len) {
        return Err(Error::invalid("data rows have unequal lengths"));
    }
    if d == 0 || t_len == 0 {
        return Err(Error::invalid(format!("{} holds no data", csv_path.display())));
    }
    let values = DMatrix::from_fn(d, t_len, |i, t| rows[i][t]);

    let side = sidecar_path(csv_path);
    let (rate, side_labels) = if side.is_file() {
        let s: Sidecar = read_json(&side)?;
        (s.sample_rate_hz, Some(s.channel_labels))
    } else {
        (1.0, None)
    };
    let labels = header
        .or(side_labels)
        .unwrap_or_else(|| default_labels(d));
    TimeSeriesMatrix::new(values, rate, labels)
}

fn mat_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect()
}

fn rows_to_mat(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::invalid(format!("{what} must be a non-empty rectangular matrix")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// On-disk form of the model parameters.
#[derive(Debug, Serialize, Deserialize)]
struct ParamsFile {
    gamma: Vec<Vec<u8>>,
    #[serde(rename = "A")]
    coeffs: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    block_probs: Vec<Vec<f64>>,
    /// 1-based cluster labels.
    m: Vec<usize>,
    c: Vec<f64>,
    tau: Vec<f64>,
    mu: Vec<f64>,
    p: Vec<f64>,
}

pub fn write_params(path: impl AsRef<Path>, theta: &ModelParams) -> Result<()> {
    let file = ParamsFile {
        gamma: (0..theta.edge_ind.nrows())
            .map(|i| theta.edge_ind.row(i).iter().cloned().collect())
            .collect(),
        coeffs: mat_to_rows(&theta.coeffs),
        block_probs: mat_to_rows(&theta.block_probs),
        m: theta.labels.iter().map(|&l| l + 1).collect(),
        c: theta.obs_gain.clone(),
        tau: theta.noise_var.clone(),
        mu: theta.init_mean.clone(),
        p: theta.weights.clone(),
    };
    write_json(path, &file)
}

pub fn read_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let file: ParamsFile = read_json(path)?;
    let d = file.gamma.len();
    let ncols = file.gamma.first().map(Vec::len).unwrap_or(0);
    if d == 0 || ncols != d || file.gamma.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("gamma must be a square matrix"));
    }
    if file.m.iter().any(|&l| l == 0) {
        return Err(Error::invalid("cluster labels in files are 1-based"));
    }
    let theta = ModelParams {
        edge_ind: DMatrix::from_fn(d, d, |i, j| file.gamma[i][j]),
        coeffs: rows_to_mat(&file.coeffs, "A")?,
        block_probs: rows_to_mat(&file.block_probs, "B")?,
        labels: file.m.iter().map(|&l| l - 1).collect(),
        obs_gain: file.c,
        noise_var: file.tau,
        init_mean: file.mu,
        weights: file.p,
    };
    theta.validate()?;
    Ok(theta)
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryFile {
    clust_prob: Vec<Vec<f64>>,
    edge_prob: Vec<Vec<f64>>,
    num_samples: usize,
}

pub fn write_summary(path: impl AsRef<Path>, s: &PosteriorSummary) -> Result<()> {
    write_json(
        path,
        &SummaryFile {
            clust_prob: mat_to_rows(&s.clust_prob),
            edge_prob: mat_to_rows(&s.edge_prob),
            num_samples: s.num_samples,
        },
    )
}

pub fn read_summary(path: impl AsRef<Path>) -> Result<PosteriorSummary> {
    let file: SummaryFile = read_json(path)?;
    let clust_prob = rows_to_mat(&file.clust_prob, "clust_prob")?;
    let edge_prob = rows_to_mat(&file.edge_prob, "edge_prob")?;
    if clust_prob.nrows() != clust_prob.ncols()
        || edge_prob.nrows() != edge_prob.ncols()
        || clust_prob.nrows() != edge_prob.nrows()
    {
        return Err(Error::invalid("summary matrices must be square and same size"));
    }
    Ok(PosteriorSummary {
        clust_prob,
        edge_prob,
        num_samples: file.num_samples,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    /// 1-based node indices, one list per cluster.
    clusters: Vec<Vec<usize>>,
    /// 1-based (from, to) pairs.
    edges: Vec<(usize, usize)>,
    threshold_m: f64,
    threshold_gamma: f64,
}

pub fn write_network(path: impl AsRef<Path>, n: &NetworkEstimate) -> Result<()> {
    write_json(
        path,
        &NetworkFile {
            clusters: n
                .clusters
                .iter()
                .map(|c| c.iter().map(|&v| v + 1).collect())
                .collect(),
            edges: n.edges.iter().map(|&(f, t)| (f + 1, t + 1)).collect(),
            threshold_m: n.clust_threshold,
            threshold_gamma: n.edge_threshold,
        },
    )
}

pub fn read_network(path: impl AsRef<Path>) -> Result<NetworkEstimate> {
    let file: NetworkFile = read_json(path)?;
    if file
        .clusters
        .iter()
        .flatten()
        .chain(file.edges.iter().flat_map(|(f, t)| [f, t]))
        .any(|&v| v == 0)
    {
        return Err(Error::invalid("node indices in files are 1-based"));
    }
    Ok(NetworkEstimate {
        clusters: file
            .clusters
            .iter()
            .map(|c| c.iter().map(|&v| v - 1).collect())
            .collect(),
        edges: file.edges.iter().map(|&(f, t)| (f - 1, t - 1)).collect(),
        clust_threshold: file.threshold_m,
        edge_threshold: file.threshold_gamma,
    })
}

/// Edge list CSV: `from,to,probability`, 1-based node indices.
pub fn write_edge_csv(path: impl AsRef<Path>, rows: &[(usize, usize, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["from", "to", "probability"])?;
    for &(f, t, p) in rows {
        w.write_record([(f + 1).to_string(), (t + 1).to_string(), format!("{p}")])?;
    }
    w.flush().map_err(Error::Io)
}

/// Cluster membership CSV: `node,cluster`, both 1-based.
pub fn write_cluster_csv(path: impl AsRef<Path>, clusters: &[Vec<usize>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node", "cluster"])?;
    for (k, members) in clusters.iter().enumerate() {
        for &node in members {
            w.write_record([(node + 1).to_string(), (k + 1).to_string()])?;
        }
    }
    w.flush().map_err(Error::Io)
}

/// Per-period connectivity table: `period,channel,adc`.
pub fn write_adc_csv(
    path: impl AsRef<Path>,
    labels: &[String],
    periods: &[(String, Vec<f64>)],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["period", "channel", "adc"])?;
    for (period, adc) in periods {
        if adc.len() != labels.len() {
            return Err(Error::invalid("adc length does not match channel count"));
        }
        for (label, v) in labels.iter().zip(adc) {
            w.write_record([period.as_str(), label.as_str(), &format!("{v}")])?;
        }
    }
    w.flush().map_err(Error::Io)
}

/// A batch of summaries (one per null segment) as a JSON array.
pub fn write_summaries(path: impl AsRef<Path>, summaries: &[PosteriorSummary]) -> Result<()> {
    let files: Vec<SummaryFile> = summaries
        .iter()
        .map(|s| SummaryFile {
            clust_prob: mat_to_rows(&s.clust_prob),
            edge_prob: mat_to_rows(&s.edge_prob),
            num_samples: s.num_samples,
        })
        .collect();
    write_json(path, &files)
}

pub fn read_summaries(path: impl AsRef<Path>) -> Result<Vec<PosteriorSummary>> {
    let files: Vec<SummaryFile> = read_json(path)?;
    files
        .into_iter()
        .map(|file| {
            Ok(PosteriorSummary {
                clust_prob: rows_to_mat(&file.clust_prob, "clust_prob")?,
                edge_prob: rows_to_mat(&file.edge_prob, "edge_prob")?,
                num_samples: file.num_samples,
            })
        })
        .collect()
}

/// Plain numeric matrix from CSV, skipping a non-numeric first row.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let y = read_time_series(path)?;
    Ok(y.values)
}

/// ROC points as CSV with `fpr,tpr` columns.
pub fn write_roc_csv(path: impl AsRef<Path>, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["fpr", "tpr"])?;
    for &(fpr, tpr) in points {
        w.write_record([format!("{fpr}"), format!("{tpr}")])?;
    }
    w.flush().map_err(Error::Io)
}

#[derive(Debug, Serialize, Deserialize)]
struct ChainOutputFile {
    gamma_sum: Vec<Vec<u32>>,
    same_cluster_sum: Vec<Vec<u32>>,
    n_retained: usize,
}

/// Chain accumulators as JSON; traces go to CSV separately.
pub fn write_chain_output(path: impl AsRef<Path>, out: &ChainOutput) -> Result<()> {
    let to_rows = |m: &DMatrix<u32>| -> Vec<Vec<u32>> {
        (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
    };
    write_json(
        path,
        &ChainOutputFile {
            gamma_sum: to_rows(&out.gamma_sum),
            same_cluster_sum: to_rows(&out.same_cluster_sum),
            n_retained: out.n_retained,
        },
    )
}

pub fn read_chain_output(path: impl AsRef<Path>) -> Result<ChainOutput> {
    let file: ChainOutputFile = read_json(path)?;
    let d = file.gamma_sum.len();
    let ok = |rows: &Vec<Vec<u32>>| d > 0 && rows.len() == d && rows.iter().all(|r| r.len() == d);
    if !ok(&file.gamma_sum) || !ok(&file.same_cluster_sum) {
        return Err(Error::invalid("accumulator matrices must be square and same size"));
    }
    Ok(ChainOutput {
        gamma_sum: DMatrix::from_fn(d, d, |i, j| file.gamma_sum[i][j]),
        same_cluster_sum: DMatrix::from_fn(d, d, |i, j| file.same_cluster_sum[i][j]),
        n_retained: file.n_retained,
        traces: Vec::new(),
    })
}

/// Scalar traces as CSV, one column per trace, one row per retained draw.
pub fn write_traces_csv(path: impl AsRef<Path>, traces: &[ScalarTrace]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(traces.iter().map(|t| t.name.as_str()))?;
    let len = traces.iter().map(|t| t.values.len()).max().unwrap_or(0);
    for row in 0..len {
        w.write_record(traces.iter().map(|t| {
            t.values
                .get(row)
                .map(|v| format!("{v:.17e}"))
                .unwrap_or_default()
        }))?;
    }
    w.flush().map_err(Error::Io)
}

pub fn read_traces_csv(path: impl AsRef<Path>) -> Result<Vec<ScalarTrace>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let names: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();
    let mut traces: Vec<ScalarTrace> = names
        .into_iter()
        .map(|name| ScalarTrace { name, values: Vec::new() })
        .collect();
    for record in r.records() {
        let record = record?;
        for (k, field) in record.iter().enumerate() {
            if field.is_empty() {
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::invalid(format!("non-numeric trace value {field:?}")))?;
            if let Some(t) = traces.get_mut(k) {
                t.values.push(v);
            }
        }
    }
    Ok(traces)
}

/// Selected onset candidates as CSV: `node,label`, nodes 1-based.
pub fn write_candidates_csv(
    path: impl AsRef<Path>,
    labels: &[String],
    candidates: &[usize],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node", "label"])?;
    for &j in candidates {
        let label = labels
            .get(j)
            .ok_or_else(|| Error::invalid("candidate index out of range"))?;
        w.write_record([(j + 1).to_string(), label.clone()])?;
    }
    w.flush().map_err(Error::Io)
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// Record of one CLI run: enough to re-run it bit-identically.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<InputHash>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.into(),
            config,
            seed,
            inputs: Vec::new(),
        }
    }

    /// Hash and record an input file.
    pub fn add_input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.inputs.push(InputHash {
            path: path.as_ref().display().to_string(),
            sha256: sha256_file(path.as_ref())?,
        });
        Ok(())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }
}
