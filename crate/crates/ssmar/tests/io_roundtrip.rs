//! Round trips through the on-disk formats, plus the 1-based index
//! convention and hashing used by run manifests.

use nalgebra::DMatrix;
use ssmar::io;
use ssmar::model::ModelParams;
use ssmar::types::{NetworkEstimate, PosteriorSummary, TimeSeriesMatrix};

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn time_series_round_trip_preserves_everything() {
    let dir = tmp();
    let values = DMatrix::from_fn(3, 7, |i, t| (i as f64 + 1.0) * (t as f64 - 2.5) / 3.0);
    let y = TimeSeriesMatrix::new(
        values,
        512.0,
        vec!["LA1".into(), "LA2".into(), "RB1".into()],
    )
    .unwrap();
    let path = dir.path().join("y.csv");
    io::write_time_series(&path, &y).unwrap();
    assert!(dir.path().join("y.json").is_file());

    let back = io::read_time_series(&path).unwrap();
    assert_eq!(back.values, y.values);
    assert_eq!(back.sample_rate_hz, 512.0);
    assert_eq!(back.channel_labels, y.channel_labels);
}

#[test]
fn headerless_csv_without_sidecar_gets_defaults() {
    let dir = tmp();
    let path = dir.path().join("plain.csv");
    std::fs::write(&path, "1.0,2.0,3.0\n4.0,5.0,6.0\n").unwrap();
    let y = io::read_time_series(&path).unwrap();
    assert_eq!(y.num_channels(), 2);
    assert_eq!(y.num_samples(), 3);
    assert_eq!(y.sample_rate_hz, 1.0);
    assert_eq!(y.channel_labels, vec!["ch1", "ch2"]);
    assert_eq!(y.values[(1, 2)], 6.0);
}

#[test]
fn malformed_csv_is_rejected() {
    let dir = tmp();
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "1.0,2.0\n3.0\n").unwrap();
    assert!(io::read_time_series(&ragged).is_err());

    let sour = dir.path().join("sour.csv");
    std::fs::write(&sour, "1.0,2.0\nx,3.0\n").unwrap();
    let msg = io::read_time_series(&sour).unwrap_err().to_string();
    assert!(msg.contains("row 2"), "message was: {msg}");
}

fn small_params() -> ModelParams {
    ModelParams {
        edge_ind: DMatrix::from_row_slice(3, 3, &[1, 0, 1, 0, 1, 0, 1, 1, 1]),
        coeffs: DMatrix::from_fn(3, 3, |i, j| 0.1 * (i as f64 - j as f64)),
        block_probs: DMatrix::from_row_slice(2, 2, &[0.95, 0.05, 0.02, 0.91]),
        labels: vec![0, 1, 1],
        obs_gain: vec![1.0, 0.8, 1.2],
        noise_var: vec![0.5, 0.6, 0.7],
        init_mean: vec![0.0, -0.1, 0.2],
        weights: vec![0.4, 0.6],
    }
}

#[test]
fn params_file_uses_one_based_labels_and_fixed_keys() {
    let dir = tmp();
    let path = dir.path().join("params.json");
    let theta = small_params();
    io::write_params(&path, &theta).unwrap();

    let raw: serde_json::Value = io::read_json(&path).unwrap();
    for key in ["gamma", "A", "B", "m", "c", "tau", "mu", "p"] {
        assert!(raw.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(raw["m"][0], 1);
    assert_eq!(raw["m"][2], 2);

    let back = io::read_params(&path).unwrap();
    assert_eq!(back.labels, theta.labels);
    assert_eq!(back.edge_ind, theta.edge_ind);
    assert_eq!(back.coeffs, theta.coeffs);
    assert_eq!(back.weights, theta.weights);
}

#[test]
fn zero_based_labels_on_disk_are_rejected() {
    let dir = tmp();
    let path = dir.path().join("params.json");
    io::write_params(&path, &small_params()).unwrap();
    let mut raw: serde_json::Value = io::read_json(&path).unwrap();
    raw["m"][0] = 0.into();
    io::write_json(&path, &raw).unwrap();
    let msg = io::read_params(&path).unwrap_err().to_string();
    assert!(msg.contains("1-based"));
}

#[test]
fn summary_and_network_round_trip() {
    let dir = tmp();
    let s = PosteriorSummary {
        clust_prob: DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]),
        edge_prob: DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.7, 0.8]),
        num_samples: 5000,
    };
    let spath = dir.path().join("summary.json");
    io::write_summary(&spath, &s).unwrap();
    assert_eq!(io::read_summary(&spath).unwrap(), s);

    let n = NetworkEstimate {
        clusters: vec![vec![0, 2], vec![1]],
        edges: vec![(0, 1), (2, 0)],
        clust_threshold: 0.62,
        edge_threshold: 0.41,
    };
    let npath = dir.path().join("network.json");
    io::write_network(&npath, &n).unwrap();
    let raw: serde_json::Value = io::read_json(&npath).unwrap();
    assert_eq!(raw["threshold_m"], 0.62);
    assert_eq!(raw["threshold_gamma"], 0.41);
    assert_eq!(raw["clusters"][0][0], 1);
    assert_eq!(raw["edges"][0][0], 1);
    assert_eq!(raw["edges"][0][1], 2);
    assert_eq!(io::read_network(&npath).unwrap(), n);
}

#[test]
fn chain_output_and_traces_round_trip() {
    let dir = tmp();
    let out = ssmar::ChainOutput {
        gamma_sum: DMatrix::from_row_slice(2, 2, &[5u32, 0, 3, 5]),
        same_cluster_sum: DMatrix::from_row_slice(2, 2, &[5u32, 2, 2, 5]),
        n_retained: 5,
        traces: vec![
            ssmar::sampler::ScalarTrace {
                name: "c[1]".into(),
                values: vec![0.5, 0.6, 0.55],
            },
            ssmar::sampler::ScalarTrace {
                name: "tau[1]".into(),
                values: vec![1.0, 1.1, 0.9],
            },
        ],
    };
    let jpath = dir.path().join("chain_output.json");
    io::write_chain_output(&jpath, &out).unwrap();
    let back = io::read_chain_output(&jpath).unwrap();
    assert_eq!(back.gamma_sum, out.gamma_sum);
    assert_eq!(back.same_cluster_sum, out.same_cluster_sum);
    assert_eq!(back.n_retained, 5);

    let tpath = dir.path().join("traces.csv");
    io::write_traces_csv(&tpath, &out.traces).unwrap();
    let traces = io::read_traces_csv(&tpath).unwrap();
    assert_eq!(traces.len(), 2);
    assert_eq!(traces[0].name, "c[1]");
    assert_eq!(traces[1].values, out.traces[1].values);
}

#[test]
fn edge_and_cluster_csv_are_one_based() {
    let dir = tmp();
    let epath = dir.path().join("edges.csv");
    io::write_edge_csv(&epath, &[(0, 1, 0.93), (2, 0, 0.81)]).unwrap();
    let text = std::fs::read_to_string(&epath).unwrap();
    assert!(text.starts_with("from,to,probability"));
    assert!(text.contains("1,2,0.93"));
    assert!(text.contains("3,1,0.81"));

    let cpath = dir.path().join("clusters.csv");
    io::write_cluster_csv(&cpath, &[vec![0, 2], vec![1]]).unwrap();
    let text = std::fs::read_to_string(&cpath).unwrap();
    assert!(text.contains("1,1"));
    assert!(text.contains("3,1"));
    assert!(text.contains("2,2"));
}

#[test]
fn manifest_hashes_inputs() {
    let dir = tmp();
    let data = dir.path().join("input.bin");
    std::fs::write(&data, b"abc").unwrap();
    let mut m = io::RunManifest::new("fit", serde_json::json!({"iters": 10}), Some(7));
    m.add_input(&data).unwrap();
    let mpath = dir.path().join("manifest.json");
    m.write(&mpath).unwrap();

    let raw: serde_json::Value = io::read_json(&mpath).unwrap();
    assert_eq!(raw["command"], "fit");
    assert_eq!(raw["seed"], 7);
    assert_eq!(raw["config"]["iters"], 10);
    // Known SHA-256 of the string "abc".
    assert_eq!(
        raw["inputs"][0]["sha256"],
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );

    // Same contents at a different path hash identically.
    let copy = dir.path().join("copy.bin");
    std::fs::write(&copy, b"abc").unwrap();
    assert_eq!(io::sha256_file(&copy).unwrap(), io::sha256_file(&data).unwrap());
}
