#![allow(dead_code)]

use std::path::PathBuf;

use grouplearn::harness::{ExperimentConfig, Replication};
use grouplearn::metrics::mean_stderr;
use grouplearn::policies::Algorithm;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_path(&config_path(name)).expect("bundled config parses")
}

/// Per-seed pseudo-regret at step `t`, averaged over users, in seed order.
pub fn per_seed(reps: &[Replication], alg: Algorithm, t: u64) -> Vec<f64> {
    reps.iter()
        .filter(|r| r.algorithm == alg)
        .map(|r| {
            let i = r.traces[0].t.iter().position(|&s| s == t).expect("t on the grid");
            r.traces.iter().map(|tr| tr.pseudo[i]).sum::<f64>() / r.traces.len() as f64
        })
        .collect()
}

/// Per-seed misclassification rate at step `t`.
pub fn err_per_seed(reps: &[Replication], alg: Algorithm, t: u64) -> Vec<f64> {
    reps.iter()
        .filter(|r| r.algorithm == alg)
        .map(|r| {
            let i = r.traces[0].t.iter().position(|&s| s == t).expect("t on the grid");
            r.err_rate.as_ref().expect("err rate recorded")[i]
        })
        .collect()
}

/// Mean and standard error of `a - b` over paired seeds.
pub fn paired(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_stderr(&d)
}

pub fn tmp_dir(tag: &str) -> tempfile::TempDir {
    tempfile::Builder::new().prefix(tag).tempdir().expect("temp dir")
}
