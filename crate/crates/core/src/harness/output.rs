use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::sim::Replication;
use crate::env::build_world;
use crate::error::Result;
use crate::metrics::{aggregate, bound_curve, fit_offset, fmt_f64, mean_stderr, RegretTrace};
use crate::policies::Algorithm;

pub const CSV_HEADER: [&str; 10] = [
    "run_id",
    "seed",
    "algorithm",
    "scenario",
    "user",
    "t",
    "pseudo_regret",
    "realized_regret",
    "err_rate",
    "bound_value",
];

/// Writes through a temporary file in the target directory and renames it
/// into place only when `write` succeeds.
pub(crate) fn persist<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        write(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_metrics<W: Write + ?Sized>(
    config: &ExperimentConfig,
    replications: &[Replication],
    out: &mut W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let run_id = config.run_id();
    let scenario = config.scenario.label();
    for rep in replications {
        for (user, trace) in rep.traces.iter().enumerate() {
            for (i, &t) in trace.t.iter().enumerate() {
                let err = rep
                    .err_rate
                    .as_ref()
                    .map(|e| fmt_f64(e[i]))
                    .unwrap_or_default();
                w.write_record([
                    run_id.as_str(),
                    &rep.seed.to_string(),
                    rep.algorithm.label(),
                    scenario,
                    &user.to_string(),
                    &t.to_string(),
                    &fmt_f64(trace.pseudo[i]),
                    &fmt_f64(trace.realized[i]),
                    &err,
                    &fmt_f64(rep.bounds[user][i]),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Bound curves of every configured algorithm and user for both gap
/// exponents, on the config's grid. The world comes from `world_seed` or the
/// first replication seed.
pub fn write_bounds<W: Write + ?Sized>(config: &ExperimentConfig, out: &mut W) -> Result<()> {
    config.validate()?;
    let seed = config.world_seed.unwrap_or(config.seeds.expand()[0]);
    let world = build_world(&config.world, seed)?;
    let grid = config.grid.steps(config.horizon)?;
    let users = world.model.users();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "user", "exponent", "t", "bound_value"])?;
    for &alg in &config.algorithms {
        for user in 0..users {
            for exponent in [1u8, 2] {
                let curve = bound_curve(&world.profile, user, users, alg, exponent, config.bound.epsilon, &grid);
                for (&t, v) in grid.iter().zip(curve) {
                    w.write_record([
                        alg.label(),
                        &user.to_string(),
                        &exponent.to_string(),
                        &t.to_string(),
                        &fmt_f64(v),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    pub replications: usize,
    pub clipped_rewards: u64,
    /// Ensemble mean and standard error of user-averaged pseudo-regret at the
    /// horizon.
    pub final_pseudo_regret: Option<(f64, f64)>,
    pub final_err_rate: Option<(f64, f64)>,
    /// Least-squares offset of the user-averaged bound against the ensemble
    /// mean (reported only).
    pub fitted_offset: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub run_id: String,
    pub config_hash: String,
    pub code_version: &'static str,
    pub created_unix: u64,
    pub seeds: Vec<u64>,
    pub config: ExperimentConfig,
    pub clipped_rewards: u64,
    pub algorithms: BTreeMap<String, AlgorithmSummary>,
}

impl Manifest {
    pub fn build(config: &ExperimentConfig, replications: &[Replication]) -> Self {
        let mut algorithms = BTreeMap::new();
        for &alg in &config.algorithms {
            let reps: Vec<&Replication> = replications.iter().filter(|r| r.algorithm == alg).collect();
            algorithms.insert(alg.label().to_string(), summarize(alg, &reps));
        }
        Manifest {
            run_id: config.run_id(),
            config_hash: config.hash(),
            code_version: env!("CARGO_PKG_VERSION"),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            seeds: config.seeds.expand(),
            config: config.clone(),
            clipped_rewards: replications.iter().map(|r| r.clipped).sum(),
            algorithms,
        }
    }
}

fn user_average(rep: &Replication) -> (RegretTrace, Vec<f64>) {
    let users = rep.traces.len() as f64;
    let first = &rep.traces[0];
    let n = first.t.len();
    let avg = |pick: fn(&RegretTrace) -> &Vec<f64>| -> Vec<f64> {
        (0..n)
            .map(|i| rep.traces.iter().map(|tr| pick(tr)[i]).sum::<f64>() / users)
            .collect()
    };
    let bound = (0..n)
        .map(|i| rep.bounds.iter().map(|b| b[i]).sum::<f64>() / users)
        .collect();
    (
        RegretTrace {
            t: first.t.clone(),
            pseudo: avg(|tr| &tr.pseudo),
            realized: avg(|tr| &tr.realized),
        },
        bound,
    )
}

fn summarize(alg: Algorithm, reps: &[&Replication]) -> AlgorithmSummary {
    let clipped_rewards = reps.iter().map(|r| r.clipped).sum();
    if reps.is_empty() || reps[0].traces.is_empty() || reps[0].traces[0].t.is_empty() {
        return AlgorithmSummary {
            replications: reps.len(),
            clipped_rewards,
            final_pseudo_regret: None,
            final_err_rate: None,
            fitted_offset: None,
        };
    }
    let (traces, bounds): (Vec<RegretTrace>, Vec<Vec<f64>>) = reps.iter().map(|r| user_average(r)).unzip();
    let agg = aggregate(&traces).expect("replications share one grid");
    let last = agg.t.len() - 1;
    let mean_bound: Vec<f64> = (0..agg.t.len())
        .map(|i| bounds.iter().map(|b| b[i]).sum::<f64>() / bounds.len() as f64)
        .collect();
    let final_err_rate = reps[0].err_rate.as_ref().map(|_| {
        let vals: Vec<f64> = reps.iter().filter_map(|r| r.err_rate.as_ref().map(|e| e[last])).collect();
        mean_stderr(&vals)
    });
    AlgorithmSummary {
        replications: reps.len(),
        clipped_rewards,
        final_pseudo_regret: Some((agg.pseudo.mean[last], agg.pseudo.stderr[last])),
        final_err_rate,
        fitted_offset: (alg != Algorithm::Oracle).then(|| fit_offset(&agg.pseudo.mean, &mean_bound)),
    }
}
