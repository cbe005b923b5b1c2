//! Experiment driver: expands a config into (algorithm, seed) cells, runs
//! them, and writes the metrics CSV and run manifest.

mod config;
mod output;
mod sim;

pub use config::{BoundConfig, ExperimentConfig, Grid, Scenario, Seeds, SweepParam};
pub use output::{write_bounds, write_metrics, Manifest, CSV_HEADER};
pub use sim::{simulate, Replication, RunSpec, Simulation, StepOutcome};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::env::{build_world, World};
use crate::error::Result;
use crate::policies::Algorithm;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GROUPLEARN_OUT";

/// A single (algorithm, seed) replication to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub algorithm: Algorithm,
    pub seed: u64,
}

/// Cells in output order: algorithms as configured, then seeds as configured.
pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let seeds = config.seeds.expand();
    config
        .algorithms
        .iter()
        .flat_map(|&algorithm| seeds.iter().map(move |&seed| Cell { algorithm, seed }))
        .collect()
}

/// Worlds keyed by replication seed. With `world_seed` set, every seed maps
/// to the same world.
pub fn worlds(config: &ExperimentConfig) -> Result<BTreeMap<u64, World>> {
    let mut out = BTreeMap::new();
    match config.world_seed {
        Some(ws) => {
            let w = build_world(&config.world, ws)?;
            for s in config.seeds.expand() {
                out.insert(s, w.clone());
            }
        }
        None => {
            for s in config.seeds.expand() {
                out.insert(s, build_world(&config.world, s)?);
            }
        }
    }
    Ok(out)
}

fn run_cell(
    config: &ExperimentConfig,
    worlds: &BTreeMap<u64, World>,
    grid: &[u64],
    cell: Cell,
    keep_log: bool,
) -> Result<Replication> {
    simulate(&RunSpec {
        world: &worlds[&cell.seed],
        algorithm: cell.algorithm,
        disclosure: config.disclosure,
        policy: &config.policy,
        horizon: config.horizon,
        seed: cell.seed,
        grid,
        bound_exponent: config.bound.exponent,
        bound_epsilon: config.bound.epsilon,
        keep_log,
    })
}

/// Runs every cell on the calling thread.
pub fn run_cells_sequential(config: &ExperimentConfig, keep_log: bool) -> Result<Vec<Replication>> {
    config.validate()?;
    let worlds = worlds(config)?;
    let grid = config.grid.steps(config.horizon)?;
    cells(config)
        .into_iter()
        .map(|c| run_cell(config, &worlds, &grid, c, keep_log))
        .collect()
}

/// Runs cells on the rayon pool. Results come back in cell order whatever the
/// completion order.
#[cfg(feature = "parallel")]
pub fn run_cells_parallel(config: &ExperimentConfig, keep_log: bool) -> Result<Vec<Replication>> {
    use rayon::prelude::*;

    config.validate()?;
    let worlds = worlds(config)?;
    let grid = config.grid.steps(config.horizon)?;
    cells(config)
        .into_par_iter()
        .map(|c| run_cell(config, &worlds, &grid, c, keep_log))
        .collect()
}

/// Parallel when the `parallel` feature is enabled, sequential otherwise.
pub fn run_cells(config: &ExperimentConfig, keep_log: bool) -> Result<Vec<Replication>> {
    #[cfg(feature = "parallel")]
    {
        run_cells_parallel(config, keep_log)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_cells_sequential(config, keep_log)
    }
}

/// Files produced by one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub metrics: PathBuf,
    pub manifest: PathBuf,
    pub replications: Vec<Replication>,
}

/// Runs every cell, then writes `metrics.csv`, `manifest.json` and, with
/// `trace`, one event trace per cell under `traces/`. Nothing is written if
/// any replication fails.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, trace: bool) -> Result<RunOutput> {
    let replications = run_cells(config, trace)?;
    std::fs::create_dir_all(out_dir)?;
    let metrics = out_dir.join("metrics.csv");
    let manifest_path = out_dir.join("manifest.json");
    output::persist(&metrics, |w| write_metrics(config, &replications, w))?;
    if trace {
        let dir = out_dir.join("traces");
        std::fs::create_dir_all(&dir)?;
        for rep in &replications {
            if let Some(log) = &rep.log {
                let path = dir.join(format!("{}_seed{}.csv", rep.algorithm.label(), rep.seed));
                output::persist(&path, |w| log.write_trace(w))?;
            }
        }
    }
    let manifest = Manifest::build(config, &replications);
    output::persist(&manifest_path, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(RunOutput {
        dir: out_dir.to_path_buf(),
        metrics,
        manifest: manifest_path,
        replications,
    })
}

/// One run per value with the seeds of `base`, written to
/// `<out_dir>/<param>_<value>/`.
pub fn sweep(
    base: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
    out_dir: &Path,
) -> Result<Vec<RunOutput>> {
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|&v| param.apply(base, v))
        .collect::<Result<_>>()?;
    configs
        .iter()
        .zip(values)
        .map(|(cfg, v)| run_experiment(cfg, &out_dir.join(format!("{}_{v}", param.label())), false))
        .collect()
}
