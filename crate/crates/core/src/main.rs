use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use grouplearn::harness::{self, ExperimentConfig, SweepParam, OUT_DIR_ENV};
use grouplearn::Error;

#[derive(Parser)]
#[command(name = "grouplearn", version, about = "Group online learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) replication of a config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; falls back to the config's `output`, then $GROUPLEARN_OUT, then ./out.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a per-choice event trace for every replication.
        #[arg(long)]
        trace: bool,
    },
    /// Re-run a config once per parameter value with shared seeds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// alpha, omega_cross or L
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. 0.05,0.1,0.15
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the regret bound curves of the config's world as CSV.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
}

fn out_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| config.output.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out, trace } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let dir = out_dir(out, &cfg);
            let res = harness::run_experiment(&cfg, &dir, trace)?;
            println!("{}", res.metrics.display());
        }
        Command::Sweep { config, param, values, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let param = SweepParam::parse(&param)?;
            if values.is_empty() {
                return Err(Error::config("values", "at least one value is required"));
            }
            let dir = out_dir(out, &cfg);
            for res in harness::sweep(&cfg, param, &values, &dir)? {
                println!("{}", res.metrics.display());
            }
        }
        Command::Bounds { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            harness::write_bounds(&cfg, &mut lock)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let field = match &e {
                Error::Config { field, .. } => Some(field.clone()),
                _ => None,
            };
            eprintln!("{}", json!({ "error": e.to_string(), "field": field }));
            ExitCode::from(2)
        }
    }
}
