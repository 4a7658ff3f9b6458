//! Configuration, scenario drivers and deterministic CSV/JSON output for
//! the `ern-scatter` command.

pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;

use std::path::PathBuf;

use clap::Parser;

pub use config::{parse_config, parse_config_str, RunConfig, Scenario};
pub use error::{CliError, CliResult};
pub use output::{write_csv, write_summary, RunManifest, Summary, Table};
pub use scenarios::run_scenario;

#[derive(Debug, Parser)]
#[command(name = "ern-scatter", version, about = "Characteristic scattering runs on extremal Reissner-Nordstrom")]
pub struct Cli {
    /// Scenario to run.
    #[arg(value_enum)]
    pub scenario: Scenario,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` of the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "ERN_SCATTER_THREADS")]
    pub threads: Option<usize>,
}

pub const DEFAULT_OUTPUT_DIR: &str = "ern-scatter-out";

/// Parses, resolves and runs one invocation.
pub fn execute(cli: &Cli) -> CliResult<RunManifest> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))?;
    }
    let cfg = parse_config(&cli.config)?.resolve(cli.scenario)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    run_scenario(&cfg, &out)
}
