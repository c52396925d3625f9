//! Experiment driver for `kswave`: reads a `key=value` config, runs one
//! experiment and writes `<out>/<command>.csv` plus an NDJSON run log.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use config::{Command, RunConfig};
use output::{EventLog, Outputs};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{origin}:{line}: {msg}")]
    Config {
        origin: String,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Model(#[from] kswave::Error),
    #[error("{0}")]
    Failed(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// 2 for config and hypothesis refusals, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        use kswave::Error as E;
        match self {
            LabError::Config { .. } | LabError::Usage(_) | LabError::Refused(_) => 2,
            LabError::Model(E::Hypothesis { .. } | E::InvalidParameter { .. } | E::InvalidGrid(_)) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        if self.exit_code() == 2 {
            "refusal"
        } else {
            "failure"
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kslab", version, about = "Keller-Segel traveling wave experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
    /// key=value config file; unset keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for the CSV and the NDJSON log.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum Cmd {
    /// Decay rates, thresholds and hypothesis flags.
    Constants,
    /// Kernel accuracy checks.
    KernelTest,
    /// Traveling wave by monotone iteration.
    Wave,
    /// Lab-frame spreading speed from a compact datum.
    Speed,
    /// Convergence to the positive constant state.
    Stability,
    /// Thresholds (and optionally speeds) over a (tau, chi, c) grid.
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Constants => Command::Constants,
            Cmd::KernelTest => Command::KernelTest,
            Cmd::Wave => Command::Wave,
            Cmd::Speed => Command::Speed,
            Cmd::Stability => Command::Stability,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

pub fn resolve(cli: &Cli) -> Result<RunConfig, LabError> {
    let command = Command::from(cli.command);
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(command, path)?,
        None => RunConfig::defaults(command),
    };
    if let Some(seed) = cli.seed {
        cfg.set("run.seed", &seed.to_string())?;
    }
    Ok(cfg)
}

/// Runs the selected experiment. Failures after the log is open are also
/// recorded there as an `error` event.
pub fn run(cli: &Cli) -> Result<(), LabError> {
    let cfg = resolve(cli)?;
    let paths = Outputs::new(&cli.out, &cfg)?;
    let mut log = EventLog::create(&paths.log)?;
    log.start(&cfg)?;
    let outcome = commands::execute(&cfg, &paths, &mut log, cli.threads);
    if let Err(e) = &outcome {
        log.emit(
            "error",
            json!({ "kind": e.kind(), "exit_code": e.exit_code(), "message": e.to_string() }),
        )?;
    }
    outcome
}
