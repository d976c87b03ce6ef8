//! Command-line front end: `estimate`, `select`, `run`, `score` and
//! `correlate`.
//!
//! Exit codes: 0 success, 1 configuration, 2 input/output, 3 model
//! endpoint.

pub mod commands;
pub mod config;

use std::io::Write;

use clap::{Parser, Subcommand};
use reasonenv_eval::EvalError;
use reasonenv_gateway::GatewayError;

pub use config::{ConfigError, Flags, RunConfig};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_ENDPOINT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "reasonenv", version, about = "Discrepancy-aware demonstration selection for in-context extraction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Paraphrase cliques with the model and relate discrepancy to zero-shot score.
    Estimate(Flags),
    /// Select demonstrations per query, optionally sweeping pool sizes.
    Select(Flags),
    /// Evaluate a task end to end.
    Run(Flags),
    /// Re-score stored run records offline.
    Score(Flags),
    /// Pearson correlation and binned means over a stored (d, p) table.
    Correlate(Flags),
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Estimate(f) | Command::Select(f) | Command::Run(f) | Command::Score(f) | Command::Correlate(f) => f,
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = RunConfig::resolve(cli.command.flags())?;
    match &cli.command {
        Command::Estimate(_) => commands::estimate(&cfg, out),
        Command::Select(_) => commands::select(&cfg, out),
        Command::Run(_) => commands::run(&cfg, out),
        Command::Score(_) => commands::score(&cfg, out),
        Command::Correlate(_) => commands::correlate(&cfg, out),
    }
}

fn gateway_code(e: &GatewayError) -> i32 {
    match e {
        GatewayError::Config(_) | GatewayError::Prompt(_) => EXIT_CONFIG,
        GatewayError::Cache(_) => EXIT_IO,
        _ => EXIT_ENDPOINT,
    }
}

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return match e {
                EvalError::Io { .. } | EvalError::Parse { .. } => EXIT_IO,
                EvalError::Gateway(g) => gateway_code(g),
                _ => EXIT_CONFIG,
            };
        }
        if let Some(g) = cause.downcast_ref::<GatewayError>() {
            return gateway_code(g);
        }
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_CONFIG
}
