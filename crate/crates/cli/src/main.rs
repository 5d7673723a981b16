//! `tomo` — on/off-detector tomography pipeline.
//!
//! Subcommands: `transfer`, `simulate`, `reconstruct`, `wigner`, `fisher`.
//! Each reads a JSON config (`--config`), optionally overridden by `--seed`
//! and `--threshold`, and writes plot-ready JSON/CSV with the config hash and
//! library version embedded. Exit codes: 0 success, 2 config error,
//! 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(tomo_core::Error),
    Output(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Output(msg) => write!(f, "output error: {msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Output(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "tomo", version, about = "Biased-tomography pipeline for displaced on/off detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; file names from the config are resolved inside it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the subspace retention threshold.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Transfer-function spectrum report for a measurement plan.
    Transfer(CommonArgs),
    /// Draw no-count records for a plan against a true state.
    Simulate(CommonArgs),
    /// Maximum-likelihood state reconstruction (+ Fisher error bars).
    Reconstruct(CommonArgs),
    /// Pointwise Wigner scan and density-matrix back-transform.
    Wigner(CommonArgs),
    /// Fisher variance table for a plan at a given state.
    Fisher(CommonArgs),
}

/// Effective run context: parsed config value (overrides applied), its hash,
/// and path handling.
pub struct RunContext {
    pub value: serde_json::Value,
    pub config_sha256: String,
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl RunContext {
    fn load(args: &CommonArgs) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(&args.config).map_err(|e| {
            CliError::Config(format!("cannot read {}: {e}", args.config.display()))
        })?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
        if let Some(seed) = args.seed {
            value["seed"] = serde_json::json!(seed);
        }
        if let Some(threshold) = args.threshold {
            value["threshold"] = serde_json::json!(threshold);
        }
        let canonical = serde_json::to_string(&value)
            .map_err(|e| CliError::Config(format!("cannot canonicalize config: {e}")))?;
        let config_sha256 = hex_digest(canonical.as_bytes());
        let base_dir = args
            .config
            .parent()
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."));
        let out_dir = match &args.out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| {
                    CliError::Output(format!("cannot create {}: {e}", dir.display()))
                })?;
                dir.clone()
            }
            None => base_dir.clone(),
        };
        Ok(Self {
            value,
            config_sha256,
            base_dir,
            out_dir,
        })
    }

    pub fn parse<T: serde::de::DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.value.clone())
            .map_err(|e| CliError::Config(format!("config schema: {e}")))
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn main() -> ExitCode {
    let cli = Cli::parse();
    type Runner = fn(&RunContext) -> Result<(), CliError>;
    let (args, run): (&CommonArgs, Runner) = match &cli.command {
        Command::Transfer(a) => (a, commands::cmd_transfer),
        Command::Simulate(a) => (a, commands::cmd_simulate),
        Command::Reconstruct(a) => (a, commands::cmd_reconstruct),
        Command::Wigner(a) => (a, commands::cmd_wigner),
        Command::Fisher(a) => (a, commands::cmd_fisher),
    };
    let result = RunContext::load(args).and_then(|ctx| run(&ctx));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tomo: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
