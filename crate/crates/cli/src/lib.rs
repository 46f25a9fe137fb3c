//! Command-line driver: `kaw check|run|sweep|verify`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::Context;
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "kaw", version, about = "Kawahara boundary-memory laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the gain, length and negativity certificates.
    Check(Common),
    /// Simulate and write series.csv, report.json and certificate.json.
    Run(Common),
    /// Repeat `run` for each value of one numeric config field.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted path (`gains.alpha`) or JSON pointer (`/gains/alpha`).
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
    },
    /// Run every verification suite and write a consolidated report.
    Verify(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; `KAW_WORKERS` overrides.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// `KAW_WORKERS` wins over the flag; zero means "all cores".
pub fn resolve_workers(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>, CliError> {
    let k = match env {
        Some(s) => Some(s.trim().parse::<usize>().map_err(|_| {
            CliError::Config(format!("KAW_WORKERS: `{s}` is not a non-negative integer"))
        })?),
        None => flag,
    };
    Ok(k.filter(|&k| k > 0))
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    let env = std::env::var("KAW_WORKERS").ok();
    let (common, sweep) = match &cli.command {
        Command::Check(c) | Command::Run(c) | Command::Verify(c) => (c, None),
        Command::Sweep {
            common,
            axis,
            values,
        } => (common, Some((axis, values))),
    };
    let ctx = Context {
        out: common.out.clone(),
        workers: resolve_workers(common.workers, env.as_deref())?,
    };
    let (cfg, text) = commands::load_config(&common.config)?;
    match (&cli.command, sweep) {
        (Command::Check(_), _) => commands::cmd_check(&cfg, &ctx),
        (Command::Run(_), _) => commands::cmd_run(&cfg, &ctx),
        (Command::Verify(_), _) => commands::cmd_verify(&cfg, &ctx),
        (Command::Sweep { .. }, Some((axis, values))) => {
            commands::cmd_sweep(&text, axis, values, &ctx)
        }
        (Command::Sweep { .. }, None) => unreachable!(),
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("kaw: {e}");
            e.exit_code()
        }
    }
}
