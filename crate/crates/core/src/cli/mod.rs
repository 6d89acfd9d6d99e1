//! Batch front end: `verify`, `solve`, `converge` and `oracle`.
//!
//! Exit codes: 0 when every check passes, 1 on a failed check or solver
//! error, 2 on configuration or usage errors.

mod commands;
pub mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_converge, cmd_oracle, cmd_solve, cmd_verify, oracle_dimension, Outcome};
pub use config::RunConfig;
pub use output::{write_atomic, Outputs};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "evoeq",
    version,
    about = "Spectral Galerkin solver for evolutionary equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coercivity, stability and catalog checks
    Verify(CommonArgs),
    /// Solve and write solution signals with sidecars
    Solve(CommonArgs),
    /// Galerkin convergence sweep
    Converge(CommonArgs),
    /// Random matrix resolvent-convergence oracle
    Oracle(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output.dir`)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides `seed`)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (name, common) = match &cli.command {
        Command::Verify(a) => ("verify", a),
        Command::Solve(a) => ("solve", a),
        Command::Converge(a) => ("converge", a),
        Command::Oracle(a) => ("oracle", a),
    };
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return EXIT_USAGE;
        }
        // a second call in the same process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let cfg = match RunConfig::load(&common.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    let result = match cli.command {
        Command::Verify(_) => cmd_verify(&cfg, seed),
        Command::Solve(_) => cmd_solve(&cfg, seed),
        Command::Converge(_) => cmd_converge(&cfg, seed),
        Command::Oracle(_) => cmd_oracle(&cfg, seed),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {name}: {e}");
            return exit_code(&e);
        }
    };
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = outcome.outputs.commit(&dir) {
        eprintln!("error: writing outputs to {}: {e}", dir.display());
        return EXIT_FAIL;
    }
    println!("{}", outcome.summary);
    for f in &outcome.failures {
        eprintln!("FAIL {f}");
    }
    if outcome.pass {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}
