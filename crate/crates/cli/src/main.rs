//! Command-line front end: runs named experiments from JSON config files
//! and writes CSV/JSON for external plotting.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod output;

use commands::{OptimizeArgs, RamseyArgs, ScheduleArgs};

#[derive(Parser, Debug)]
#[command(name = "qperceptron", version, about = "Adiabatic perceptron-gate experiments")]
struct Cli {
    /// Root seed for every random draw (shot noise, trajectories, optimizer starts).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file. Without it the main result goes to stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// JSON config; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Activation sweep over the control coupling; CSV plus a JSON sidecar.
    Sweep {
        /// Skip propagation and emit only the analytic curve.
        #[arg(long)]
        analytic_only: bool,
    },
    /// Two-gate XNOR truth table with control populations.
    Xnor {
        /// Ignore the configured noise model.
        #[arg(long)]
        noiseless: bool,
    },
    /// Synthesize layer couplings for a truth table.
    Optimize(OptimizeArgs),
    /// Discretized ramp as a pulse table.
    Schedule(ScheduleArgs),
    /// Ramsey measurement of a control-target coupling.
    Ramsey(RamseyArgs),
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid configuration (exit 2).
    Config(String),
    /// Numerical or I/O failure while running (exit 3).
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl From<qperceptron::Error> for Failure {
    fn from(e: qperceptron::Error) -> Self {
        use qperceptron::Error as E;
        match e {
            E::FitFailed(_) | E::Numerical(_) => Self::Runtime(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

fn read_config(path: Option<&Path>) -> CliResult<Option<String>> {
    path.map(|p| {
        std::fs::read_to_string(p)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", p.display())))
    })
    .transpose()
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    }
    let config = read_config(cli.config.as_deref())?;
    let out = cli.output.as_deref();
    let seed = cli.seed;
    match cli.command {
        Command::Sweep { analytic_only } => commands::sweep(config.as_deref(), out, seed, analytic_only),
        Command::Xnor { noiseless } => commands::xnor(config.as_deref(), out, seed, noiseless),
        Command::Optimize(args) => {
            let table = match &args.table {
                Some(p) => read_config(Some(p))?,
                None => config,
            };
            commands::optimize(table.as_deref(), out, seed, &args)
        }
        Command::Schedule(args) => commands::schedule(config.as_deref(), out, &args),
        Command::Ramsey(args) => commands::ramsey(config.as_deref(), out, seed, &args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
