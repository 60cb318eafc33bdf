use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod output;
mod run;

use config::{ExperimentConfig, Overrides};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Runtime(m) => write!(f, "run failed: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "exoforest", version, about = "Population-CART forest experiments with CSV output")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment file; defaults reproduce the figure setup of config I.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the CSV here instead of stdout (overrides output.csv).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed (overrides run.master_seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (overrides run.workers).
    #[arg(long, global = true, env = "EXOFOREST_WORKERS")]
    workers: Option<usize>,

    /// Monte-Carlo replications per grid cell (overrides run.reps).
    #[arg(long, global = true)]
    reps: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Performance measures (a)-(f) over the gamma x depth grid.
    Measures,
    /// Leading MSE terms for one tree and for the forest.
    Theory,
    /// Simulated GMSE of fitted trees and forests against the leading terms.
    Empirical,
    /// Exact inverse moments against their expansions.
    Lemmas,
    /// Convergence-rate bound next to the single-tree MSE.
    Bound,
    /// Run the built-in invariant suites.
    Selftest,
}

fn open_out(cfg: &ExperimentConfig) -> Result<Box<dyn Write>, CliError> {
    match &cfg.csv {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn execute(cmd: Command, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let rows = match cmd {
        Command::Measures => run::measures(cfg)?,
        Command::Theory => run::theory(cfg)?,
        Command::Empirical => run::empirical(cfg)?,
        Command::Bound => run::bound(cfg)?,
        Command::Lemmas => {
            let table = run::lemmas(cfg)?;
            return output::write_table(open_out(cfg)?, &run::LEMMA_HEADER, &table);
        }
        Command::Selftest => unreachable!("handled before configuration"),
    };
    output::write_grid(open_out(cfg)?, &rows, cfg.precision)
}

fn selftest() -> ExitCode {
    let results = run::selftest();
    let mut failed = 0;
    for r in &results {
        println!("{} {}: {}", if r.passed { "ok  " } else { "FAIL" }, r.name, r.detail);
        failed += usize::from(!r.passed);
    }
    println!("{} suites, {failed} failed", results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ov = Overrides { seed: cli.seed, reps: cli.reps, workers: cli.workers, out: cli.out.clone() };
    let cfg = match config::load(cli.config.as_deref(), &ov) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("exoforest: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cfg.workers {
        pool = pool.num_threads(k);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("exoforest: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    pool.install(|| {
        if let Command::Selftest = cli.command {
            return selftest();
        }
        match execute(cli.command, &cfg) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("exoforest: {e}");
                ExitCode::from(e.exit_code())
            }
        }
    })
}
