//! `bohmctx`: run a measurement scenario and write its outputs.

mod args;
mod output;
mod svg;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use bohmctx_core::scenarios::born_check::run_born_check;
use bohmctx_core::scenarios::run_scenario;
use bohmctx_core::Error;

use args::{Cli, Command};
use output::{OutputError, Writer};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const THREADS_VAR: &str = "BOHMCTX_THREADS";

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        Failure::Numerical(e.to_string())
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_VAR) {
        let n: usize = raw
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
        if n == 0 {
            return Err(Failure::Config(format!("{THREADS_VAR} must be at least 1")));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Failure::Config(format!("cannot start worker threads: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let start = Instant::now();
    let config = cli.command.config()?;
    let pool = thread_pool()?;
    let writer = Writer::new(cli.command.common().out.clone())?;
    let common = cli.command.common();
    match cli.command {
        Command::BornCheck(_) => {
            let report = pool.install(|| run_born_check(&config))?;
            for e in &report.entries {
                eprintln!(
                    "{:<14} n={:<6} ks={:.4} {}",
                    e.scenario,
                    e.n,
                    e.ks,
                    if e.pass { "ok" } else { "above threshold" }
                );
            }
            let files = writer.born_check(&report)?;
            writer.manifest(&config, files, start.elapsed(), pool.current_num_threads())?;
        }
        _ => {
            let kind = cli.command.kind().expect("scenario subcommand");
            let out = pool.install(|| run_scenario(kind, &config))?;
            let files = writer.scenario(&out, common.format, common.plot)?;
            let primary = out.report.primary();
            eprintln!(
                "{}: {} runs, {} unresolved, quality {:?}; outputs in {}",
                kind,
                primary.n,
                primary.n_unresolved,
                primary.quality,
                writer.dir().display()
            );
            writer.manifest(&config, files, start.elapsed(), pool.current_num_threads())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
