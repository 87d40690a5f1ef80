//! `dlfh` command-line tool.

mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{known_keys, Cli, Command};
use config::{FileConfig, Resolver};
use error::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path, &known_keys())?,
        None => FileConfig::default(),
    };
    let name = match &cli.command {
        Command::Synth(_) => "synth",
        Command::Train(_) => "train",
        Command::FitOos(_) => "fit-oos",
        Command::Encode(_) => "encode",
        Command::Eval(_) => "eval",
        Command::Bench(_) => "bench",
    };
    let mut r = Resolver::new(&file, name);
    let env_threads = match std::env::var("DLFH_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Input(format!("DLFH_THREADS: not a thread count: `{v}`")))?,
        ),
        Err(_) => None,
    };
    let threads = r.optional("threads", cli.threads)?.or(env_threads);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be >= 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;

    pool.install(|| match cli.command {
        Command::Synth(a) => commands::synth(a, &mut r),
        Command::Train(a) => commands::train_cmd(a, &mut r),
        Command::FitOos(a) => commands::fit_oos(a, &mut r),
        Command::Encode(a) => commands::encode(a, &mut r),
        Command::Eval(a) => commands::eval(a, &mut r),
        Command::Bench(a) => commands::bench(a, &mut r),
    })
}
