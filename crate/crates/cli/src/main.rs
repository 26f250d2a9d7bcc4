use std::process::ExitCode;

use clap::Parser;
use qlti::{Error, ErrorClass};

mod cli;
mod commands;

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Schema => 2,
        ErrorClass::Numeric => 3,
        ErrorClass::Guard => 4,
    }
}

fn report(e: &Error) {
    match e {
        Error::Frequencies(all) => {
            eprintln!("error: {} frequencies failed", all.len());
            for f in all {
                eprintln!("  {f}");
            }
        }
        other => eprintln!("error: {other}"),
    }
}

fn init_threads() {
    let Ok(v) = std::env::var("QLTI_THREADS") else { return };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring QLTI_THREADS={v:?}: expected a positive integer"),
    }
}

fn main() -> ExitCode {
    let args = cli::Cli::parse();
    let level = match args.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_env("QLTI_LOG").init();
    init_threads();

    match commands::run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(exit_code(e.class()))
        }
    }
}
