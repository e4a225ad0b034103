use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use zeno_tomo_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(value) = std::env::var("ZENO_TOMO_THREADS") {
        match value.parse::<usize>() {
            Ok(threads) if threads > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
            _ => {
                eprintln!("error: ZENO_TOMO_THREADS must be a positive integer, got {value:?}");
                return ExitCode::FAILURE;
            }
        }
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut diag = io::stderr();
    match run(&cli, &mut out, &mut diag) {
        Ok(0) => match out.flush() {
            Ok(()) => ExitCode::SUCCESS,
            Err(_) => ExitCode::FAILURE,
        },
        Ok(failures) => {
            eprintln!("{failures} computation(s) failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
