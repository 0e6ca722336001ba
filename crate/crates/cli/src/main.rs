mod cli;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use fastpls::{Error, ErrorCategory};
use serde_json::json;

use cli::{Cli, Command};

fn exit_code(category: ErrorCategory) -> u8 {
    match category {
        ErrorCategory::Usage => 2,
        ErrorCategory::Data => 3,
        ErrorCategory::Numeric => 4,
    }
}

fn report_error(kind: &str, category: &str, message: &str) {
    let body = json!({ "error": { "kind": kind, "category": category, "message": message } });
    eprintln!("{body}");
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("cannot configure thread pool: {e}")))?;
    }
    let threads = rayon::current_num_threads();
    match &cli.command {
        Command::Fit(a) => commands::fit(a, threads),
        Command::Predict(a) => commands::predict(a, threads),
        Command::Cv(a) => commands::cv(a, threads),
        Command::Cvmatrix(a) => commands::cvmatrix(a, threads),
        Command::Bench(a) => commands::bench(a, threads),
        Command::Stats(a) => commands::stats(a, threads),
        Command::Calibrate(a) => commands::calibrate(a, threads),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report_error("usage", "usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            let name = format!("{category:?}").to_lowercase();
            report_error(e.kind(), &name, &e.to_string());
            ExitCode::from(exit_code(category))
        }
    }
}
