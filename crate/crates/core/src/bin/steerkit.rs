use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use steerkit::cli::{run, Cli, ErrorReport};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            let mut out = std::io::stdout().lock();
            for p in paths {
                // a closed stdout is not a failure of the run
                let _ = writeln!(out, "wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = ErrorReport::from(&e);
            eprintln!("{}", serde_json::to_string(&report).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(report.exit_code as u8)
        }
    }
}
