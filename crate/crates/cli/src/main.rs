use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use microset::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            let mut out = std::io::stdout().lock();
            let shown = if cli.report.is_some() {
                writeln!(
                    out,
                    "{}: {}",
                    report.command,
                    if report.passed { "passed" } else { "FAILED" }
                )
            } else {
                serde_json::to_string_pretty(&report)
                    .map_err(std::io::Error::from)
                    .and_then(|s| writeln!(out, "{s}"))
            };
            if let Err(e) = shown {
                eprintln!("error: writing the report: {e}");
                return ExitCode::from(2);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                for f in &report.failures {
                    eprintln!("failed: {f}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
