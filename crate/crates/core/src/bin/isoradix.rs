use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use isoradix::cli::{self, Cli};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let parsed = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli::run(&parsed, &cli::canonical_invocation(&args)) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            if let Some(h) = cli::hint(&err) {
                eprintln!("hint: {h}");
            }
            ExitCode::from(if err.is_internal() { 2 } else { 1 })
        }
    }
}
