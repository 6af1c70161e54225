use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use symtorus_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors share the configuration exit code
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(report) => {
            // a closed stdout is not an error; the reports are on disk
            let _ = writeln!(std::io::stdout(), "{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("symtorus: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
