use std::process::ExitCode;

use clap::Parser;
use fqft_lab::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &outcome.output) {
                        eprintln!("fqft-lab: {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{}", outcome.output),
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("fqft-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
