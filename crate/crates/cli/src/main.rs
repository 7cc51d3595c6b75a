mod args;
mod commands;
mod error;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Rendered;
use error::CliError;

fn emit(rendered: Rendered, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, rendered.0)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(rendered.0.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Usage(format!("cannot write output: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => emit(commands::simulate(&a)?, a.output.out.as_deref()),
        Command::Chsh(a) => emit(commands::chsh_cmd(&a)?, a.output.out.as_deref()),
        Command::Scan(a) => emit(commands::scan(&a)?, a.output.out.as_deref()),
        Command::Dsep(a) => emit(commands::dsep(&a)?, a.output.out.as_deref()),
        Command::Relaxation(a) => emit(commands::relaxation(&a)?, a.output.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("{msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
