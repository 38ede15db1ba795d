mod commands;
mod config;
mod render;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::CliError;
use crate::config::{Cli, RunConfig};

fn execute(cli: &Cli) -> Result<Vec<commands::Failure>, CliError> {
    let cfg = RunConfig::from_common(&cli.common)?;
    let outcome = commands::run(&cli.command, &cfg)?;
    let bytes = render::render(&outcome.report, cfg.format)?;
    render::write_out(&bytes, cli.common.out.as_deref())?;
    Ok(outcome.failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                eprintln!("check failed: {} (residual {:e})", f.id, f.residual);
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
