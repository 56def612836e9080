mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn run(cli: Cli) -> Result<(), commands::Failure> {
    match cli.command {
        Command::Rule { n, output } => commands::rule(n, &output),
        Command::Certify { n, output } => commands::certify_orders(&n.0, &output),
        Command::Solve { n, solver, output } => commands::solve(n, &solver, &output),
        Command::Sweep {
            n,
            solver,
            no_warm_start,
            output,
        } => commands::sweep(&n.0, &solver, !no_warm_start, &output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("gausscol: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
