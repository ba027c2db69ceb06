//! `transport`: identification, estimation and simulation for transporting
//! causal effects between populations.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 negative answer (for
//! example a transport set that is not s-admissible).

mod identify;
mod simulate;
mod toy;
mod transport;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Negative,
}

#[derive(Debug, Parser)]
#[command(name = "transport", version, about = "Transport causal effect estimates from a source to a target population")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Identify(identify::Args),
    Transport(transport::Args),
    Simulate(simulate::Args),
    Toy(toy::Args),
}

fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Identify(args) => identify::run(&args, out),
        Command::Transport(args) => transport::run(&args, out),
        Command::Simulate(args) => simulate::run(&args, out),
        Command::Toy(args) => toy::run(&args, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(2),
        Err(err) => {
            let _ = out.flush();
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// Splits a comma-separated name list; the empty string is the empty list.
pub fn parse_name_list(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}
