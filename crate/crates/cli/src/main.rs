//! `reserve`: solve, check, generate, verify and benchmark reserve-system
//! instances.

mod bench_cmd;
mod check;
mod gen_cmd;
mod io;
mod solve;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "reserve", version, about = "Reserve-system allocation solver and axiom checker")]
struct Cli {
    /// Output format for reports written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an allocation rule on an instance.
    Solve(solve::SolveArgs),
    /// Check a matching against axioms.
    Check(check::CheckArgs),
    /// Generate a random instance.
    Gen(gen_cmd::GenArgs),
    /// Run incentive and consistency property tests for a rule.
    Verify(verify::VerifyArgs),
    /// Time rules on generated instances.
    Bench(bench_cmd::BenchArgs),
}

/// Result of a command that ran to completion.
pub enum Status {
    Success,
    /// A check or property failed; reported already.
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Solve(args) => solve::run(args, cli.format),
        Command::Check(args) => check::run(args, cli.format),
        Command::Gen(args) => gen_cmd::run(args),
        Command::Verify(args) => verify::run(args, cli.format),
        Command::Bench(args) => bench_cmd::run(args, cli.format),
    };
    match result {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
