use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod failure;
mod solve;
mod tools;

use args::{Cli, Command};
use failure::Outcome;

/// Writes `text` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n"))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { instance } => tools::validate(instance),
        Command::Solve(a) => solve::run(a),
        Command::Certify {
            instance,
            tol,
            output,
        } => tools::certify(instance, tol, output.as_deref()),
        Command::Sweep(a) => tools::sweep(a),
        Command::Generate(a) => tools::generate_cmd(a),
        Command::Bench(a) => tools::bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("scvar: {f}");
            f.code()
        }
    }
}
