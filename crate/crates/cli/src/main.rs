//! `falqon` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 I/O or parse failure,
//! 4 numeric failure. Every failure also prints one line
//! `falqon-error code=<n> kind=<kind> message=<json string>` on standard error.

mod args;
mod commands;
mod evaluate;
mod output;

use std::process::ExitCode;

use clap::Parser;

use falqon_core::{Error, ErrorKind, Result};

use args::{Cli, Command};
use output::{OutDir, Provenance};

fn run(cli: &Cli) -> Result<()> {
    let threads = match cli.threads {
        Some(0) => return Err(Error::InvalidArgument("--threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let prov = match &cli.command {
        Command::GenGraphs(a) => Provenance::new("gen-graphs", a),
        Command::GenDataset(a) => Provenance::new("gen-dataset", a),
        Command::Train(a) => Provenance::new("train", a),
        Command::Predict(a) => Provenance::new("predict", a),
        Command::RunFalqon(a) => Provenance::new("run-falqon", a),
        Command::RunAnneal(a) => Provenance::new("run-anneal", a),
        Command::Replay(a) => Provenance::new("replay", a),
        Command::Evaluate(a) => Provenance::new("evaluate", a),
    }?;
    let out = OutDir::create(&cli.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ResourceLimit(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::GenGraphs(a) => commands::gen_graphs(a, &out, &prov),
        Command::GenDataset(a) => commands::gen_dataset(a, &out, &prov, threads),
        Command::Train(a) => commands::train_cmd(a, &out),
        Command::Predict(a) => commands::predict(a, &out, &prov),
        Command::RunFalqon(a) => commands::run_falqon_cmd(a, &out, &prov),
        Command::RunAnneal(a) => commands::run_anneal(a, &out, &prov),
        Command::Replay(a) => commands::replay(a, &out, &prov),
        Command::Evaluate(a) => evaluate::evaluate(a, &out, &prov),
    })
}

fn report(code: u8, kind: &str, message: &str) -> ExitCode {
    let quoted = serde_json::to_string(message).unwrap_or_else(|_| "\"\"".into());
    eprintln!("falqon-error code={code} kind={kind} message={quoted}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return report(2, "argument", &e.kind().to_string());
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = match e.kind() {
                ErrorKind::Argument => (2, "argument"),
                ErrorKind::Io => (3, "io"),
                ErrorKind::Numeric => (4, "numeric"),
            };
            report(code, kind, &format!("{} failed: {e}", cli.command.name()))
        }
    }
}
