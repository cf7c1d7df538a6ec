//! Experiment runner command line.
//!
//! Subcommands: `run <config.json> [--jobs N] [--out DIR]`,
//! `compare <dir>... --out comparison.csv`, `list-algorithms`,
//! `validate <config.json>`. Exit codes: 0 success, 2 configuration
//! error, 3 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use fieldopt::algorithms::AlgorithmId;
use fieldopt::error::Error;
use fieldopt::experiment;

const USAGE: &str = "\
Usage:
  fieldopt run <config.json> [--jobs N] [--out DIR]
  fieldopt compare <dir>... --out <comparison.csv>
  fieldopt list-algorithms
  fieldopt validate <config.json>

Exit codes: 0 success, 2 config error, 3 runtime failure.";

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_)
        | Error::Json(_)
        | Error::ConfigInconsistent(_)
        | Error::MissingGuess
        | Error::DimensionMismatch { .. }
        | Error::SchemaMismatch(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn cmd_run(args: &[String]) -> Result<(), (ExitCode, String)> {
    let mut config: Option<PathBuf> = None;
    let mut jobs = 1usize;
    let mut out: Option<PathBuf> = None;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--jobs" => {
                let v = it
                    .next()
                    .ok_or((ExitCode::from(2), "--jobs needs a value".to_string()))?;
                jobs = v
                    .parse()
                    .map_err(|e| (ExitCode::from(2), format!("--jobs: {e}")))?;
                if jobs == 0 {
                    return Err((ExitCode::from(2), "--jobs must be >= 1".into()));
                }
            }
            "--out" => {
                let v = it
                    .next()
                    .ok_or((ExitCode::from(2), "--out needs a value".to_string()))?;
                out = Some(PathBuf::from(v));
            }
            other if config.is_none() && !other.starts_with('-') => {
                config = Some(PathBuf::from(other));
            }
            other => {
                return Err((ExitCode::from(2), format!("unexpected argument '{other}'")));
            }
        }
    }
    let config = config.ok_or((ExitCode::from(2), "missing <config.json>".to_string()))?;
    match experiment::run_experiment(&config, out.as_deref(), jobs) {
        Ok(output) => {
            println!(
                "wrote {} trial trace(s), summary.csv, budget_snapshots.csv, beanplot.csv to {}",
                output.results.len(),
                output.dir.display()
            );
            println!(
                "best over trials: max {} median {} min {}",
                output.stats.max, output.stats.median, output.stats.min
            );
            Ok(())
        }
        Err(e) => Err((exit_code_for(&e), e.to_string())),
    }
}

fn cmd_compare(args: &[String]) -> Result<(), (ExitCode, String)> {
    let mut dirs: Vec<PathBuf> = Vec::new();
    let mut out: Option<PathBuf> = None;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--out" => {
                let v = it
                    .next()
                    .ok_or((ExitCode::from(2), "--out needs a value".to_string()))?;
                out = Some(PathBuf::from(v));
            }
            other if !other.starts_with('-') => dirs.push(PathBuf::from(other)),
            other => {
                return Err((ExitCode::from(2), format!("unexpected argument '{other}'")));
            }
        }
    }
    let out = out.ok_or((ExitCode::from(2), "compare needs --out <file>".to_string()))?;
    match experiment::compare(&dirs, &out) {
        Ok(()) => {
            println!("wrote {}", out.display());
            Ok(())
        }
        Err(e) => Err((exit_code_for(&e), e.to_string())),
    }
}

fn cmd_validate(args: &[String]) -> Result<(), (ExitCode, String)> {
    let [path] = args else {
        return Err((ExitCode::from(2), "validate takes exactly one config".into()));
    };
    let path = Path::new(path);
    let result = experiment::load_config(path)
        .and_then(|(config, base)| experiment::resolve(&config, &base).map(|_| ()));
    match result {
        Ok(()) => {
            println!("{}: ok", path.display());
            Ok(())
        }
        Err(e) => Err((exit_code_for(&e), e.to_string())),
    }
}

fn cmd_list_algorithms() {
    for id in AlgorithmId::all() {
        let kind = if id.is_deterministic() {
            "deterministic"
        } else {
            "stochastic"
        };
        println!("{id}\t{kind}");
    }
    println!("pairs\tAlgorithm1-Algorithm2 (joint-sequential), e.g. mcs-1-cmaes");
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(cmd) = args.first() else {
        eprintln!("{USAGE}");
        return ExitCode::from(2);
    };
    let rest = &args[1..];
    let outcome = match cmd.as_str() {
        "run" => cmd_run(rest),
        "compare" => cmd_compare(rest),
        "validate" => cmd_validate(rest),
        "list-algorithms" => {
            cmd_list_algorithms();
            Ok(())
        }
        "--help" | "-h" | "help" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err((ExitCode::from(2), format!("unknown subcommand '{other}'"))),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            code
        }
    }
}
