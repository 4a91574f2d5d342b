use std::path::PathBuf;
use std::process::ExitCode;

use torusfv_cli::commands::{
    check_command, consistency_command, run_command, study_command, CliError,
};

const USAGE: &str = "\
usage: torusfv <command> [--config PATH] [--out DIR]

commands:
  run          advance one configuration and write timeseries.csv
  study        self-convergence study, writes eoc.csv
  consistency  weak-form consistency defects over a refinement chain,
               writes consistency.csv
  check        randomized discrete-identity suite (config optional)

options:
  --config PATH   configuration file (required except for `check`)
  --out DIR       output directory (overrides output.dir)

environment:
  TORUSFV_THREADS   worker threads for study levels (default: all cores)";

struct Args {
    command: String,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
}

fn parse_args() -> Result<Args, CliError> {
    let mut argv = std::env::args().skip(1);
    let command = argv
        .next()
        .ok_or_else(|| CliError::new("usage", "missing command"))?;
    let mut config = None;
    let mut out = None;
    while let Some(flag) = argv.next() {
        match flag.as_str() {
            "--config" => {
                let value = argv
                    .next()
                    .ok_or_else(|| CliError::new("usage", "--config needs a path"))?;
                config = Some(PathBuf::from(value));
            }
            "--out" => {
                let value = argv
                    .next()
                    .ok_or_else(|| CliError::new("usage", "--out needs a directory"))?;
                out = Some(PathBuf::from(value));
            }
            other => {
                return Err(CliError::new(
                    "usage",
                    format!("unknown argument `{other}`"),
                ))
            }
        }
    }
    Ok(Args {
        command,
        config,
        out,
    })
}

fn require_config(args: &Args) -> Result<&PathBuf, CliError> {
    args.config
        .as_ref()
        .ok_or_else(|| CliError::new("usage", "this command requires --config PATH"))
}

fn dispatch(args: &Args) -> Result<(), CliError> {
    match args.command.as_str() {
        "run" => {
            run_command(require_config(args)?, args.out.as_deref())?;
            Ok(())
        }
        "study" => {
            study_command(require_config(args)?, args.out.as_deref())?;
            Ok(())
        }
        "consistency" => {
            consistency_command(require_config(args)?, args.out.as_deref())?;
            Ok(())
        }
        "check" => {
            check_command(args.config.as_deref())?;
            Ok(())
        }
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(CliError::new(
            "usage",
            format!("unknown command `{other}`"),
        )),
    }
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(args) => args,
        Err(e) => {
            eprintln!("{e}");
            eprintln!("{USAGE}");
            return ExitCode::FAILURE;
        }
    };
    match dispatch(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            if e.stage == "usage" {
                eprintln!("{USAGE}");
            }
            ExitCode::FAILURE
        }
    }
}
