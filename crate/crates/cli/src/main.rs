mod args;
mod commands;
mod error;
mod manifest;
mod table;
mod values;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use crate::args::Cli;
use crate::error::CliError;
use crate::manifest::{ConfigFile, Manifest};

const THREADS_ENV: &str = "CDMA_LAB_THREADS";

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args_os().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Clap(e)) => {
            let _ = e.print();
            ExitCode::from(if e.use_stderr() { 2 } else { 0 })
        }
        Err(Failure::Cli(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

enum Failure {
    Clap(clap::Error),
    Cli(CliError),
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure::Cli(e)
    }
}

impl From<clap::Error> for Failure {
    fn from(e: clap::Error) -> Self {
        Failure::Clap(e)
    }
}

fn run(argv: Vec<String>) -> Result<(), Failure> {
    let mut command = Cli::command().mut_subcommands(|s| s.allow_negative_numbers(true));
    let config = match find_config(&argv) {
        Some(path) => Some(ConfigFile::read(&path)?),
        None => None,
    };
    let effective = match &config {
        Some(cfg) => splice_config(&argv, &command, cfg)?,
        None => argv.clone(),
    };
    let matches = command.try_get_matches_from_mut(effective.iter().map(OsString::from))?;
    let cli = Cli::from_arg_matches(&matches)?;

    let out = cli
        .common
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("missing required flag `--out`".into()))?;
    let threads = thread_count(cli.common.threads)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
    }

    let table = commands::run(&cli.command, &cli.common)?;
    let csv = table.to_csv()?;
    std::fs::write(&out, csv).map_err(|e| CliError::io(&out, e))?;

    let (name, sub_matches) = matches.subcommand().expect("subcommand is required");
    let arg_ids: Vec<String> = command
        .find_subcommand(name)
        .expect("matched subcommand exists")
        .get_arguments()
        .map(|a| a.get_id().to_string())
        .collect();
    let manifest = Manifest::new(
        cli.command.name(),
        &argv,
        &effective,
        sub_matches,
        &arg_ids,
        &cli.common,
        threads,
        config,
        vec![out.display().to_string()],
    );
    let path = manifest_path(&out);
    manifest.write(&path)?;
    Ok(())
}

pub fn manifest_path(out: &std::path::Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| {
                CliError::Usage(format!("invalid value for `{THREADS_ENV}`: `{v}` is not a thread count"))
            })?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(CliError::Usage("invalid value for `--threads`: must be at least 1".into()));
    }
    Ok(n)
}

fn find_config(argv: &[String]) -> Option<PathBuf> {
    let mut found = None;
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(v) = a.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
        }
    }
    found
}

/// Inserts the config entries as flags right after the subcommand name, so
/// that anything given on the command line later overrides them.
fn splice_config(argv: &[String], command: &clap::Command, cfg: &ConfigFile) -> Result<Vec<String>, CliError> {
    let position = argv
        .iter()
        .position(|a| command.find_subcommand(a).is_some())
        .ok_or_else(|| CliError::Usage("a subcommand is required".into()))?;
    let sub = command.find_subcommand(&argv[position]).expect("found above");
    let lookup = |key: &str| {
        sub.get_arguments()
            .chain(command.get_arguments())
            .find(|a| a.get_long() == Some(key))
    };

    let mut spliced = Vec::new();
    for (key, value) in &cfg.entries {
        let arg = lookup(key)
            .ok_or_else(|| CliError::Usage(format!("config key `{key}` is not a flag of `{}`", sub.get_name())))?;
        if key == "config" {
            return Err(CliError::Usage("config files cannot include other config files".into()));
        }
        if arg.get_action().takes_values() {
            spliced.push(format!("--{key}"));
            spliced.push(value.clone());
        } else {
            match value.as_str() {
                "true" => spliced.push(format!("--{key}")),
                "false" => {}
                other => {
                    return Err(CliError::Usage(format!(
                        "config key `{key}` is a switch; expected true or false, got `{other}`"
                    )))
                }
            }
        }
    }
    let mut effective = argv[..=position].to_vec();
    effective.extend(spliced);
    effective.extend_from_slice(&argv[position + 1..]);
    Ok(effective)
}
