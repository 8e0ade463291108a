use std::path::{Path, PathBuf};

use clap::ArgMatches;
use serde_json::{json, Map, Value};

use crate::args::Common;
use crate::error::CliError;

/// `key = value` lines; blank lines and `#` comments are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub path: PathBuf,
    pub entries: Vec<(String, String)>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected `key = value`", path.display(), i + 1))
            })?;
            let key = key.trim().trim_start_matches("--").to_owned();
            entries.push((key, value.trim().to_owned()));
        }
        Ok(ConfigFile {
            path: path.to_owned(),
            entries,
        })
    }
}

/// Everything needed to rerun a command: `replay` holds the arguments after
/// config expansion, so passing them back (with a new `--out`) reproduces
/// the CSV.
#[derive(Debug, Clone)]
pub struct Manifest(Value);

impl Manifest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        subcommand: &str,
        argv: &[String],
        effective: &[String],
        matches: &ArgMatches,
        arg_ids: &[String],
        common: &Common,
        threads: Option<usize>,
        config: Option<ConfigFile>,
        outputs: Vec<String>,
    ) -> Self {
        let mut params = Map::new();
        for id in arg_ids {
            if let Ok(Some(raw)) = matches.try_get_raw(id) {
                let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                params.insert(id.clone(), json!(values.join(",")));
            }
        }
        let replay = strip_config(&effective[1..]);
        let config = config.map(|c| {
            json!({
                "path": c.path.display().to_string(),
                "entries": c.entries.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
            })
        });
        Manifest(json!({
            "subcommand": subcommand,
            "argv": argv,
            "replay": replay,
            "params": params,
            "seed": common.seed,
            "quad": common.quad.to_string(),
            "threads": threads,
            "config": config,
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            "outputs": outputs,
        }))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(&self.0).expect("manifest is valid JSON");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

fn strip_config(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            it.next();
        } else if !a.starts_with("--config=") {
            out.push(a.clone());
        }
    }
    out
}
