//! Flat `key = value` configuration files. Keys are long flag names; values
//! from the file are spliced in before the command-line flags, so flags win.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::error::{CliError, CliResult};
use crate::Cli;

/// Returns `argv` with the config file's entries inserted after the
/// subcommand name. Without `--config` the arguments are returned as given.
pub fn expand_args(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let sub = match argv.get(1).and_then(|s| s.to_str()) {
        Some(s) => s.to_owned(),
        None => return Ok(argv),
    };
    let cmd = Cli::command();
    let Some(sub_cmd) = cmd.find_subcommand(&sub) else {
        return Ok(argv);
    };
    let known: Vec<String> = sub_cmd
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_owned))
        .collect();
    let injected = read_config(Path::new(&path), &known)?;
    let mut out = argv[..2].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<String> {
    let mut it = argv.iter().filter_map(|a| a.to_str());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(str::to_owned);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_owned());
        }
    }
    None
}

fn read_config(path: &Path, known: &[String]) -> CliResult<Vec<OsString>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io("config", &path.to_path_buf(), e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::new(
                "config",
                format!("{} line {}: expected key = value", path.display(), i + 1),
            ));
        };
        let key = key.trim();
        let value = value.trim();
        if key == "config" || !known.iter().any(|k| k == key) {
            return Err(CliError::new(
                "config",
                format!("{} line {}: unknown key {key:?}", path.display(), i + 1),
            ));
        }
        out.push(OsString::from(format!("--{key}")));
        out.push(OsString::from(value));
    }
    Ok(out)
}
