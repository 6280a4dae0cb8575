//! `key=value` config files whose keys are long flag names.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::Command;

use crate::error::{Error, Result};

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected key=value", n + 1)))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn long_names(cmd: &Command) -> Vec<String> {
    cmd.get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect()
}

fn given_on_command_line(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

/// Inserts `--key value` for every config entry not already given on the
/// command line. Keys for another subcommand are ignored; keys matching
/// no flag at all are a usage error.
pub fn merge_config(cmd: &Command, args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries = parse_config(&text)?;
    let sub_pos = args
        .iter()
        .position(|a| cmd.find_subcommand(a.to_string_lossy().as_ref()).is_some());
    let Some(sub_pos) = sub_pos else {
        return Ok(args);
    };
    let sub = cmd
        .find_subcommand(args[sub_pos].to_string_lossy().as_ref())
        .expect("position found above");
    let own: Vec<String> = long_names(sub).into_iter().chain(long_names(cmd)).collect();
    let any: Vec<String> = cmd.get_subcommands().flat_map(long_names).chain(own.clone()).collect();
    let mut extra = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            continue;
        }
        if !any.contains(&key) {
            return Err(Error::Usage(format!("{}: unknown config key {key:?}", path.display())));
        }
        if own.contains(&key) && !given_on_command_line(&args, &key) {
            extra.push(OsString::from(format!("--{key}")));
            extra.push(OsString::from(value));
        }
    }
    let mut merged = args;
    merged.splice(sub_pos + 1..sub_pos + 1, extra);
    Ok(merged)
}
