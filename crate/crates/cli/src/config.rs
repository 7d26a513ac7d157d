//! `key = value` config files, merged into the command line as flags.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::{ArgAction, Command};

use crate::error::CliError;

/// Parse `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; `_` and `-` in keys are interchangeable.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        out.push((k, v.trim().to_owned()));
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
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn has_flag(args: &[OsString], flag: &str) -> bool {
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

/// Append the config file's entries as flags of the selected subcommand,
/// skipping any flag already given on the command line.
pub fn merge(args: Vec<OsString>, cmd: &Command) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse(&text)?;

    let mut sub = cmd;
    for a in args.iter().skip(1) {
        let s = a.to_string_lossy();
        if s.starts_with('-') {
            continue;
        }
        match sub.find_subcommand(s.as_ref()) {
            Some(c) => sub = c,
            None => break,
        }
    }

    let mut out = args.clone();
    for (key, value) in entries {
        if key == "config" {
            continue;
        }
        let flag = format!("--{key}");
        if has_flag(&args, &flag) {
            continue;
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| CliError::Usage(format!("config key {key:?} is not an option of `{}`", sub.get_name())))?;
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "1" | "yes" => out.push(flag.into()),
                "false" | "0" | "no" => {}
                _ => return Err(CliError::Usage(format!("config key {key}: expected true or false, got {value:?}"))),
            },
            ArgAction::Append => {
                for v in value.split(';').map(str::trim).filter(|v| !v.is_empty()) {
                    out.push(flag.clone().into());
                    out.push(v.into());
                }
            }
            _ => {
                out.push(flag.into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let p = parse("# c\nword_divergence = 0.5\n\nseeds=0,1\n").unwrap();
        assert_eq!(p, vec![("word-divergence".into(), "0.5".into()), ("seeds".into(), "0,1".into())]);
        assert!(parse("nokey\n").is_err());
    }
}
