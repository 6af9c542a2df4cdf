//! `--config` files: JSON objects whose keys are long flag names.
//!
//! Top-level scalar entries apply to every subcommand that has the flag.
//! An entry whose value is an object is a section for the subcommand of
//! that name, and every key in it must be a flag of that subcommand. Values
//! are turned into extra command-line arguments for flags the user did not
//! pass, so explicit flags always win and clap validates everything.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::CommandFactory;
use serde_json::{Map, Value};

use crate::args::Cli;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path} is not valid JSON: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("config {0} must be a JSON object")]
    NotAnObject(PathBuf),
    #[error("--config needs a file argument")]
    MissingPath,
    #[error("config section {section:?} has unknown key {key:?}")]
    UnknownKey { section: String, key: String },
    #[error("config key {key:?} has an unsupported value {value}")]
    BadValue { key: String, value: Value },
}

/// Locates `--config` and the subcommand name without a full parse, since
/// required flags may still be missing at this point.
fn scan(argv: &[OsString]) -> Result<(Option<PathBuf>, Option<String>), ConfigError> {
    let (mut path, mut sub) = (None, None);
    let mut it = argv.iter().skip(1);
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--" {
            break;
        } else if s == "--config" {
            path = Some(PathBuf::from(it.next().ok_or(ConfigError::MissingPath)?));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else if sub.is_none() && !s.starts_with('-') {
            sub = Some(s.into_owned());
        }
    }
    Ok((path, sub))
}

fn flag_given(argv: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let with_value = format!("--{long}=");
    argv.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_value)
    })
}

fn push_value(out: &mut Vec<OsString>, flag: &str, key: &str, value: &Value) -> Result<(), ConfigError> {
    let text = match value {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        _ => {
            return Err(ConfigError::BadValue {
                key: key.to_string(),
                value: value.clone(),
            })
        }
    };
    out.push(flag.into());
    out.push(text.into());
    Ok(())
}

/// Returns `argv` extended with the config file's values, or unchanged
/// when no `--config` is given.
pub fn apply(argv: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let (Some(path), Some(sub)) = scan(&argv)? else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read {
        path: path.clone(),
        source,
    })?;
    let json: Value = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.clone(),
        source,
    })?;
    let Value::Object(root) = json else {
        return Err(ConfigError::NotAnObject(path));
    };
    let cmd = Cli::command();
    let Some(sub_cmd) = cmd.find_subcommand(&sub) else {
        return Ok(argv);
    };
    let empty = Map::new();
    let section = match root.get(&sub) {
        Some(Value::Object(m)) => m,
        _ => &empty,
    };
    let shared = root.iter().filter(|(_, v)| !v.is_object());
    let entries = shared.map(|e| (e, false)).chain(section.iter().map(|e| (e, true)));
    let mut out = argv.clone();
    for ((key, value), strict) in entries {
        let long = key.replace('_', "-");
        let arg = sub_cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(long.as_str()) && !a.is_global_set() && long != "config");
        let Some(arg) = arg else {
            if strict {
                return Err(ConfigError::UnknownKey {
                    section: sub.clone(),
                    key: key.clone(),
                });
            }
            continue;
        };
        if flag_given(&argv, &long) || (!strict && section.contains_key(key)) {
            continue;
        }
        let flag = format!("--{long}");
        if !arg.get_action().takes_values() {
            match value {
                Value::Bool(true) => out.push(flag.into()),
                Value::Bool(false) => {}
                _ => {
                    return Err(ConfigError::BadValue {
                        key: key.clone(),
                        value: value.clone(),
                    })
                }
            }
        } else if let Value::Array(items) = value {
            for item in items {
                push_value(&mut out, &flag, key, item)?;
            }
        } else {
            push_value(&mut out, &flag, key, value)?;
        }
    }
    Ok(out)
}
