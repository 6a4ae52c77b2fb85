//! Flat key=value parameters: built-in defaults, then an optional config
//! file, then command-line flags, each overriding the last.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use clap::{Arg, ArgMatches, Command};

use crate::error::CliError;

#[derive(Debug, Clone, Copy)]
pub enum Fallback {
    Required,
    Unset,
    Value(&'static str),
}

#[derive(Debug, Clone, Copy)]
pub struct Spec {
    pub key: &'static str,
    pub default: Fallback,
    pub help: &'static str,
}

pub const fn req(key: &'static str, help: &'static str) -> Spec {
    Spec {
        key,
        default: Fallback::Required,
        help,
    }
}

pub const fn opt(key: &'static str, help: &'static str) -> Spec {
    Spec {
        key,
        default: Fallback::Unset,
        help,
    }
}

pub const fn def(key: &'static str, value: &'static str, help: &'static str) -> Spec {
    Spec {
        key,
        default: Fallback::Value(value),
        help,
    }
}

/// Adds one `--key VALUE` flag per spec.
pub fn with_flags(mut cmd: Command, specs: &[Spec]) -> Command {
    for s in specs {
        let help = match s.default {
            Fallback::Required => format!("{} [required]", s.help),
            Fallback::Unset => s.help.to_string(),
            Fallback::Value(v) => format!("{} [default: {v}]", s.help),
        };
        cmd = cmd.arg(Arg::new(s.key).long(s.key).value_name("VALUE").help(help));
    }
    cmd
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("config line {}: expected key = value", n + 1)));
        };
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("config line {}: '{k}' given twice", n + 1)));
        }
    }
    Ok(out)
}

/// Fully resolved parameters of one command run.
#[derive(Debug, Clone)]
pub struct Params {
    command: String,
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn resolve(
        command: &str,
        specs: &[Spec],
        config: Option<&Path>,
        matches: &ArgMatches,
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for s in specs {
            if let Fallback::Value(v) = s.default {
                values.insert(s.key.to_string(), v.to_string());
            }
        }
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            for (k, v) in parse_config(&text)? {
                if !specs.iter().any(|s| s.key == k) {
                    return Err(CliError::Config(format!("unknown key '{k}' for {command}")));
                }
                values.insert(k, v);
            }
        }
        for s in specs {
            if let Some(v) = matches.get_one::<String>(s.key) {
                values.insert(s.key.to_string(), v.clone());
            }
        }
        for s in specs {
            if matches!(s.default, Fallback::Required) && !values.contains_key(s.key) {
                return Err(CliError::Config(format!("missing required parameter '{}'", s.key)));
            }
        }
        Ok(Self {
            command: command.to_string(),
            values,
        })
    }

    /// The resolved parameters as a config file that reproduces the run.
    pub fn manifest(&self) -> String {
        let mut s = format!("# mldict {}\n", self.command);
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn str(&self, key: &str) -> Result<&str, CliError> {
        self.get_str(key)
            .ok_or_else(|| CliError::Config(format!("parameter '{key}' is not set")))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get_str(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Config(format!("cannot parse {key} = '{v}'")))
            })
            .transpose()
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.opt(key)?
            .ok_or_else(|| CliError::Config(format!("parameter '{key}' is not set")))
    }

    /// Comma-separated list; `a..b` expands to the inclusive integer range.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let Some(raw) = self.get_str(key) else {
            return Ok(Vec::new());
        };
        let bad = || CliError::Config(format!("cannot parse list {key} = '{raw}'"));
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some((a, b)) = item.split_once("..") {
                let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                for v in a..=b {
                    out.push(v.to_string().parse().map_err(|_| bad())?);
                }
            } else {
                out.push(item.parse().map_err(|_| bad())?);
            }
        }
        Ok(out)
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get_str(key) {
            None | Some("false" | "no" | "0") => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some(v) => Err(CliError::Config(format!("{key} must be true or false, got '{v}'"))),
        }
    }
}
