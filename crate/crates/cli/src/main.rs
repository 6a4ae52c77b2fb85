//! `mldict`: train, encode and evaluate multilevel dictionaries.
//!
//! Every subcommand takes its parameters from built-in defaults, an optional
//! `--config` file of `key = value` lines, and `--key value` flags, in
//! increasing precedence. The fully resolved parameters are written to
//! `manifest.txt` in the output directory; that file is itself a valid
//! config for rerunning the command.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

mod commands;
mod error;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, Command};

use commands::Output;
use error::CliError;
use params::Params;

fn cli(defs: &[commands::CommandDef]) -> Command {
    let mut root = Command::new("mldict")
        .about("Multilevel dictionary learning for sparse representations")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for d in defs {
        let sub = Command::new(d.name)
            .about(d.about)
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_name("FILE")
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("key = value parameter file; flags override it"),
            )
            .arg(
                Arg::new("out")
                    .long("out")
                    .value_name("DIR")
                    .default_value(".")
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("output directory"),
            );
        root = root.subcommand(params::with_flags(sub, &d.specs));
    }
    root
}

fn run() -> Result<(), CliError> {
    let defs = commands::all();
    let matches = cli(&defs).get_matches();
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let def = defs.iter().find(|d| d.name == name).expect("subcommand is registered");
    let params = Params::resolve(name, &def.specs, sub.get_one::<PathBuf>("config").map(PathBuf::as_path), sub)?;
    let out = Output::new(sub.get_one::<PathBuf>("out").expect("has a default"))?;
    out.write("manifest.txt", params.manifest())?;
    (def.run)(&params, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mldict: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_table_is_consistent() {
        let defs = commands::all();
        cli(&defs).debug_assert();
        for d in &defs {
            let mut keys: Vec<&str> = d.specs.iter().map(|s| s.key).collect();
            keys.sort_unstable();
            let n = keys.len();
            keys.dedup();
            assert_eq!(keys.len(), n, "duplicate key in {}", d.name);
            assert!(keys.contains(&"seed"), "{} lacks a seed", d.name);
        }
    }
}
