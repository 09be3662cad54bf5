//! `chinet` command-line front end.
//!
//! Each run writes its outputs and a `manifest.json` into `--out`; passing
//! that manifest back with `--manifest` reproduces the outputs byte for byte.

mod annual;
mod chinet;
mod cli;
mod config;
mod evaluate;
mod input;
mod io;
mod regress;
mod simulate;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use crate::cli::Cli;
use crate::config::{Manifest, RunConfig};
use crate::io::Output;

/// Short machine-readable class of a failure.
fn error_kind(e: &anyhow::Error) -> &'static str {
    use chinet_core::Error as E;
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<E>() {
            return match core {
                E::InvalidInput(_) => "invalid_input",
                E::Domain(_) => "domain",
                E::IllConditioned(_) => "ill_conditioned",
                E::NoEligiblePairs { .. } => "no_eligible_pairs",
                E::NonConvergence { .. } => "non_convergence",
                E::Parse { .. } => "parse",
                E::Io(_) => "io",
                E::Csv(_) => "csv",
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
        if cause.downcast_ref::<csv::Error>().is_some() || cause.downcast_ref::<serde_json::Error>().is_some() {
            return "parse";
        }
    }
    "invalid_input"
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn execute(cli: &Cli) -> Result<()> {
    let run = cli.command.run_args();
    if let Some(n) = run.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure worker threads")?;
    }
    let cfg = cli.command.config()?;
    let manifest = Manifest::new(cfg.clone())?;
    let mut out = Output::create(&run.out, manifest)?;
    match &cfg {
        RunConfig::Simulate(c) => simulate::run(c, &mut out)?,
        RunConfig::Chinet(c) => chinet::run(c, &mut out)?,
        RunConfig::Evaluate(c) => evaluate::run(c, &mut out)?,
        RunConfig::Annual(c) => annual::run(c, &mut out)?,
        RunConfig::Regress(c) => regress::run(c, &mut out)?,
    }
    out.finish()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                // --help and --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            eprintln!("error[usage]: {}", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", error_kind(&e), one_line(&format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
