//! Batch front end for `lrdproc`: parameter validation, probability queries,
//! sampling, analysis and the self-test suite, with file-based output.

pub mod args;
pub mod commands;
pub mod failure;
pub mod selftest;

use std::io::Write;

use args::{Cli, Command};
use commands::RunConfig;
use failure::{Failure, EXIT_SELFTEST};

/// Executes one parsed command line.
pub fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(cli.opts, cli.command.clone())?;
    match &cli.command {
        Command::Validate => commands::validate(&cfg),
        Command::Prob { pattern, pattern_text } => commands::prob(&cfg, pattern.as_deref(), pattern_text.as_deref()),
        Command::Sample { format } => commands::sample(&cfg, *format),
        Command::Analyze { input, curves } => commands::analyze(&cfg, input.as_deref(), curves.as_deref()),
        Command::Fracmult { grid, curves } => commands::fracmult(&cfg, grid.as_deref(), curves.as_deref()),
        Command::Enumerate => commands::enumerate(&cfg),
        Command::Selftest => run_selftest(&cfg),
    }
}

fn run_selftest(cfg: &RunConfig) -> Result<(), Failure> {
    let params = match cfg.params_path {
        Some(_) => cfg.params()?,
        None => selftest::canonical(),
    };
    let checks = selftest::run(&params, cfg.seed, cfg.parallelism, &cfg.engine(), &cfg.sampler());
    let mut out = commands::open_out(cfg.out.as_deref())?;
    out.write_all(cfg.header(&params).as_bytes())?;
    for c in &checks {
        writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    out.flush()?;
    match checks.iter().find(|c| !c.passed) {
        Some(c) => Err(Failure::new(EXIT_SELFTEST, format!("selftest.{}", c.name), &c.detail)),
        None => Ok(()),
    }
}
