//! Experiment runner behind the `ritzkit` binary.
//!
//! Each command resolves its configuration (file, flags, seed fallback),
//! writes `config.resolved` into the output directory and then its own
//! tables. Exit codes: 0 success, 1 usage or configuration error, 2 numeric
//! failure or a failed invariant check.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::path::Path;

use args::{Cli, Command};
use config::RunConfig;
use ritzkit::solve::{find_case, LadderConfig};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
    /// The command ran but the invariant it checks does not hold.
    #[error("check failed: {0}")]
    Check(String),
    #[error("output: {0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 1,
            Failure::Numeric(_) | Failure::Check(_) => 2,
        }
    }
}

impl From<ritzkit::Error> for Failure {
    fn from(e: ritzkit::Error) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Builds the resolved configuration for `cli` without running anything.
pub fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut config = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.global.out {
        config.out = out.clone();
    }
    if let Some(jobs) = cli.global.jobs {
        config.jobs = jobs;
    }
    let seed = config.resolve_seed(cli.global.seed)?;
    match &cli.command {
        Command::Solve(a) => {
            config.solve.apply(a);
            let case = find_case::<f64>(&config.solve.case)?;
            config.solve.resolve(LadderConfig::for_case(&case), seed)?;
        }
        Command::Gradcheck(a) => config.gradcheck.apply(a),
        Command::McCheck(a) => config.mc_check.apply(a),
        Command::Pwl(a) => {
            config.pwl.apply(a);
            config.pwl.resolve();
        }
        Command::Interp(a) => config.interp.apply(a),
    }
    Ok(config)
}

/// Resolves, records and runs one command.
pub fn run(cli: &Cli) -> Result<(), Failure> {
    let config = resolve(cli)?;
    let out: &Path = &config.out;
    std::fs::create_dir_all(out)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", out.display())))?;
    std::fs::write(out.join("config.resolved"), config.to_toml())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Solve(_) => commands::solve::run(&config),
        Command::Gradcheck(a) => commands::gradcheck::run(&config, a.inject_bug),
        Command::McCheck(_) => commands::mc_check::run(&config),
        Command::Pwl(_) => commands::pwl::run(&config),
        Command::Interp(_) => commands::interp::run(&config),
    })
}
