//! Library side of the `gma` binary, so the commands can be driven from
//! tests without spawning processes.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod exit;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::artifacts::Artifacts;
use crate::config::Command;
use crate::exit::{CliError, ExitCode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CommandArg {
    Solve,
    VerifyLemmas,
    ChernWeil,
    Oracle,
    Export,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Solve => Command::Solve,
            CommandArg::VerifyLemmas => Command::VerifyLemmas,
            CommandArg::ChernWeil => Command::ChernWeil,
            CommandArg::Oracle => Command::Oracle,
            CommandArg::Export => Command::Export,
        }
    }
}

/// Generalised complex Monge–Ampère solver on flat tori.
///
/// Exit codes: 0 success, 1 property failure, 2 hypothesis failure,
/// 3 path failure, 4 I/O or configuration error.
#[derive(Debug, Parser)]
#[command(name = "gma", version)]
pub struct Cli {
    /// Command to run; falls back to `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<CommandArg>,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Artifact directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Grid sizes N1,...,N2n in axis order x1..xn, y1..yn.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    /// `section.key=value`, repeatable; values are TOML literals.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Runs one invocation and returns its exit code.
pub fn execute(cli: &Cli) -> u8 {
    match try_execute(cli) {
        Ok(code) => code.code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.code.code()
        }
    }
}

fn try_execute(cli: &Cli) -> Result<ExitCode, CliError> {
    let loaded =
        config::load(cli.config.as_deref(), &cli.overrides, cli.seed, cli.output.as_deref(), cli.grid.as_deref())?;
    let command = cli
        .command
        .map(Command::from)
        .or(loaded.config.command)
        .ok_or_else(|| CliError::config("no command given on the command line or in the config"))?;
    let mut out = Artifacts::create(&loaded.config.output_dir)?;
    let result = commands::run(command, &loaded.config, &mut out);
    let code = match &result {
        Ok(c) => c.code(),
        Err(e) => e.code.code(),
    };
    out.finish(command.name(), loaded.config.seed, &loaded.canonical, code)?;
    result
}
