//! Command-line front end: argument handling, output files and renderers.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod render;

pub use config::{OutputKind, RunConfig};
pub use error::{CliError, CliResult};
pub use render::{render_map, render_streamlines, MapLayer, RenderPalette};

use args::{Cli, Command};

/// Caps rayon's global pool from `SSS_THREADS`, when set.
pub fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SSS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("SSS_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot size thread pool: {e}")))
}

pub fn run(cli: &Cli) -> CliResult<()> {
    init_threads()?;
    match &cli.command {
        Command::Analyze(a) => commands::analyze(&commands::run_config(a)?),
        Command::Simulate(a) => commands::simulate(a),
        Command::Threshold(a) => commands::threshold(a),
        Command::Oracle(a) => commands::oracle(a),
    }
}
