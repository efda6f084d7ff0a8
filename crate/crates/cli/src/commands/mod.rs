mod analyze;
mod oracle;
mod simulate;
mod threshold;

pub use analyze::{analyze, run_config};
pub use oracle::oracle;
pub use simulate::{sim_config, simulate};
pub use threshold::threshold;

use std::path::Path;

use crate::error::{CliError, CliResult};

/// Text to `path`, or to standard output without one.
fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| {
            let _ = std::fs::remove_file(p);
            CliError::Write { path: p.to_path_buf(), source }
        }),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|source| CliError::Write { path: "<stdout>".into(), source })
        }
    }
}
