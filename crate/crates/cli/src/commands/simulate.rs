use std::path::Path;

use sss_core::evt::Sidedness;
use sss_core::sim::{type1_experiment, SimConfig};
use sss_core::Error;

use crate::args::SimulateArgs;
use crate::error::{CliError, CliResult};

fn load_config(path: &Path) -> CliResult<SimConfig> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()).into());
    }
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let toml_ext = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let parsed = if toml_ext {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// The experiment described by the config file (if any) with flags applied
/// on top.
pub fn sim_config(args: &SimulateArgs) -> CliResult<SimConfig> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => SimConfig::default(),
    };
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(h) = &args.bandwidths {
        cfg.bandwidths = h.clone();
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(s) = args.sigma {
        cfg.sigma = s;
    }
    if let Some(a) = &args.angles {
        cfg.angles = Some(a.radians());
    }
    if let Some(n) = args.size {
        cfg.rows = n;
        cfg.cols = n;
    }
    if args.margin.is_some() {
        cfg.margin_override = args.margin;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = args.reps {
        cfg.replicates = r;
    }
    if args.one_sided {
        cfg.sidedness = Sidedness::OneSided;
    }
    Ok(cfg)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let cfg = sim_config(args)?;
    let result = type1_experiment(&cfg)?;
    super::emit(&result.to_csv(), args.out.as_deref())
}
