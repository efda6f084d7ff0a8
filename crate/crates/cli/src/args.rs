use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sss_core::kernel::SigmaSource;
use sss_core::sim::SimMode;
use sss_core::ImageFormat;

use crate::config::{parse_sigma, AnalysisKind, AngleSet, OutputKind};

#[derive(Debug, Parser)]
#[command(name = "sss", version, about = "Significance in scale space: multiscale slope and curvature maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyse an image and write maps, tables and a summary.
    Analyze(AnalyzeArgs),
    /// Monte-Carlo Type-I error experiment on pure noise.
    Simulate(SimulateArgs),
    /// Print the critical value and its ingredients as JSON.
    Threshold(ThresholdArgs),
    /// Analytic vs empirical lag correlations of the statistics on noise, as CSV.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// csv, pgm or png; inferred from the extension when omitted.
    #[arg(long, value_parser = clap::value_parser!(ImageFormat))]
    pub format: Option<ImageFormat>,
    #[arg(long = "h", value_delimiter = ',', default_value = "2,4,8,16")]
    pub bandwidths: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// known:<value> or estimate.
    #[arg(long, value_parser = parse_sigma, default_value = "known:1.0")]
    pub sigma: SigmaSource,
    /// six, table4 or custom:<list> (radians, pi/6, or 30deg).
    #[arg(long, default_value = "six")]
    pub angles: AngleSet,
    #[arg(long, value_enum, default_value_t = AnalysisKind::Both)]
    pub kind: AnalysisKind,
    #[arg(long, value_delimiter = ',', default_value = "map-png,class-csv,summary-json,streamlines-svg")]
    pub outputs: Vec<OutputKind>,
    /// Interior margin in pixels (default 4h).
    #[arg(long)]
    pub margin: Option<usize>,
    #[arg(long, default_value = "sss-out")]
    pub out_dir: PathBuf,
    /// Compare the joint slope statistic with 2u² instead of u².
    #[arg(long)]
    pub compat_tau2u2: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON or TOML experiment description; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(SimMode))]
    pub mode: Option<SimMode>,
    #[arg(long = "h", value_delimiter = ',')]
    pub bandwidths: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = parse_sigma)]
    pub sigma: Option<SigmaSource>,
    #[arg(long)]
    pub angles: Option<AngleSet>,
    /// Square image side.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub margin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Count only upper-tail exceedances, with the one-sided critical value.
    #[arg(long)]
    pub one_sided: bool,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderArg {
    Slope,
    Curvature,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Number of jointly tested directions.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Interior side length.
    #[arg(long)]
    pub g: usize,
    #[arg(long = "h")]
    pub h: f64,
    #[arg(long, value_enum)]
    pub order: OrderArg,
    #[arg(long)]
    pub one_sided: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long = "h", value_delimiter = ',', default_value = "4,8")]
    pub bandwidths: Vec<f64>,
    #[arg(long, default_value = "custom:0,pi/2,pi/4")]
    pub angles: AngleSet,
    /// Lags as i:j pairs.
    #[arg(long, value_delimiter = ',', default_value = "1:0,0:1,1:1,2:0")]
    pub lags: Vec<Lag>,
    /// Square noise image side.
    #[arg(long, default_value_t = 400)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lag(pub i64, pub i64);

impl std::str::FromStr for Lag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (i, j) = s.split_once(':').ok_or_else(|| format!("expected i:j, got '{s}'"))?;
        let p = |x: &str| x.trim().parse::<i64>().map_err(|_| format!("bad lag '{s}'"));
        Ok(Lag(p(i)?, p(j)?))
    }
}
