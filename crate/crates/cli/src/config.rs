//! Run configuration and the small value types parsed from flags.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sss_core::inference::{SIX_ANGLES, TABLE4_ANGLES};
use sss_core::kernel::SigmaSource;
use sss_core::ImageFormat;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    MapPng,
    ClassCsv,
    SummaryJson,
    StreamlinesSvg,
}

impl OutputKind {
    pub const ALL: [OutputKind; 4] =
        [OutputKind::MapPng, OutputKind::ClassCsv, OutputKind::SummaryJson, OutputKind::StreamlinesSvg];
}

impl FromStr for OutputKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "map-png" => Ok(OutputKind::MapPng),
            "class-csv" => Ok(OutputKind::ClassCsv),
            "summary-json" => Ok(OutputKind::SummaryJson),
            "streamlines-svg" => Ok(OutputKind::StreamlinesSvg),
            other => {
                Err(format!("unknown output '{other}' (expected map-png, class-csv, summary-json or streamlines-svg)"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisKind {
    Slope,
    Curvature,
    #[default]
    Both,
}

impl AnalysisKind {
    pub fn slope(self) -> bool {
        self != AnalysisKind::Curvature
    }

    pub fn curvature(self) -> bool {
        self != AnalysisKind::Slope
    }
}

/// `known:<value>` or `estimate`.
pub fn parse_sigma(s: &str) -> Result<SigmaSource, String> {
    if s == "estimate" {
        return Ok(SigmaSource::Estimate);
    }
    let v = s.strip_prefix("known:").ok_or_else(|| format!("expected 'known:<value>' or 'estimate', got '{s}'"))?;
    let v: f64 = v.parse().map_err(|_| format!("bad sigma value '{v}'"))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(format!("sigma must be positive, got {v}"));
    }
    Ok(SigmaSource::Known(v))
}

/// Named angle set or an explicit list.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleSet {
    Six,
    Table4,
    Custom(Vec<f64>),
}

impl AngleSet {
    pub fn radians(&self) -> Vec<f64> {
        match self {
            AngleSet::Six => SIX_ANGLES.to_vec(),
            AngleSet::Table4 => TABLE4_ANGLES.to_vec(),
            AngleSet::Custom(v) => v.clone(),
        }
    }
}

impl FromStr for AngleSet {
    type Err = String;

    /// `six`, `table4`, or `custom:a,b,…` with each item in radians, as a
    /// multiple of pi (`pi/6`, `-pi/12`), or in degrees (`30deg`).
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "six" => Ok(AngleSet::Six),
            "table4" => Ok(AngleSet::Table4),
            _ => {
                let list = s
                    .strip_prefix("custom:")
                    .ok_or_else(|| format!("expected six, table4 or custom:<list>, got '{s}'"))?;
                let v = list.split(',').map(|a| parse_angle(a.trim())).collect::<Result<Vec<_>, _>>()?;
                if v.is_empty() {
                    return Err("empty angle list".into());
                }
                Ok(AngleSet::Custom(v))
            }
        }
    }
}

fn parse_angle(s: &str) -> Result<f64, String> {
    let bad = || format!("bad angle '{s}'");
    if let Some(d) = s.strip_suffix("deg") {
        return d.parse::<f64>().map(f64::to_radians).map_err(|_| bad());
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s),
    };
    if let Some(rest) = body.strip_suffix("pi").or(if body == "pi" { Some("") } else { None }) {
        let k = if rest.is_empty() { 1.0 } else { rest.trim_end_matches('*').parse::<f64>().map_err(|_| bad())? };
        return Ok(sign * k * PI);
    }
    if let Some(rest) = body.strip_prefix("pi/") {
        let d: f64 = rest.parse().map_err(|_| bad())?;
        return Ok(sign * PI / d);
    }
    s.parse::<f64>().map_err(|_| bad())
}

/// Everything `analyze` needs, after flag parsing and validation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub format: ImageFormat,
    /// Sorted ascending, no duplicates.
    pub bandwidths: Vec<f64>,
    pub alpha: f64,
    pub sigma: SigmaSource,
    pub angles: Vec<f64>,
    pub kind: AnalysisKind,
    /// Sorted, no duplicates, never empty.
    pub outputs: Vec<OutputKind>,
    pub margin: Option<usize>,
    pub compat_tau2u2: bool,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(mut self) -> CliResult<Self> {
        if self.outputs.is_empty() {
            return Err(CliError::usage("at least one output is required"));
        }
        self.outputs.sort();
        self.outputs.dedup();
        if self.bandwidths.is_empty() {
            return Err(CliError::usage("at least one bandwidth is required"));
        }
        if let Some(h) = self.bandwidths.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(CliError::usage(format!("bandwidths must be positive, got {h}")));
        }
        self.bandwidths.sort_by(f64::total_cmp);
        self.bandwidths.dedup();
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::usage(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(self)
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }
}
