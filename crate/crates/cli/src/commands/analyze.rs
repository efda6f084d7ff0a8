use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sss_core::grid::{load_image, ScaleContext};
use sss_core::inference::{
    curvature_from_sums, slope_from_sums, trace_streamlines, CurvatureOptions, SlopeOptions, StreamlineParams,
};
use sss_core::kernel::{resolve_sigma, MomentSums, Needs, SigmaSource, SumMethod};
use sss_core::{Category, CurvatureResult, Error, ImageFormat, ImageGrid, SlopeResult, Streamline, ThresholdSpec};

use crate::args::AnalyzeArgs;
use crate::config::{AnalysisKind, OutputKind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, to_json, OutputSink};
use crate::render::{render_map, render_streamlines, MapLayer, RenderPalette};

pub fn run_config(args: &AnalyzeArgs) -> CliResult<RunConfig> {
    if !args.input.exists() {
        return Err(Error::NotFound(args.input.clone()).into());
    }
    let format = match args.format {
        Some(f) => f,
        None => ImageFormat::from_path(&args.input).ok_or_else(|| {
            CliError::usage(format!("cannot infer the format of {}; pass --format", args.input.display()))
        })?,
    };
    RunConfig {
        input: args.input.clone(),
        format,
        bandwidths: args.bandwidths.clone(),
        alpha: args.alpha,
        sigma: args.sigma,
        angles: args.angles.radians(),
        kind: args.kind,
        outputs: args.outputs.clone(),
        margin: args.margin,
        compat_tau2u2: args.compat_tau2u2,
        out_dir: args.out_dir.clone(),
    }
    .validate()
}

struct Scale {
    ctx: ScaleContext,
    slope: Option<SlopeResult>,
    curvature: Option<CurvatureResult>,
    streamlines: Vec<Streamline>,
}

fn run_scale(grid: &ImageGrid, cfg: &RunConfig, h: f64, sigma: f64) -> CliResult<Scale> {
    let ctx = ScaleContext::with_margin(grid, h, cfg.margin)?;
    let needs = match cfg.kind {
        AnalysisKind::Slope => Needs::Slope,
        AnalysisKind::Curvature => Needs::Curvature,
        AnalysisKind::Both => Needs::All,
    };
    let sums = MomentSums::compute(grid, &ctx, needs, SumMethod::Separable)?;
    let slope = cfg
        .kind
        .slope()
        .then(|| slope_from_sums(&sums, cfg.alpha, sigma, SlopeOptions { compat_tau2u2: cfg.compat_tau2u2 }))
        .transpose()?;
    let opts = CurvatureOptions { angles: cfg.angles.clone() };
    let curvature = cfg.kind.curvature().then(|| curvature_from_sums(&sums, cfg.alpha, sigma, &opts)).transpose()?;
    let streamlines = match (&slope, cfg.wants(OutputKind::StreamlinesSvg)) {
        (Some(s), true) => trace_streamlines(s, StreamlineParams::default()),
        _ => Vec::new(),
    };
    Ok(Scale { ctx, slope, curvature, streamlines })
}

/// `4` → `h4`, `2.5` → `h2.5`.
fn tag(h: f64) -> String {
    format!("h{h}")
}

fn slope_csv(r: &SlopeResult) -> String {
    let mut s = String::from("i,j,r,a10,a01,significant\n");
    for ((i, j), &v) in r.r.indexed_iter() {
        let (ii, jj) = r.region.to_image(i, j);
        let _ = writeln!(
            s,
            "{ii},{jj},{},{},{},{}",
            fmt_f64(v),
            fmt_f64(r.a10[[i, j]]),
            fmt_f64(r.a01[[i, j]]),
            r.significant[[i, j]] as u8
        );
    }
    s
}

fn curvature_csv(r: &CurvatureResult) -> String {
    let mut s = String::from("i,j");
    for k in 0..r.angles.len() {
        let _ = write!(s, ",t{k}");
    }
    s.push_str(",category\n");
    for ((i, j), cat) in r.category.indexed_iter() {
        let (ii, jj) = r.region.to_image(i, j);
        let _ = write!(s, "{ii},{jj}");
        for t in &r.stats {
            let _ = write!(s, ",{}", fmt_f64(t[[i, j]]));
        }
        let _ = writeln!(s, ",{cat}");
    }
    s
}

#[derive(Serialize)]
struct SlopeSummary {
    threshold: ThresholdSpec,
    tau: f64,
    significant: usize,
    streamlines: usize,
}

#[derive(Serialize)]
struct CurvatureSummary {
    threshold: ThresholdSpec,
    counts: BTreeMap<Category, usize>,
}

#[derive(Serialize)]
struct ScaleSummary {
    h: f64,
    margin: usize,
    radius: usize,
    interior_rows: usize,
    interior_cols: usize,
    slope: Option<SlopeSummary>,
    curvature: Option<CurvatureSummary>,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a RunConfig,
    rows: usize,
    cols: usize,
    sigma_used: f64,
    scales: Vec<ScaleSummary>,
    files: Vec<String>,
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn analyze(cfg: &RunConfig) -> CliResult<()> {
    let grid = load_image(&cfg.input, cfg.format)?;
    let sigma = match cfg.sigma {
        SigmaSource::Known(s) => s,
        SigmaSource::Estimate => resolve_sigma(cfg.sigma, &grid)?,
    };
    let scales = cfg.bandwidths.par_iter().map(|&h| run_scale(&grid, cfg, h, sigma)).collect::<CliResult<Vec<_>>>()?;

    let palette = RenderPalette::default();
    let mut sink = OutputSink::new(&cfg.out_dir)?;
    let mut summaries = Vec::new();
    for sc in &scales {
        let t = tag(sc.ctx.h);
        if let Some(s) = &sc.slope {
            if cfg.wants(OutputKind::MapPng) {
                sink.write(&format!("slope_{t}.png"), &render_map(MapLayer::Slope(s), &palette, &grid)?)?;
            }
            if cfg.wants(OutputKind::ClassCsv) {
                sink.write(&format!("slope_{t}.csv"), slope_csv(s).as_bytes())?;
            }
            if cfg.wants(OutputKind::StreamlinesSvg) {
                sink.write(&format!("streamlines_{t}.svg"), &render_streamlines(&sc.streamlines, &palette, &grid)?)?;
            }
        }
        if let Some(c) = &sc.curvature {
            if cfg.wants(OutputKind::MapPng) {
                sink.write(&format!("curvature_{t}.png"), &render_map(MapLayer::Curvature(c), &palette, &grid)?)?;
            }
            if cfg.wants(OutputKind::ClassCsv) {
                sink.write(&format!("curvature_{t}.csv"), curvature_csv(c).as_bytes())?;
            }
        }
        let (ir, ic) = sc.ctx.region.dim();
        summaries.push(ScaleSummary {
            h: sc.ctx.h,
            margin: sc.ctx.region.margin,
            radius: sc.ctx.radius,
            interior_rows: ir,
            interior_cols: ic,
            slope: sc.slope.as_ref().map(|s| SlopeSummary {
                threshold: s.threshold,
                tau: s.tau,
                significant: s.significant_count(),
                streamlines: sc.streamlines.len(),
            }),
            curvature: sc.curvature.as_ref().map(|c| CurvatureSummary {
                threshold: c.threshold,
                counts: Category::ALL.iter().map(|&k| (k, c.count(k))).collect(),
            }),
        });
    }
    if cfg.wants(OutputKind::SummaryJson) {
        let mut files: Vec<String> = sink.written().iter().map(|p| file_name(p)).collect();
        files.push("summary.json".into());
        let summary =
            Summary { config: cfg, rows: grid.rows(), cols: grid.cols(), sigma_used: sigma, scales: summaries, files };
        sink.write("summary.json", to_json(&summary).as_bytes())?;
    }
    sink.commit();
    Ok(())
}
