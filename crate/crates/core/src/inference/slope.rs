use ndarray::Array2;

use crate::error::Result;
use crate::evt::{Sidedness, ThresholdSpec};
use crate::grid::{Direction, ImageGrid, InteriorRegion, Order, ScaleContext};
use crate::kernel::{MomentSums, Needs, SumMethod};

#[derive(Debug, Clone, Copy, Default)]
pub struct SlopeOptions {
    /// Compare `R` with `2u²` instead of `u²`.
    pub compat_tau2u2: bool,
}

#[derive(Debug, Clone)]
pub struct SlopeResult {
    pub region: InteriorRegion,
    /// `max(T0², T90²)` per pixel.
    pub r: Array2<f64>,
    pub significant: Array2<bool>,
    /// Gradient estimates `(â10, â01)`.
    pub a10: Array2<f64>,
    pub a01: Array2<f64>,
    pub threshold: ThresholdSpec,
    /// Level `R` is compared against.
    pub tau: f64,
    pub sigma_used: f64,
}

impl SlopeResult {
    pub fn significant_count(&self) -> usize {
        self.significant.iter().filter(|&&s| s).count()
    }
}

/// Joint slope test over the row and column directions with the
/// two-direction Bonferroni threshold.
pub fn slope_analysis(
    grid: &ImageGrid,
    ctx: &ScaleContext,
    alpha: f64,
    sigma: f64,
    opts: SlopeOptions,
) -> Result<SlopeResult> {
    let sums = MomentSums::compute(grid, ctx, Needs::Slope, SumMethod::default())?;
    slope_from_sums(&sums, alpha, sigma, opts)
}

pub fn slope_from_sums(sums: &MomentSums, alpha: f64, sigma: f64, opts: SlopeOptions) -> Result<SlopeResult> {
    let ctx = &sums.ctx;
    let t0 = sums.stat_field(Direction::ROW, Order::Slope, sigma)?;
    let t90 = sums.stat_field(Direction::COL, Order::Slope, sigma)?;
    let threshold = ThresholdSpec::for_region(alpha, 2, Order::Slope, &ctx.region, ctx.h, Sidedness::TwoSided)?;
    let u2 = threshold.u_crit * threshold.u_crit;
    let tau = if opts.compat_tau2u2 { 2.0 * u2 } else { u2 };
    let r = ndarray::Zip::from(&t0.stats).and(&t90.stats).map_collect(|&a, &b| (a * a).max(b * b));
    let significant = r.mapv(|v| v >= tau);
    let h2 = ctx.h * ctx.h;
    Ok(SlopeResult {
        region: ctx.region,
        r,
        significant,
        a10: sums.h10.mapv(|v| v / h2),
        a01: sums.h01.mapv(|v| v / h2),
        threshold,
        tau,
        sigma_used: sigma,
    })
}
