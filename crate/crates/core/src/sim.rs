//! Seeded noise and phantom generators and the Monte-Carlo harness for
//! Type-I error and power.
//!
//! Replicate `r` of an experiment with master seed `s` draws from ChaCha8
//! keyed by `s` on stream `r`, so every replicate is reproducible on its
//! own and results do not depend on scheduling. Normal variates are the
//! inverse normal CDF applied to 53-bit uniforms on the open unit interval.

use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::evt::{Sidedness, ThresholdSpec};
use crate::grid::{Direction, ImageGrid, Order, ScaleContext, DEFAULT_SUPPORT_FACTOR};
use crate::inference::{curvature_from_sums, Category, CurvatureOptions, SIX_ANGLES, TABLE4_ANGLES};
use crate::kernel::{resolve_sigma, MomentSums, Needs, SigmaSource, SumMethod};

/// Generator for replicate `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One standard normal variate.
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    crate::evt::normal_cdf_inv(u).expect("uniform lies in (0, 1)")
}

pub fn noise_from_rng(rows: usize, cols: usize, rng: &mut impl RngCore) -> Result<ImageGrid> {
    let data = (0..rows * cols).map(|_| standard_normal(rng)).collect();
    ImageGrid::from_rows(rows, cols, data)
}

/// i.i.d. `N(0, 1)` image; identical for identical `(rows, cols, seed)`.
pub fn generate_noise(rows: usize, cols: usize, seed: u64) -> Result<ImageGrid> {
    noise_from_rng(rows, cols, &mut stream_rng(seed, 0))
}

/// Isotropic Gaussian bump `amplitude * exp(-d² / 2 width²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    /// `(row, col)`.
    pub center: (f64, f64),
    pub amplitude: f64,
    pub width: f64,
}

fn phantom_signal(bumps: &[Bump], rows: usize, cols: usize) -> Result<Array2<f64>> {
    if let Some(b) = bumps.iter().find(|b| b.width.is_nan() || b.width <= 0.0) {
        return Err(Error::param(format!("bump width must be positive, got {}", b.width)));
    }
    Ok(Array2::from_shape_fn((rows, cols), |(i, j)| {
        bumps
            .iter()
            .map(|b| {
                let (di, dj) = (i as f64 - b.center.0, j as f64 - b.center.1);
                b.amplitude * (-(di * di + dj * dj) / (2.0 * b.width * b.width)).exp()
            })
            .sum()
    }))
}

fn phantom_from_rng(
    bumps: &[Bump],
    rows: usize,
    cols: usize,
    noise_sigma: f64,
    rng: &mut impl RngCore,
) -> Result<ImageGrid> {
    let mut values = phantom_signal(bumps, rows, cols)?;
    if noise_sigma > 0.0 {
        values.iter_mut().for_each(|v| *v += noise_sigma * standard_normal(rng));
    }
    ImageGrid::new(values)
}

/// Sum of Gaussian bumps plus i.i.d. `N(0, noise_sigma²)` noise.
pub fn generate_phantom(bumps: &[Bump], rows: usize, cols: usize, noise_sigma: f64, seed: u64) -> Result<ImageGrid> {
    if noise_sigma < 0.0 {
        return Err(Error::param("noise sigma must be non-negative"));
    }
    phantom_from_rng(bumps, rows, cols, noise_sigma, &mut stream_rng(seed, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Each slope direction on its own (`N = 1`).
    SlopePerAngle,
    /// Row and column slopes jointly (`N = 2`).
    SlopeJoint,
    /// Each curvature angle on its own (`N = 1`).
    CurvaturePerAngle,
    /// All curvature angles jointly (`N = |angles|`).
    CurvatureJoint,
}

impl SimMode {
    pub fn order(self) -> Order {
        match self {
            SimMode::SlopePerAngle | SimMode::SlopeJoint => Order::Slope,
            SimMode::CurvaturePerAngle | SimMode::CurvatureJoint => Order::Curvature,
        }
    }

    pub fn is_joint(self) -> bool {
        matches!(self, SimMode::SlopeJoint | SimMode::CurvatureJoint)
    }

    pub fn default_angles(self) -> Vec<f64> {
        match self {
            SimMode::SlopePerAngle | SimMode::SlopeJoint => vec![0.0, FRAC_PI_2],
            SimMode::CurvaturePerAngle => TABLE4_ANGLES.to_vec(),
            SimMode::CurvatureJoint => SIX_ANGLES.to_vec(),
        }
    }
}

impl std::str::FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "slope_per_angle" => Ok(SimMode::SlopePerAngle),
            "slope_joint" => Ok(SimMode::SlopeJoint),
            "curvature_per_angle" => Ok(SimMode::CurvaturePerAngle),
            "curvature_joint" => Ok(SimMode::CurvatureJoint),
            other => Err(Error::param(format!("unknown simulation mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub replicates: usize,
    pub rows: usize,
    pub cols: usize,
    pub margin_override: Option<usize>,
    pub bandwidths: Vec<f64>,
    pub alpha: f64,
    pub master_seed: u64,
    pub mode: SimMode,
    /// Defaults to the mode's standard angle set when absent.
    pub angles: Option<Vec<f64>>,
    pub sigma: SigmaSource,
    pub sidedness: Sidedness,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            replicates: 200,
            rows: 280,
            cols: 280,
            margin_override: Some(40),
            bandwidths: vec![2.0, 4.0, 8.0, 16.0],
            alpha: 0.05,
            master_seed: 20_250_101,
            mode: SimMode::SlopeJoint,
            angles: None,
            sigma: SigmaSource::Known(1.0),
            sidedness: Sidedness::TwoSided,
        }
    }
}

impl SimConfig {
    pub fn angles(&self) -> Vec<f64> {
        self.angles.clone().unwrap_or_else(|| self.mode.default_angles())
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::param("replicates must be at least 1"));
        }
        if self.bandwidths.is_empty() {
            return Err(Error::param("at least one bandwidth is required"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let angles = self.angles();
        if self.mode.order() == Order::Curvature {
            crate::inference::validate_angles(&angles)?;
        } else if angles.is_empty() {
            return Err(Error::param("at least one slope angle is required"));
        }
        Ok(())
    }
}

/// Exact (Clopper–Pearson) two-sided interval for a binomial rate.
pub fn clopper_pearson(k: usize, n: usize, level: f64) -> (f64, f64) {
    assert!(k <= n && n > 0);
    let a = (1.0 - level) / 2.0;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 { 0.0 } else { Beta::new(kf, nf - kf + 1.0).expect("valid beta").inverse_cdf(a) };
    let hi = if k == n { 1.0 } else { Beta::new(kf + 1.0, nf - kf).expect("valid beta").inverse_cdf(1.0 - a) };
    (lo, hi)
}

/// Exceedance count for one bandwidth and one angle (or the joint test).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCell {
    pub h: f64,
    /// `None` for the joint test.
    pub angle: Option<f64>,
    pub exceed_count: usize,
    pub replicates: usize,
    pub rate: f64,
    pub ci95: (f64, f64),
    pub u_crit: f64,
}

impl SimCell {
    fn new(h: f64, angle: Option<f64>, exceed_count: usize, replicates: usize, u_crit: f64) -> Self {
        SimCell {
            h,
            angle,
            exceed_count,
            replicates,
            rate: exceed_count as f64 / replicates as f64,
            ci95: clopper_pearson(exceed_count, replicates, 0.95),
            u_crit,
        }
    }

    pub fn ci(&self, level: f64) -> (f64, f64) {
        clopper_pearson(self.exceed_count, self.replicates, level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mode: SimMode,
    pub alpha: f64,
    pub cells: Vec<SimCell>,
}

impl SimResult {
    pub fn cell(&self, h: f64, angle: Option<f64>) -> Option<&SimCell> {
        self.cells.iter().find(|c| {
            c.h == h
                && match (c.angle, angle) {
                    (None, None) => true,
                    (Some(a), Some(b)) => (a - b).abs() < 1e-12,
                    _ => false,
                }
        })
    }

    /// One row per cell: `mode,h,angle,exceed_count,replicates,rate,ci_lo,ci_hi,u_crit`.
    pub fn to_csv(&self) -> String {
        let mode = serde_plain_mode(self.mode);
        let mut out = String::from("mode,h,angle,exceed_count,replicates,rate,ci95_lo,ci95_hi,u_crit\n");
        for c in &self.cells {
            let angle = c.angle.map_or_else(|| "joint".to_string(), |a| format!("{a:.16e}"));
            out.push_str(&format!(
                "{mode},{:.16e},{angle},{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                c.h, c.exceed_count, c.replicates, c.rate, c.ci95.0, c.ci95.1, c.u_crit
            ));
        }
        out
    }
}

fn serde_plain_mode(mode: SimMode) -> &'static str {
    match mode {
        SimMode::SlopePerAngle => "slope_per_angle",
        SimMode::SlopeJoint => "slope_joint",
        SimMode::CurvaturePerAngle => "curvature_per_angle",
        SimMode::CurvatureJoint => "curvature_joint",
    }
}

struct Plan {
    ctx: ScaleContext,
    u: f64,
}

fn exceeds(field: &Array2<f64>, u: f64, sided: Sidedness) -> bool {
    match sided {
        Sidedness::TwoSided => field.iter().any(|t| t.abs() > u),
        Sidedness::OneSided => field.iter().any(|&t| t > u),
    }
}

/// Counts, per bandwidth and angle (or jointly), the replicates of pure
/// `N(0, 1)` noise whose statistic exceeds the critical value anywhere in
/// the interior.
pub fn type1_experiment(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let angles = config.angles();
    let order = config.mode.order();
    let n_dirs = if config.mode.is_joint() { angles.len() } else { 1 };
    let plans = config
        .bandwidths
        .iter()
        .map(|&h| {
            let ctx = ScaleContext::new(config.rows, config.cols, h, DEFAULT_SUPPORT_FACTOR, config.margin_override)?;
            let t = ThresholdSpec::for_region(config.alpha, n_dirs, order, &ctx.region, h, config.sidedness)?;
            Ok(Plan { ctx, u: t.u_crit })
        })
        .collect::<Result<Vec<_>>>()?;
    let dirs: Vec<Direction> = angles.iter().map(|&a| Direction::from_angle(a)).collect();
    let needs = match order {
        Order::Slope => Needs::Slope,
        Order::Curvature => Needs::Curvature,
    };
    let cells_per_h = if config.mode.is_joint() { 1 } else { angles.len() };

    let per_replicate: Vec<Vec<bool>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let grid = noise_from_rng(config.rows, config.cols, &mut stream_rng(config.master_seed, r))?;
            let sigma = resolve_sigma(config.sigma, &grid)?;
            let mut flags = Vec::with_capacity(plans.len() * cells_per_h);
            for plan in &plans {
                let sums = MomentSums::compute(&grid, &plan.ctx, needs, SumMethod::Separable)?;
                let hit: Vec<bool> = dirs
                    .iter()
                    .map(|&d| Ok(exceeds(&sums.stat_field(d, order, sigma)?.stats, plan.u, config.sidedness)))
                    .collect::<Result<_>>()?;
                if config.mode.is_joint() {
                    flags.push(hit.iter().any(|&b| b));
                } else {
                    flags.extend(hit);
                }
            }
            Ok(flags)
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (p, plan) in plans.iter().enumerate() {
        for a in 0..cells_per_h {
            let idx = p * cells_per_h + a;
            let count = per_replicate.iter().filter(|f| f[idx]).count();
            let angle = (!config.mode.is_joint()).then(|| angles.get(a).copied()).flatten();
            cells.push(SimCell::new(plan.ctx.h, angle, count, config.replicates, plan.u));
        }
    }
    Ok(SimResult { mode: config.mode, alpha: config.alpha, cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    pub replicates: usize,
    pub rows: usize,
    pub cols: usize,
    pub margin_override: Option<usize>,
    pub bandwidths: Vec<f64>,
    pub alpha: f64,
    pub master_seed: u64,
    pub angles: Vec<f64>,
    pub noise_sigma: f64,
    pub sigma: SigmaSource,
    /// Search radius around each bump center, in pixels.
    pub radius: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            replicates: 100,
            rows: 128,
            cols: 128,
            margin_override: None,
            bandwidths: vec![4.0],
            alpha: 0.05,
            master_seed: 7,
            angles: SIX_ANGLES.to_vec(),
            noise_sigma: 1.0,
            sigma: SigmaSource::Known(1.0),
            radius: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpDetection {
    pub bump: Bump,
    pub expected: Category,
    pub detections: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub h: f64,
    pub replicates: usize,
    pub bumps: Vec<BumpDetection>,
    /// Mean pixel count per category over replicates.
    pub mean_counts: Vec<(Category, f64)>,
    /// Replicates with at least one non-None pixel anywhere.
    pub any_significant: usize,
    /// Replicates in which every bump was detected.
    pub all_detected: usize,
}

fn expected_category(b: &Bump) -> Category {
    if b.amplitude < 0.0 {
        Category::Hole
    } else {
        Category::Peak
    }
}

fn bump_hit(cat: &Array2<Category>, ctx: &ScaleContext, b: &Bump, radius: f64) -> bool {
    let m = ctx.region.margin as f64;
    cat.indexed_iter().any(|((i, j), &c)| {
        let (di, dj) = (i as f64 + m - b.center.0, j as f64 + m - b.center.1);
        let close = di * di + dj * dj <= radius * radius;
        close
            && if b.amplitude == 0.0 { matches!(c, Category::Peak | Category::Hole) } else { c == expected_category(b) }
    })
}

/// Curvature-analysis power on a bump phantom: per bump, the share of
/// replicates with a correctly signed Peak (positive amplitude) or Hole
/// (negative amplitude) pixel within `radius` of its center.
pub fn power_experiment(bumps: &[Bump], config: &PowerConfig) -> Result<Vec<PowerCell>> {
    if config.replicates == 0 {
        return Err(Error::param("replicates must be at least 1"));
    }
    crate::inference::validate_angles(&config.angles)?;
    let signal = phantom_signal(bumps, config.rows, config.cols)?;
    let ctxs = config
        .bandwidths
        .iter()
        .map(|&h| ScaleContext::new(config.rows, config.cols, h, DEFAULT_SUPPORT_FACTOR, config.margin_override))
        .collect::<Result<Vec<_>>>()?;
    let opts = CurvatureOptions { angles: config.angles.clone() };

    // per replicate, per h: (bump hits, category counts, any)
    type Rep = Vec<(Vec<bool>, [usize; 6], bool)>;
    let reps: Vec<Rep> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(config.master_seed, r);
            let mut values = signal.clone();
            if config.noise_sigma > 0.0 {
                values.iter_mut().for_each(|v| *v += config.noise_sigma * standard_normal(&mut rng));
            }
            let grid = ImageGrid::new(values)?;
            let sigma = resolve_sigma(config.sigma, &grid)?;
            ctxs.iter()
                .map(|ctx| {
                    let sums = MomentSums::compute(&grid, ctx, Needs::Curvature, SumMethod::Separable)?;
                    let res = curvature_from_sums(&sums, config.alpha, sigma, &opts)?;
                    let hits = bumps.iter().map(|b| bump_hit(&res.category, ctx, b, config.radius)).collect();
                    let mut counts = [0usize; 6];
                    for (k, cat) in Category::ALL.iter().enumerate() {
                        counts[k] = res.count(*cat);
                    }
                    Ok((hits, counts, res.non_none() > 0))
                })
                .collect::<Result<Rep>>()
        })
        .collect::<Result<_>>()?;

    let n = config.replicates;
    Ok(ctxs
        .iter()
        .enumerate()
        .map(|(k, ctx)| {
            let bumps = bumps
                .iter()
                .enumerate()
                .map(|(b, bump)| {
                    let detections = reps.iter().filter(|rep| rep[k].0[b]).count();
                    BumpDetection {
                        bump: *bump,
                        expected: expected_category(bump),
                        detections,
                        rate: detections as f64 / n as f64,
                    }
                })
                .collect();
            let mean_counts = Category::ALL
                .iter()
                .enumerate()
                .map(|(c, cat)| (*cat, reps.iter().map(|rep| rep[k].1[c] as f64).sum::<f64>() / n as f64))
                .collect();
            PowerCell {
                h: ctx.h,
                replicates: n,
                bumps,
                mean_counts,
                any_significant: reps.iter().filter(|rep| rep[k].2).count(),
                all_detected: reps.iter().filter(|rep| rep[k].0.iter().all(|&b| b)).count(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_deterministic() {
        let a = generate_noise(20, 30, 9).unwrap();
        let b = generate_noise(20, 30, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_noise(20, 30, 10).unwrap());
    }

    #[test]
    fn streams_differ() {
        let a = noise_from_rng(5, 5, &mut stream_rng(3, 0)).unwrap();
        let b = noise_from_rng(5, 5, &mut stream_rng(3, 1)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn phantom_construction() {
        let g = generate_phantom(&[], 10, 10, 0.0, 1).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
        let b = Bump { center: (12.0, 17.0), amplitude: 3.5, width: 2.0 };
        let g = generate_phantom(&[b], 30, 30, 0.0, 1).unwrap();
        let max = g.values().iter().copied().fold(f64::MIN, f64::max);
        assert!((max - 3.5).abs() < 1e-12);
        assert!((g.get(12, 17) - 3.5).abs() < 1e-12);
        assert!(generate_phantom(&[Bump { width: 0.0, ..b }], 5, 5, 0.0, 1).is_err());
    }

    #[test]
    fn clopper_pearson_known_values() {
        let (lo, hi) = clopper_pearson(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(5, 10, 0.95);
        assert!((lo - 0.187086).abs() < 1e-5 && (hi - 0.812914).abs() < 1e-5);
    }

    #[test]
    fn config_defaults_and_toml() {
        let c: SimConfig =
            toml::from_str("mode = \"curvature_joint\"\nreplicates = 3").unwrap_or_else(|e| panic!("{e}"));
        assert_eq!(c.replicates, 3);
        assert_eq!(c.angles().len(), 6);
        assert_eq!(c.margin_override, Some(40));
    }

    #[test]
    fn small_experiment_runs() {
        let cfg = SimConfig {
            replicates: 4,
            rows: 48,
            cols: 48,
            margin_override: None,
            bandwidths: vec![2.0],
            mode: SimMode::SlopePerAngle,
            ..Default::default()
        };
        let res = type1_experiment(&cfg).unwrap();
        assert_eq!(res.cells.len(), 2);
        assert!(res.cells.iter().all(|c| c.exceed_count <= c.replicates));
        assert!(res.to_csv().lines().count() == 3);
    }
}
