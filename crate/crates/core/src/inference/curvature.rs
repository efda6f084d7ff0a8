use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::{Sidedness, ThresholdSpec};
use crate::grid::{Direction, ImageGrid, InteriorRegion, Order, ScaleContext};
use crate::kernel::{MomentSums, Needs, SumMethod};

/// `{0, π/6, π/3, π/2, 2π/3, 5π/6}`.
pub const SIX_ANGLES: [f64; 6] = [0.0, PI / 6.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0, 5.0 * PI / 6.0];

/// `{-π/6, -π/12, 0, π/12, π/6, π/4}`.
pub const TABLE4_ANGLES: [f64; 6] = [-PI / 6.0, -PI / 12.0, 0.0, PI / 12.0, PI / 6.0, PI / 4.0];

/// Local curvature class from the signed per-angle significance pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    None,
    Peak,
    Hole,
    Saddle,
    Ridge,
    Valley,
}

impl Category {
    pub const ALL: [Category; 6] =
        [Category::Peak, Category::Hole, Category::Saddle, Category::Ridge, Category::Valley, Category::None];

    pub fn name(self) -> &'static str {
        match self {
            Category::None => "none",
            Category::Peak => "peak",
            Category::Hole => "hole",
            Category::Saddle => "saddle",
            Category::Ridge => "ridge",
            Category::Valley => "valley",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps per-angle signs (`-1`, `0`, `+1`) to a category.
///
/// Peak and Hole need every angle significant with the same sign; Ridge
/// and Valley need at least one insignificant angle.
pub fn classify_signs(signs: &[i8]) -> Category {
    let neg = signs.iter().filter(|&&s| s < 0).count();
    let pos = signs.iter().filter(|&&s| s > 0).count();
    let zero = signs.len() - neg - pos;
    match (neg > 0, pos > 0, zero > 0) {
        (true, true, _) => Category::Saddle,
        (true, false, false) => Category::Peak,
        (false, true, false) => Category::Hole,
        (true, false, true) => Category::Ridge,
        (false, true, true) => Category::Valley,
        (false, false, _) => Category::None,
    }
}

/// Rejects empty angle sets and angles that coincide modulo π.
pub fn validate_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::param("at least one curvature angle is required"));
    }
    let reduced: Vec<f64> = angles
        .iter()
        .map(|&a| {
            if !a.is_finite() {
                return f64::NAN;
            }
            a.rem_euclid(PI)
        })
        .collect();
    if reduced.iter().any(|a| a.is_nan()) {
        return Err(Error::param("angles must be finite"));
    }
    for (k, a) in reduced.iter().enumerate() {
        for b in &reduced[..k] {
            let d = (a - b).abs();
            if d.min(PI - d) < 1e-9 {
                return Err(Error::param(format!(
                    "angles {} and {} coincide modulo pi",
                    angles[k],
                    angles[reduced.iter().position(|x| x == b).unwrap()]
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CurvatureOptions {
    pub angles: Vec<f64>,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        CurvatureOptions { angles: SIX_ANGLES.to_vec() }
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureResult {
    pub region: InteriorRegion,
    pub angles: Vec<f64>,
    /// Standardized statistic per angle.
    pub stats: Vec<Array2<f64>>,
    /// `(row, col, angle)` signs in `{-1, 0, 1}`.
    pub signs: Array3<i8>,
    pub category: Array2<Category>,
    pub threshold: ThresholdSpec,
    pub sigma_used: f64,
}

impl CurvatureResult {
    pub fn count(&self, cat: Category) -> usize {
        self.category.iter().filter(|&&c| c == cat).count()
    }

    pub fn non_none(&self) -> usize {
        self.category.iter().filter(|&&c| c != Category::None).count()
    }
}

/// Per-angle two-sided curvature tests with the `N`-direction Bonferroni
/// threshold, followed by classification.
pub fn curvature_analysis(
    grid: &ImageGrid,
    ctx: &ScaleContext,
    alpha: f64,
    sigma: f64,
    opts: &CurvatureOptions,
) -> Result<CurvatureResult> {
    validate_angles(&opts.angles)?;
    let sums = MomentSums::compute(grid, ctx, Needs::Curvature, SumMethod::default())?;
    curvature_from_sums(&sums, alpha, sigma, opts)
}

pub fn curvature_from_sums(
    sums: &MomentSums,
    alpha: f64,
    sigma: f64,
    opts: &CurvatureOptions,
) -> Result<CurvatureResult> {
    validate_angles(&opts.angles)?;
    let ctx = &sums.ctx;
    let n = opts.angles.len();
    let threshold = ThresholdSpec::for_region(alpha, n, Order::Curvature, &ctx.region, ctx.h, Sidedness::TwoSided)?;
    let u = threshold.u_crit;
    let stats = opts
        .angles
        .iter()
        .map(|&theta| Ok(sums.stat_field(Direction::from_angle(theta), Order::Curvature, sigma)?.stats))
        .collect::<Result<Vec<_>>>()?;
    let (gr, gc) = ctx.region.dim();
    let signs = Array3::from_shape_fn((gr, gc, n), |(i, j, k)| {
        let t = stats[k][[i, j]];
        if t >= u {
            1
        } else if t <= -u {
            -1
        } else {
            0
        }
    });
    let category = Array2::from_shape_fn((gr, gc), |(i, j)| {
        let s: Vec<i8> = (0..n).map(|k| signs[[i, j, k]]).collect();
        classify_signs(&s)
    });
    Ok(CurvatureResult {
        region: ctx.region,
        angles: opts.angles.clone(),
        stats,
        signs,
        category,
        threshold,
        sigma_used: sigma,
    })
}
