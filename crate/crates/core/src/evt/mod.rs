//! Gumbel-limit thresholds for the maximum of standardized statistic
//! fields.
//!
//! For a `g x g` field the maximum is compared against
//! `u(x) = x / a + b` with the norming constants of `n = g²`. The extremal
//! constant `ϑ` enters only through its closed-form upper bound, which
//! makes the resulting threshold conservative.

mod normal;

use libm::erf;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{InteriorRegion, Order};

pub use normal::{normal_cdf, normal_cdf_inv, normal_pdf};

/// Norming constants `(a_n, b_n)`:
/// `a = sqrt(2 ln n)`, `b = a - (ln ln n + ln 4π) / (2a)`.
pub fn norming_constants(n: u64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::param(format!("norming constants need n >= 3, got {n}")));
    }
    let l = (n as f64).ln();
    let a = (2.0 * l).sqrt();
    let b = a - 0.5 / a * (l.ln() + (4.0 * std::f64::consts::PI).ln());
    Ok((a, b))
}

/// `u_n(x) = x / a_n + b_n`.
pub fn gumbel_level(n: u64, x: f64) -> Result<f64> {
    let (a, b) = norming_constants(n)?;
    Ok(x / a + b)
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("scale constant C must be positive, got {c}")))
    }
}

/// Upper bound `2Φ(C) - 1` on the extremal constant of a slope field.
pub fn theta_bound_slope(c: f64) -> Result<f64> {
    check_c(c)?;
    // 2Φ(z) - 1 = erf(z / √2), without cancellation near zero
    Ok(erf(c / std::f64::consts::SQRT_2))
}

/// Upper bound `2Φ(√6 C / 2) - 1` on the extremal constant of a curvature
/// field.
pub fn theta_bound_curvature(c: f64) -> Result<f64> {
    check_c(c)?;
    Ok(erf(6f64.sqrt() * c / 2.0 / std::f64::consts::SQRT_2))
}

pub fn theta_bound(order: Order, c: f64) -> Result<f64> {
    match order {
        Order::Slope => theta_bound_slope(c),
        Order::Curvature => theta_bound_curvature(c),
    }
}

/// Whether both tails of each directional statistic are tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    #[default]
    TwoSided,
    OneSided,
}

impl Sidedness {
    fn tails(self) -> f64 {
        match self {
            Sidedness::TwoSided => 2.0,
            Sidedness::OneSided => 1.0,
        }
    }
}

/// Two-sided critical value for `N` directions; see
/// [`critical_value_sided`].
pub fn critical_value(alpha: f64, n_dirs: usize, g: usize, theta: f64) -> Result<(f64, f64)> {
    critical_value_sided(alpha, n_dirs, g, theta, Sidedness::TwoSided)
}

/// Solves `2N exp(-ϑ e^{-x}) - (2N - 1) = 1 - α` for `x` and returns
/// `(x, u_{g²}(x))`. With one-sided testing the budget is `N` instead of
/// `2N`.
pub fn critical_value_sided(alpha: f64, n_dirs: usize, g: usize, theta: f64, sided: Sidedness) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n_dirs == 0 {
        return Err(Error::param("at least one direction is required"));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::param(format!("theta must lie in (0, 1], got {theta}")));
    }
    if g < 3 {
        return Err(Error::param(format!("interior size g must be >= 3, got {g}")));
    }
    let p = alpha / (sided.tails() * n_dirs as f64);
    // exp(-ϑ e^{-x}) = 1 - p  =>  ϑ e^{-x} = -ln(1 - p)
    let x = -(-(-p).ln_1p() / theta).ln();
    let n = (g as u64) * (g as u64);
    let u = gumbel_level(n, x)?;
    if !u.is_finite() {
        return Err(Error::Numerical(format!("critical value is not finite (x = {x})")));
    }
    Ok((x, u))
}

/// Family-wise coverage implied by `x`:
/// `2N exp(-ϑ e^{-x}) - (2N - 1)` (budget `N` when one-sided).
pub fn bonferroni_coverage(x: f64, n_dirs: usize, theta: f64, sided: Sidedness) -> f64 {
    let k = sided.tails() * n_dirs as f64;
    k * (-theta * (-x).exp()).exp() - (k - 1.0)
}

/// Fully resolved threshold for one bandwidth and test family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub alpha: f64,
    pub n_directions: usize,
    pub order: Order,
    pub sidedness: Sidedness,
    /// Side length used for `n = g²`.
    pub g: usize,
    pub g_rows: usize,
    pub g_cols: usize,
    /// True when `g` is `floor(sqrt(g_rows * g_cols))` of a non-square
    /// interior.
    pub g_from_non_square: bool,
    pub h: f64,
    /// `sqrt(ln g) / h`.
    pub c: f64,
    pub theta_bound: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub x_quantile: f64,
    pub u_crit: f64,
}

impl ThresholdSpec {
    pub fn resolve(
        alpha: f64,
        n_directions: usize,
        order: Order,
        g: usize,
        h: f64,
        sidedness: Sidedness,
    ) -> Result<Self> {
        Self::build(alpha, n_directions, order, (g, g, g), h, sidedness)
    }

    pub fn for_region(
        alpha: f64,
        n_directions: usize,
        order: Order,
        region: &InteriorRegion,
        h: f64,
        sidedness: Sidedness,
    ) -> Result<Self> {
        Self::build(alpha, n_directions, order, (region.g(), region.g_rows, region.g_cols), h, sidedness)
    }

    fn build(
        alpha: f64,
        n_directions: usize,
        order: Order,
        (g, g_rows, g_cols): (usize, usize, usize),
        h: f64,
        sidedness: Sidedness,
    ) -> Result<Self> {
        crate::grid::check_bandwidth(h)?;
        if g < 3 {
            return Err(Error::param(format!("interior size g must be >= 3, got {g}")));
        }
        let c = (g as f64).ln().sqrt() / h;
        let theta_bound = theta_bound(order, c)?;
        if theta_bound <= 0.0 {
            return Err(Error::Numerical(format!("theta bound underflowed for C = {c}")));
        }
        let (x_quantile, u_crit) = critical_value_sided(alpha, n_directions, g, theta_bound, sidedness)?;
        let (a_n, b_n) = norming_constants((g as u64) * (g as u64))?;
        Ok(ThresholdSpec {
            alpha,
            n_directions,
            order,
            sidedness,
            g,
            g_rows,
            g_cols,
            g_from_non_square: g_rows != g_cols,
            h,
            c,
            theta_bound,
            a_n,
            b_n,
            x_quantile,
            u_crit,
        })
    }
}
