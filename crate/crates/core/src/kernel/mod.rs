//! Gaussian kernel machinery.
//!
//! `K_h(dx, dy) = exp(-(dx² + dy²) / 2h²) / (2πh²)` factorises into two
//! 1-D profiles, so every kernel-weighted data sum used here can be
//! computed either as a direct truncated double sum or by two separable
//! passes. Both are exact over the same square support `[-r, r]²`.

mod moments;
mod sigma;

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{check_bandwidth, Direction, ImageGrid, Order, ScaleContext, StatField};

pub use moments::{estimate_derivatives, DerivativeEstimates, MomentSums, Needs, SumMethod};
pub use sigma::{estimate_sigma, resolve_sigma, SigmaSource};

/// Bivariate isotropic Gaussian density with standard deviation `h`.
pub fn kernel_weight(dx: f64, dy: f64, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    Ok(kernel_unchecked(dx, dy, h))
}

#[inline]
fn kernel_unchecked(dx: f64, dy: f64, h: f64) -> f64 {
    let h2 = h * h;
    (-(dx * dx + dy * dy) / (2.0 * h2)).exp() / (2.0 * PI * h2)
}

/// Slope weight `(u dx + v dy) K_h(dx, dy)`.
pub fn slope_weight(dx: f64, dy: f64, dir: Direction, h: f64) -> Result<f64> {
    Ok(dir.project(dx, dy) * kernel_weight(dx, dy, h)?)
}

/// Curvature weight `((u dx + v dy)² - h²) K_h(dx, dy)`.
pub fn curvature_weight(dx: f64, dy: f64, dir: Direction, h: f64) -> Result<f64> {
    let p = dir.project(dx, dy);
    Ok((p * p - h * h) * kernel_weight(dx, dy, h)?)
}

/// Weight of the given order.
pub fn directional_weight(dx: f64, dy: f64, dir: Direction, order: Order, h: f64) -> Result<f64> {
    match order {
        Order::Slope => slope_weight(dx, dy, dir, h),
        Order::Curvature => curvature_weight(dx, dy, dir, h),
    }
}

/// Tabulated kernel over `[-radius, radius]²`.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    pub h: f64,
    pub radius: usize,
    table: Array2<f64>,
}

impl KernelWeights {
    pub fn new(h: f64, radius: usize) -> Result<Self> {
        check_bandwidth(h)?;
        if radius == 0 {
            return Err(Error::param("kernel radius must be at least 1"));
        }
        let r = radius as isize;
        let n = 2 * radius + 1;
        let table = Array2::from_shape_fn((n, n), |(a, b)| {
            kernel_unchecked((a as isize - r) as f64, (b as isize - r) as f64, h)
        });
        Ok(KernelWeights { h, radius, table })
    }

    pub fn get(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        self.table[[(dx + r) as usize, (dy + r) as usize]]
    }

    pub fn table(&self) -> &Array2<f64> {
        &self.table
    }

    /// Iterates `(dx, dy, K)` over the support.
    pub fn iter(&self) -> impl Iterator<Item = (isize, isize, f64)> + '_ {
        let r = self.radius as isize;
        self.table.indexed_iter().map(move |((a, b), &k)| (a as isize - r, b as isize - r, k))
    }
}

/// `G_mk = Σ dx^m dy^k K_h(dx, dy)` over the truncated lattice.
pub fn moment_sum(m: u32, k: u32, h: f64, radius: usize) -> Result<f64> {
    if m > 4 || k > 4 {
        return Err(Error::param(format!("moment orders must be in 0..=4, got ({m}, {k})")));
    }
    let kw = KernelWeights::new(h, radius)?;
    let r = radius as isize;
    let term = |dx: isize, dy: isize| (dx as f64).powi(m as i32) * (dy as f64).powi(k as i32) * kw.get(dx, dy);
    // pair ±d so odd moments cancel exactly
    let row = |dx: isize| (1..=r).fold(term(dx, 0), |s, dy| s + (term(dx, dy) + term(dx, -dy)));
    Ok((1..=r).fold(row(0), |s, dx| s + (row(dx) + row(-dx))))
}

/// `Σ W²` of the directional weights over the truncated support.
pub fn weight_energy(dir: Direction, order: Order, h: f64, radius: usize) -> Result<f64> {
    let kw = KernelWeights::new(h, radius)?;
    let h2 = h * h;
    Ok(kw
        .iter()
        .map(|(dx, dy, k)| {
            let p = dir.project(dx as f64, dy as f64);
            let w = match order {
                Order::Slope => p * k,
                Order::Curvature => (p * p - h2) * k,
            };
            w * w
        })
        .sum())
}

/// Per-pixel `Σ W·Y / (σ sqrt(Σ W²))` for one direction and order.
pub fn standardized_stat_field(
    grid: &ImageGrid,
    ctx: &ScaleContext,
    dir: Direction,
    order: Order,
    sigma: f64,
) -> Result<StatField> {
    let needs = match order {
        Order::Slope => Needs::Slope,
        Order::Curvature => Needs::Curvature,
    };
    let sums = MomentSums::compute(grid, ctx, needs, SumMethod::default())?;
    sums.stat_field(dir, order, sigma)
}
