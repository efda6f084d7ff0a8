//! Closed-form lag correlations of the standardized statistic fields and
//! the 1-D moment integrals they are built from, plus empirical
//! counterparts for checking simulated fields against them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_bandwidth, Direction, Order, StatField};
use crate::kernel::KernelWeights;

/// Correlation between statistics at lag `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagCorrelation {
    pub lag: (i64, i64),
    pub direction: Direction,
    pub order: Order,
    pub rho: f64,
}

/// Slope-field correlation:
/// `(1 - (iu + jv)² / 2h²) exp(-(i² + j²) / 4h²)`.
pub fn rho_slope(i: f64, j: f64, dir: Direction, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let p = dir.project(i, j);
    Ok((1.0 - p * p / (2.0 * h * h)) * (-(i * i + j * j) / (4.0 * h * h)).exp())
}

/// Curvature-field correlation:
/// `(1 - (iu + jv)² / h² + (iu + jv)⁴ / 12h⁴) exp(-(i² + j²) / 4h²)`.
pub fn rho_curvature(i: f64, j: f64, dir: Direction, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let p2 = dir.project(i, j).powi(2);
    let h2 = h * h;
    Ok((1.0 - p2 / h2 + p2 * p2 / (12.0 * h2 * h2)) * (-(i * i + j * j) / (4.0 * h2)).exp())
}

pub fn rho(order: Order, i: f64, j: f64, dir: Direction, h: f64) -> Result<f64> {
    match order {
        Order::Slope => rho_slope(i, j, dir, h),
        Order::Curvature => rho_curvature(i, j, dir, h),
    }
}

pub fn lag_correlation(order: Order, lag: (i64, i64), dir: Direction, h: f64) -> Result<LagCorrelation> {
    let rho = rho(order, lag.0 as f64, lag.1 as f64, dir, h)?;
    Ok(LagCorrelation { lag, direction: dir, order, rho })
}

/// Closed form of
/// `F_i(k) = (1 / 2πh²) ∫ x^k exp(-((x - i)² + x²) / 2h²) dx`.
pub fn f_moment(i: f64, k: u32, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let h2 = h * h;
    let f0 = (-(i * i) / (4.0 * h2)).exp() / (2.0 * (std::f64::consts::PI * h2).sqrt());
    let factor = match k {
        0 => 1.0,
        1 => i / 2.0,
        2 => h2 / 2.0 + i * i / 4.0,
        3 => 3.0 * i * h2 / 4.0 + i.powi(3) / 8.0,
        4 => 3.0 * h2 * h2 / 4.0 + 3.0 * i * i * h2 / 4.0 + i.powi(4) / 16.0,
        _ => return Err(Error::param(format!("moment order must be in 0..=4, got {k}"))),
    };
    Ok(factor * f0)
}

/// Finite-lattice correlation between the angle-0 and angle-90 slope
/// statistics at the same pixel, `Σ dx dy K² / sqrt(Σ dx² K² Σ dy² K²)`.
/// Zero up to rounding on the symmetric truncated support.
pub fn cross_direction_corr_zero(h: f64, radius: usize) -> Result<f64> {
    let kw = KernelWeights::new(h, radius)?;
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (dx, dy, k) in kw.iter() {
        let (fx, fy) = (dx as f64 * k, dy as f64 * k);
        xy += fx * fy;
        xx += fx * fx;
        yy += fy * fy;
    }
    Ok(xy / (xx * yy).sqrt())
}

/// Pearson correlation between two equally shaped fields, with plug-in
/// (`1/n`) moments.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

/// Empirical correlation of `field` with itself shifted by `(di, dj)`,
/// over all interior pixel pairs that both exist.
pub fn empirical_lag_corr(field: &StatField, di: i64, dj: i64) -> Result<f64> {
    let (rows, cols) = field.stats.dim();
    let (adi, adj) = (di.unsigned_abs() as usize, dj.unsigned_abs() as usize);
    if adi >= rows || adj >= cols {
        return Err(Error::param(format!("lag ({di}, {dj}) exceeds field size {rows}x{cols}")));
    }
    let mut a = Vec::with_capacity((rows - adi) * (cols - adj));
    let mut b = Vec::with_capacity(a.capacity());
    for i in 0..rows - adi {
        for j in 0..cols - adj {
            let (i0, i1) = if di >= 0 { (i, i + adi) } else { (i + adi, i) };
            let (j0, j1) = if dj >= 0 { (j, j + adj) } else { (j + adj, j) };
            a.push(field.stats[[i0, j0]]);
            b.push(field.stats[[i1, j1]]);
        }
    }
    Ok(pearson(&a, &b))
}

/// One row of an analytic-versus-empirical comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct CorrRow {
    pub order: Order,
    pub h: f64,
    pub theta: f64,
    pub lag_i: i64,
    pub lag_j: i64,
    pub analytic: f64,
    pub empirical: f64,
}

impl CorrRow {
    pub fn abs_diff(&self) -> f64 {
        (self.analytic - self.empirical).abs()
    }
}

/// Compares empirical lag correlations of `field` with the closed forms.
pub fn compare_field(field: &StatField, h: f64, theta: f64, lags: &[(i64, i64)]) -> Result<Vec<CorrRow>> {
    lags.iter()
        .map(|&(i, j)| {
            Ok(CorrRow {
                order: field.order,
                h,
                theta,
                lag_i: i,
                lag_j: j,
                analytic: rho(field.order, i as f64, j as f64, field.direction, h)?,
                empirical: empirical_lag_corr(field, i, j)?,
            })
        })
        .collect()
}
