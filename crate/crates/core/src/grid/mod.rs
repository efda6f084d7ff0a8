//! Images, evaluable interior regions and per-pixel statistic fields.
//!
//! Pixel `(i, j)` is row `i`, column `j`. Offsets `dx` run along rows
//! (the `i` axis) and `dy` along columns, so direction `(u, v) = (1, 0)`
//! (angle 0) is a derivative in the row-index direction.

mod io;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_image, save_csv, to_csv_string, ImageFormat};

/// Default kernel truncation radius in units of `h`.
pub const DEFAULT_SUPPORT_FACTOR: f64 = 4.0;

/// Rectangular grid of finite intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    values: Array2<f64>,
    spacing: f64,
}

impl ImageGrid {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        Self::with_spacing(values, 1.0)
    }

    pub fn with_spacing(values: Array2<f64>, spacing: f64) -> Result<Self> {
        let (rows, cols) = values.dim();
        if rows == 0 {
            return Err(Error::Parse("no rows".into()));
        }
        if cols == 0 {
            return Err(Error::Parse("no columns".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::param(format!("spacing must be positive, got {spacing}")));
        }
        if let Some(((i, j), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Parse(format!("non-finite value {v} at row {i}, column {j}")));
        }
        Ok(ImageGrid { values, spacing })
    }

    /// Builds a grid from row-major data.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} values supplied for a {rows}x{cols} grid", data.len())));
        }
        let values = Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(Array2::zeros((rows, cols)))
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Returns `c * self`, keeping the spacing.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::with_spacing(self.values.mapv(|v| v * c), self.spacing)
    }
}

/// Pixels far enough from the border that the truncated kernel fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteriorRegion {
    pub rows: usize,
    pub cols: usize,
    pub margin: usize,
    pub g_rows: usize,
    pub g_cols: usize,
}

impl InteriorRegion {
    pub fn with_margin(rows: usize, cols: usize, margin: usize) -> Result<Self> {
        let min = 2 * margin + 1;
        if rows < min || cols < min {
            return Err(Error::TooSmall { rows, cols, margin, min });
        }
        Ok(InteriorRegion { rows, cols, margin, g_rows: rows - 2 * margin, g_cols: cols - 2 * margin })
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.g_rows, self.g_cols)
    }

    pub fn len(&self) -> usize {
        self.g_rows * self.g_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_square(&self) -> bool {
        self.g_rows == self.g_cols
    }

    /// Effective side length used by the extreme-value thresholds,
    /// `floor(sqrt(g_rows * g_cols))`.
    pub fn g(&self) -> usize {
        let n = self.g_rows * self.g_cols;
        let mut g = (n as f64).sqrt() as usize;
        while (g + 1) * (g + 1) <= n {
            g += 1;
        }
        while g * g > n {
            g -= 1;
        }
        g
    }

    /// Image coordinates of interior pixel `(i, j)`.
    pub fn to_image(&self, i: usize, j: usize) -> (usize, usize) {
        (i + self.margin, j + self.margin)
    }
}

/// Interior region with `margin = ceil(support_factor * h)`.
pub fn interior(grid: &ImageGrid, h: f64, support_factor: f64) -> Result<InteriorRegion> {
    check_bandwidth(h)?;
    if !(support_factor >= 1.0 && support_factor.is_finite()) {
        return Err(Error::param(format!("support factor must be >= 1, got {support_factor}")));
    }
    let margin = (support_factor * h).ceil() as usize;
    InteriorRegion::with_margin(grid.rows(), grid.cols(), margin)
}

/// Interior region with an explicit margin.
pub fn interior_with_margin(grid: &ImageGrid, margin: usize) -> Result<InteriorRegion> {
    InteriorRegion::with_margin(grid.rows(), grid.cols(), margin)
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("bandwidth must be positive, got {h}")))
    }
}

/// Everything that depends on the bandwidth alone: `h`, the kernel
/// truncation radius and the interior region.
///
/// The radius is `ceil(support_factor * h)` capped at the margin, so an
/// explicit narrow margin (e.g. 40 pixels on a 280 grid at `h = 16`)
/// truncates the kernel instead of reading outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleContext {
    pub h: f64,
    pub radius: usize,
    pub region: InteriorRegion,
}

impl ScaleContext {
    pub fn new(rows: usize, cols: usize, h: f64, support_factor: f64, margin_override: Option<usize>) -> Result<Self> {
        check_bandwidth(h)?;
        if !(support_factor >= 1.0 && support_factor.is_finite()) {
            return Err(Error::param(format!("support factor must be >= 1, got {support_factor}")));
        }
        let full = (support_factor * h).ceil() as usize;
        let margin = margin_override.unwrap_or(full);
        let radius = full.min(margin);
        if radius == 0 {
            return Err(Error::param("kernel radius is zero; margin must be at least 1"));
        }
        let region = InteriorRegion::with_margin(rows, cols, margin)?;
        Ok(ScaleContext { h, radius, region })
    }

    /// Default truncation (`4h`) and margin equal to the radius.
    pub fn for_grid(grid: &ImageGrid, h: f64) -> Result<Self> {
        Self::new(grid.rows(), grid.cols(), h, DEFAULT_SUPPORT_FACTOR, None)
    }

    pub fn with_margin(grid: &ImageGrid, h: f64, margin: Option<usize>) -> Result<Self> {
        Self::new(grid.rows(), grid.cols(), h, DEFAULT_SUPPORT_FACTOR, margin)
    }

    pub fn g(&self) -> usize {
        self.region.g()
    }

    /// `C = sqrt(ln g) / h`.
    pub fn c(&self) -> f64 {
        (self.g() as f64).ln().sqrt() / self.h
    }

    pub(crate) fn check_grid(&self, grid: &ImageGrid) -> Result<()> {
        if grid.rows() != self.region.rows || grid.cols() != self.region.cols {
            return Err(Error::Shape(format!(
                "scale context built for {}x{}, image is {}x{}",
                self.region.rows,
                self.region.cols,
                grid.rows(),
                grid.cols()
            )));
        }
        Ok(())
    }
}

/// Unit direction `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    u: f64,
    v: f64,
}

impl Direction {
    pub const ROW: Direction = Direction { u: 1.0, v: 0.0 };
    pub const COL: Direction = Direction { u: 0.0, v: 1.0 };

    pub fn new(u: f64, v: f64) -> Result<Self> {
        if (u * u + v * v - 1.0).abs() < 1e-12 {
            Ok(Direction { u, v })
        } else {
            Err(Error::param(format!("direction ({u}, {v}) is not a unit vector")))
        }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (v, u) = theta.sin_cos();
        Direction { u, v }
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// `u * dx + v * dy`.
    pub fn project(&self, dx: f64, dy: f64) -> f64 {
        self.u * dx + self.v * dy
    }
}

/// Derivative order of a directional statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Slope,
    Curvature,
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Order::Slope => "slope",
            Order::Curvature => "curvature",
        })
    }
}

/// Standardized statistics for one direction and order over the interior.
#[derive(Debug, Clone)]
pub struct StatField {
    pub region: InteriorRegion,
    pub direction: Direction,
    pub order: Order,
    pub stats: Array2<f64>,
    pub sigma_used: f64,
}

impl StatField {
    pub fn max_abs(&self) -> f64 {
        self.stats.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.stats.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blank(n: usize) -> ImageGrid {
        ImageGrid::zeros(n, n).unwrap()
    }

    #[test]
    fn rejects_non_finite() {
        let err = ImageGrid::from_rows(1, 2, vec![1.0, f64::NAN]).unwrap_err();
        assert!(err.to_string().contains("row 0, column 1"), "{err}");
    }

    #[test]
    fn interior_from_support_factor() {
        let r = interior(&blank(280), 16.0, 4.0).unwrap();
        assert_eq!(r.margin, 64);
        assert_eq!((r.g_rows, r.g_cols), (152, 152));
    }

    #[test]
    fn interior_margin_override() {
        let r = interior_with_margin(&blank(280), 40).unwrap();
        assert_eq!(r.g(), 200);
    }

    #[test]
    fn interior_too_small() {
        let err = interior(&blank(9), 4.0, 4.0).unwrap_err();
        assert!(matches!(err, Error::TooSmall { margin: 16, min: 33, .. }), "{err}");
        assert!(err.to_string().contains("33x33"));
    }

    #[test]
    fn interior_monotone_in_h() {
        let grid = blank(200);
        let mut last = usize::MAX;
        for h in [0.5, 1.0, 1.5, 2.0, 3.3, 4.0, 8.0, 16.0, 24.0] {
            let n = interior(&grid, h, 4.0).map(|r| r.len()).unwrap_or(0);
            assert!(n <= last);
            last = n;
        }
    }

    #[test]
    fn non_square_g_is_floor_geometric_mean() {
        let r = InteriorRegion::with_margin(30, 60, 5).unwrap();
        assert_eq!((r.g_rows, r.g_cols), (20, 50));
        assert_eq!(r.g(), 31); // sqrt(1000) = 31.6
        assert!(!r.is_square());
    }

    #[test]
    fn radius_capped_by_margin() {
        let ctx = ScaleContext::new(280, 280, 16.0, 4.0, Some(40)).unwrap();
        assert_eq!(ctx.radius, 40);
        assert_eq!(ctx.g(), 200);
        let ctx = ScaleContext::new(280, 280, 4.0, 4.0, Some(40)).unwrap();
        assert_eq!(ctx.radius, 16);
    }

    #[test]
    fn direction_checks() {
        assert!(Direction::new(0.6, 0.8).is_ok());
        assert!(Direction::new(0.6, 0.6).is_err());
        let d = Direction::from_angle(std::f64::consts::FRAC_PI_2);
        assert!((d.u() * d.u() + d.v() * d.v() - 1.0).abs() < 1e-12);
    }
}
