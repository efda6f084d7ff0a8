use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Median of `|N(0, 1)|`.
const MAD_NORMAL: f64 = 0.674489750196082;

/// Noise level: a known value, or the first-difference MAD estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum SigmaSource {
    Known(f64),
    Estimate,
}

impl Default for SigmaSource {
    fn default() -> Self {
        SigmaSource::Known(1.0)
    }
}

/// Robust noise scale from horizontal first differences:
/// `median |Y[i, j+1] - Y[i, j]| / (sqrt(2) * 0.6745)`.
///
/// Returns 0 for images with no variation along rows.
pub fn estimate_sigma(grid: &ImageGrid) -> Result<f64> {
    if grid.cols() < 2 {
        return Err(Error::param("sigma estimation needs at least 2 columns"));
    }
    let mut diffs: Vec<f64> = grid
        .values()
        .rows()
        .into_iter()
        .flat_map(|row| row.windows(2).into_iter().map(|w| (w[1] - w[0]).abs()).collect::<Vec<_>>())
        .collect();
    let n = diffs.len();
    let cmp = |a: &f64, b: &f64| a.total_cmp(b);
    let (_, &mut upper, _) = diffs.select_nth_unstable_by(n / 2, cmp);
    let median = if n % 2 == 1 {
        upper
    } else {
        let lower = diffs[..n / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    Ok(median / (std::f64::consts::SQRT_2 * MAD_NORMAL))
}

/// Resolves the noise level, rejecting non-positive values.
pub fn resolve_sigma(source: SigmaSource, grid: &ImageGrid) -> Result<f64> {
    let sigma = match source {
        SigmaSource::Known(s) => s,
        SigmaSource::Estimate => estimate_sigma(grid)?,
    };
    if sigma > 0.0 && sigma.is_finite() {
        Ok(sigma)
    } else {
        Err(Error::param(format!("noise level {sigma} is not positive; supply a known sigma (e.g. --sigma known:1.0)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_is_zero_and_rejected() {
        let g = ImageGrid::from_rows(3, 3, vec![2.0; 9]).unwrap();
        assert_eq!(estimate_sigma(&g).unwrap(), 0.0);
        let err = resolve_sigma(SigmaSource::Estimate, &g).unwrap_err();
        assert!(err.to_string().contains("known sigma"));
    }

    #[test]
    fn median_even_count() {
        // diffs 1, 3 -> median 2
        let g = ImageGrid::from_rows(2, 2, vec![0.0, 1.0, 0.0, 3.0]).unwrap();
        let s = estimate_sigma(&g).unwrap();
        assert!((s - 2.0 / (std::f64::consts::SQRT_2 * MAD_NORMAL)).abs() < 1e-15);
    }

    #[test]
    fn needs_two_columns() {
        let g = ImageGrid::from_rows(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(estimate_sigma(&g).is_err());
    }
}
