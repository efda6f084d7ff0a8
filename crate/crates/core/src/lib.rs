//! Multiscale significance testing for 2-D images.
//!
//! Local-quadratic Gaussian kernel estimators give per-pixel directional
//! slope and curvature statistics at each bandwidth. Critical values come
//! from the Gumbel limit of the maximum of a smooth stationary Gaussian
//! field, which controls the family-wise error over all pixels of the
//! interior grid and, through a Bonferroni budget, over several directions.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] — images, interior regions, per-pixel statistic fields.
//! * [`kernel`] — Gaussian weights, moment sums, derivative estimators and
//!   standardized statistics.
//! * [`evt`] — normal CDF, norming constants, extremal-index bounds and
//!   critical values.
//! * [`corr_oracle`] — closed-form autocorrelations and moment integrals,
//!   used to cross-check the empirical behaviour of the statistics.
//! * [`inference`] — joint slope test, per-angle curvature test with
//!   curvature classification, and gradient streamlines.
//! * [`sim`] — seeded noise and phantom generators and the Type-I / power
//!   Monte-Carlo harness.
//!
//! ```no_run
//! use sss_core::grid::{load_image, ScaleContext};
//! use sss_core::inference::{curvature_analysis, CurvatureOptions};
//! use sss_core::{Category, ImageFormat};
//!
//! let grid = load_image("image.csv".as_ref(), ImageFormat::Csv)?;
//! let ctx = ScaleContext::for_grid(&grid, 4.0)?;
//! let res = curvature_analysis(&grid, &ctx, 0.05, 1.0, &CurvatureOptions::default())?;
//! println!("{} peaks", res.count(Category::Peak));
//! # Ok::<(), sss_core::Error>(())
//! ```

pub mod corr_oracle;
pub mod error;
pub mod evt;
pub mod grid;
pub mod inference;
pub mod kernel;
pub mod sim;

pub use error::{Error, Result};
pub use evt::{Sidedness, ThresholdSpec};
pub use grid::{Direction, ImageFormat, ImageGrid, InteriorRegion, Order, ScaleContext, StatField};
pub use inference::{Category, CurvatureResult, SlopeResult, Streamline, Termination};
pub use kernel::{DerivativeEstimates, KernelWeights, MomentSums, SumMethod};
