//! Joint slope significance, per-angle curvature significance with
//! curvature classification, and streamlines along significant gradients.

mod curvature;
mod slope;
mod streamline;

pub use curvature::{
    classify_signs, curvature_analysis, curvature_from_sums, validate_angles, Category, CurvatureOptions,
    CurvatureResult, SIX_ANGLES, TABLE4_ANGLES,
};
pub use slope::{slope_analysis, slope_from_sums, SlopeOptions, SlopeResult};
pub use streamline::{trace_streamlines, Streamline, StreamlineParams, Termination};
