use std::fmt::Write as _;

use sss_core::corr_oracle::compare_field;
use sss_core::grid::{Direction, Order, ScaleContext};
use sss_core::kernel::{MomentSums, Needs, SumMethod};
use sss_core::sim::generate_noise;

use crate::args::OracleArgs;
use crate::error::{CliError, CliResult};
use crate::output::fmt_f64;

pub fn oracle(args: &OracleArgs) -> CliResult<()> {
    if args.lags.is_empty() {
        return Err(CliError::usage("at least one lag is required"));
    }
    let grid = generate_noise(args.size, args.size, args.seed)?;
    let lags: Vec<_> = args.lags.iter().map(|l| (l.0, l.1)).collect();
    let mut csv = String::from("order,h,theta,lag_i,lag_j,analytic,empirical,abs_diff\n");
    for &h in &args.bandwidths {
        let ctx = ScaleContext::for_grid(&grid, h)?;
        let sums = MomentSums::compute(&grid, &ctx, Needs::All, SumMethod::Separable)?;
        for theta in args.angles.radians() {
            for order in [Order::Slope, Order::Curvature] {
                let field = sums.stat_field(Direction::from_angle(theta), order, 1.0)?;
                for row in compare_field(&field, h, theta, &lags)? {
                    let _ = writeln!(
                        csv,
                        "{order},{},{},{},{},{},{},{}",
                        fmt_f64(h),
                        fmt_f64(theta),
                        row.lag_i,
                        row.lag_j,
                        fmt_f64(row.analytic),
                        fmt_f64(row.empirical),
                        fmt_f64(row.abs_diff())
                    );
                }
            }
        }
    }
    super::emit(&csv, args.out.as_deref())
}
