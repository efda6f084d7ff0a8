use sss_core::evt::{Sidedness, ThresholdSpec};
use sss_core::grid::Order;

use crate::args::{OrderArg, ThresholdArgs};
use crate::error::CliResult;
use crate::output::to_json;

pub fn threshold(args: &ThresholdArgs) -> CliResult<()> {
    let order = match args.order {
        OrderArg::Slope => Order::Slope,
        OrderArg::Curvature => Order::Curvature,
    };
    let sided = if args.one_sided { Sidedness::OneSided } else { Sidedness::TwoSided };
    let spec = ThresholdSpec::resolve(args.alpha, args.n, order, args.g, args.h, sided)?;
    super::emit(&to_json(&spec), None)
}
