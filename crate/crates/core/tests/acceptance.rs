//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p sss-core --test acceptance`. Pass criterion
//! numbers (e.g. `4 5`) to run a subset.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sss_core::corr_oracle::{compare_field, f_moment};
use sss_core::evt::{bonferroni_coverage, critical_value, Sidedness};
use sss_core::grid::{Direction, ImageGrid, Order, ScaleContext};
use sss_core::inference::{curvature_analysis, CurvatureOptions, TABLE4_ANGLES};
use sss_core::kernel::{moment_sum, MomentSums, Needs, SumMethod};
use sss_core::sim::{
    generate_noise, power_experiment, type1_experiment, Bump, PowerConfig, SimConfig, SimMode, SimResult,
};

const BANDWIDTHS: [f64; 4] = [2.0, 4.0, 8.0, 16.0];
const REPLICATES: usize = 200;
const NOMINAL: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn null_config(mode: SimMode, seed: u64) -> SimConfig {
    SimConfig {
        replicates: REPLICATES,
        rows: 280,
        cols: 280,
        margin_override: Some(40),
        bandwidths: BANDWIDTHS.to_vec(),
        alpha: 0.05,
        master_seed: seed,
        mode,
        ..Default::default()
    }
}

/// Every cell consistent with a rate at or below nominal (exact binomial
/// check, never above 0.09 outright), and each published count out of
/// 1000 inside our exact interval. The 1% error budget is split across the
/// cells of the table so a correct implementation fails with probability
/// at most 1%, not 1% per cell.
fn check_type1(res: &SimResult, published: &[(Option<f64>, [usize; 4])]) -> Outcome {
    let mut pass = true;
    let mut over = 0;
    let mut cells = 0;
    let mut notes = Vec::new();
    let level = 1.0 - 0.01 / (published.len() * BANDWIDTHS.len()) as f64;
    for (angle, counts) in published {
        for (h, &count) in BANDWIDTHS.iter().zip(counts) {
            let cell = res.cell(*h, *angle).expect("cell present");
            let (lo, hi) = cell.ci(level);
            let published = count as f64 / 1000.0;
            let controlled = lo <= NOMINAL && cell.rate <= 0.09;
            let ok = controlled && published >= lo && published <= hi;
            pass &= ok;
            cells += 1;
            over += (cell.rate > NOMINAL) as usize;
            let a = angle.map_or("joint".to_string(), |a| format!("{:+.4}", a));
            notes.push(format!(
                "{}{a}/h{h}: {}/{} (CI [{lo:.3},{hi:.3}], published {published:.3})",
                if ok { "" } else { "!" },
                cell.exceed_count,
                cell.replicates
            ));
        }
    }
    outcome(
        pass,
        format!(
            "{over}/{cells} cells above {NOMINAL} point rate; CI level {:.4}%; {}",
            level * 100.0,
            notes.join("; ")
        ),
    )
}

fn ac1() -> Outcome {
    let res = type1_experiment(&null_config(SimMode::SlopePerAngle, 101)).unwrap();
    check_type1(&res, &[(Some(0.0), [35, 12, 10, 5]), (Some(FRAC_PI_2), [31, 24, 11, 6])])
}

fn ac2() -> Outcome {
    let res = type1_experiment(&null_config(SimMode::SlopeJoint, 202)).unwrap();
    check_type1(&res, &[(None, [34, 26, 16, 6])])
}

fn ac3() -> Outcome {
    let per = type1_experiment(&null_config(SimMode::CurvaturePerAngle, 303)).unwrap();
    let table4: [[usize; 4]; 6] =
        [[35, 23, 16, 8], [33, 20, 14, 7], [35, 12, 11, 3], [30, 16, 12, 4], [37, 19, 7, 3], [32, 17, 9, 5]];
    let published: Vec<_> = TABLE4_ANGLES.iter().zip(table4).map(|(&a, c)| (Some(a), c)).collect();
    let a = check_type1(&per, &published);
    let joint = type1_experiment(&null_config(SimMode::CurvatureJoint, 304)).unwrap();
    let b = check_type1(&joint, &[(None, [22, 17, 11, 5])]);
    outcome(a.pass && b.pass, format!("per-angle: {} | joint: {}", a.detail, b.detail))
}

fn ac4() -> Outcome {
    let grid = generate_noise(400, 400, 404).unwrap();
    let lags = [(1, 0), (0, 1), (1, 1), (2, 0)];
    let mut worst: f64 = 0.0;
    for h in [4.0, 8.0] {
        let ctx = ScaleContext::for_grid(&grid, h).unwrap();
        let sums = MomentSums::compute(&grid, &ctx, Needs::All, SumMethod::Separable).unwrap();
        for theta in [0.0, FRAC_PI_2, PI / 4.0] {
            for order in [Order::Slope, Order::Curvature] {
                let field = sums.stat_field(Direction::from_angle(theta), order, 1.0).unwrap();
                for row in compare_field(&field, h, theta, &lags).unwrap() {
                    worst = worst.max(row.abs_diff());
                }
            }
        }
    }
    outcome(worst < 0.03, format!("max |empirical - analytic| = {worst:.4} (tol 0.03)"))
}

fn ac5() -> Outcome {
    let mut worst: f64 = 0.0;
    for h in BANDWIDTHS {
        let r = (6.0 * h) as usize;
        let h2 = h * h;
        let h4 = h2 * h2;
        for (m, k, target) in [(0, 0, 1.0), (2, 0, h2), (0, 2, h2), (2, 2, h4), (4, 0, 3.0 * h4), (0, 4, 3.0 * h4)] {
            let g = moment_sum(m, k, h, r).unwrap();
            worst = worst.max(((g - target) / target).abs());
        }
    }
    outcome(worst < 1e-4, format!("max relative error = {worst:.2e} (tol 1e-4)"))
}

fn ac6() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in [0.0, 1.5, 4.0] {
        for k in 0..5u32 {
            for h in [0.75, 1.5, 3.0] {
                let closed = f_moment(i, k, h).unwrap();
                let quad = common::f_moment_quadrature(i, k as i32, h);
                worst = worst.max((closed - quad).abs());
            }
        }
    }
    outcome(worst < 1e-9, format!("max |closed - quadrature| = {worst:.2e} over 45 points (tol 1e-9)"))
}

fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let noise = generate_noise(90, 90, 707).unwrap();
    let ctx = ScaleContext::for_grid(&noise, 3.0).unwrap();
    let direct = MomentSums::compute(&noise, &ctx, Needs::All, SumMethod::Direct).unwrap();
    let fast = MomentSums::compute(&noise, &ctx, Needs::All, SumMethod::Separable).unwrap();
    let (gr, gc) = ctx.region.dim();
    let mut worst_eq: f64 = 0.0;
    for _ in 0..20 {
        let (i, j) = (rng.random_range(0..gr), rng.random_range(0..gc));
        for (a, b) in [
            (&direct.h00, &fast.h00),
            (&direct.h10, &fast.h10),
            (&direct.h01, &fast.h01),
            (&direct.h20, &fast.h20),
            (&direct.h11, &fast.h11),
            (&direct.h02, &fast.h02),
        ] {
            let (x, y) = (a[[i, j]], b[[i, j]]);
            worst_eq = worst_eq.max((x - y).abs() / x.abs().max(1.0));
        }
    }

    // Q = a + b i + c j + d i² + e ij + f j²; a11 multiplies 2 dx dy.
    let (a, b, c, d, e, f) = (2.0, 0.3, -0.7, 0.05, -0.04, 0.02);
    let q = ImageGrid::new(ndarray::Array2::from_shape_fn((80, 80), |(i, j)| {
        let (x, y) = (i as f64, j as f64);
        a + b * x + c * y + d * x * x + e * x * y + f * y * y
    }))
    .unwrap();
    let h = 3.0;
    let qctx = ScaleContext::new(80, 80, h, 6.0, None).unwrap();
    let est = MomentSums::compute(&q, &qctx, Needs::All, SumMethod::Separable).unwrap().derivatives().unwrap();
    let mut worst_rep: f64 = 0.0;
    let m = qctx.region.margin as f64;
    for ((i, j), _) in est.a10.indexed_iter().step_by(97) {
        let (x, y) = (i as f64 + m, j as f64 + m);
        let truth = [b + 2.0 * d * x + e * y, c + e * x + 2.0 * f * y, d, e / 2.0, f];
        let got = [est.a10[[i, j]], est.a01[[i, j]], est.a20[[i, j]], est.a11[[i, j]], est.a02[[i, j]]];
        for (t, g) in truth.iter().zip(got) {
            worst_rep = worst_rep.max((g - t).abs() / t.abs());
        }
    }
    outcome(
        worst_eq <= 1e-10 && worst_rep <= 1e-3,
        format!("separable vs direct {worst_eq:.2e} (tol 1e-10); quadratic reproduction {worst_rep:.2e} (tol 1e-3)"),
    )
}

fn ac8() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for &alpha in &[0.01, 0.05, 0.1, 0.3] {
        for n in [1, 2, 6, 12] {
            for g in [16, 200, 1000] {
                for theta in [0.05, 0.4352, 0.9, 1.0] {
                    let (x, u) = critical_value(alpha, n, g, theta).unwrap();
                    let cov = bonferroni_coverage(x, n, theta, Sidedness::TwoSided);
                    worst = worst.max((cov - (1.0 - alpha)).abs());
                    if alpha < 0.3 {
                        monotone &= critical_value(alpha * 2.0, n, g, theta).unwrap().1 < u;
                    }
                    monotone &= critical_value(alpha, n + 1, g, theta).unwrap().1 > u;
                    if theta < 1.0 {
                        monotone &= critical_value(alpha, n, g, theta * 0.9).unwrap().1 < u;
                        monotone &= critical_value(alpha, n, g, theta * 0.9).unwrap().0 < x;
                    }
                }
            }
        }
    }
    outcome(
        worst <= 1e-10 && monotone,
        format!("max re-substitution error {worst:.2e} (tol 1e-10); monotone in alpha, N, theta: {monotone}"),
    )
}

fn ac9() -> Outcome {
    let seeds = 100;
    let mut clean = 0;
    for seed in 0..seeds {
        let grid = generate_noise(64, 64, 9000 + seed).unwrap();
        let all_none = BANDWIDTHS.iter().all(|&h| {
            let ctx = ScaleContext::with_margin(&grid, h, Some(16)).unwrap();
            curvature_analysis(&grid, &ctx, 0.05, 1.0, &CurvatureOptions::default()).unwrap().non_none() == 0
        });
        clean += all_none as usize;
    }
    outcome(clean >= 95, format!("{clean}/{seeds} seeds all-None at every h (need >= 95)"))
}

fn ac10() -> Outcome {
    let bumps = [
        Bump { center: (64.0, 40.0), amplitude: 10.0, width: 8.0 },
        Bump { center: (64.0, 88.0), amplitude: -10.0, width: 8.0 },
    ];
    let cfg = PowerConfig { replicates: 100, master_seed: 1010, ..Default::default() };
    let cell = &power_experiment(&bumps, &cfg).unwrap()[0];
    outcome(
        cell.all_detected >= 95,
        format!(
            "peak and hole both found in {}/100 seeds (peak {}, hole {}; need >= 95)",
            cell.all_detected, cell.bumps[0].detections, cell.bumps[1].detections
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "Type-I slope per-angle", ac1),
        (2, "Type-I slope joint", ac2),
        (3, "Type-I curvature per-angle and joint", ac3),
        (4, "correlation oracle", ac4),
        (5, "kernel moment approximations", ac5),
        (6, "moment-function quadrature oracle", ac6),
        (7, "estimator equivalence and reproduction", ac7),
        (8, "threshold algebra", ac8),
        (9, "pure-noise specificity", ac9),
        (10, "two-bump power", ac10),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] AC{id} {name} ({:.1}s): {}", t.elapsed().as_secs_f64(), o.detail);
        failed += !o.pass as usize;
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
