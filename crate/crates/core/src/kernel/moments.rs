use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;

use super::{weight_energy, KernelWeights};
use crate::error::{Error, Result};
use crate::grid::{Direction, ImageGrid, InteriorRegion, Order, ScaleContext, StatField};

/// How the kernel-weighted data sums `H_mk` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumMethod {
    /// Full `(2r+1)²` double sum per pixel.
    Direct,
    /// Row pass followed by a column pass with the 1-D profiles.
    #[default]
    Separable,
}

/// Which moment sums to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Needs {
    /// `H10`, `H01`.
    Slope,
    /// `H00`, `H20`, `H11`, `H02`.
    Curvature,
    All,
}

impl Needs {
    fn slope(self) -> bool {
        matches!(self, Needs::Slope | Needs::All)
    }

    fn curvature(self) -> bool {
        matches!(self, Needs::Curvature | Needs::All)
    }
}

/// Kernel-weighted data sums
/// `H_mk(i, j) = Σ Y(i+dx, j+dy) dx^m dy^k K_h(dx, dy)` over the interior.
///
/// Sums that were not requested are empty `0x0` arrays.
#[derive(Debug, Clone)]
pub struct MomentSums {
    pub ctx: ScaleContext,
    pub h00: Array2<f64>,
    pub h10: Array2<f64>,
    pub h01: Array2<f64>,
    pub h20: Array2<f64>,
    pub h11: Array2<f64>,
    pub h02: Array2<f64>,
}

/// Local-quadratic derivative estimates; `a11` is the coefficient of
/// `2 dx dy`.
#[derive(Debug, Clone)]
pub struct DerivativeEstimates {
    pub region: InteriorRegion,
    pub a10: Array2<f64>,
    pub a01: Array2<f64>,
    pub a20: Array2<f64>,
    pub a11: Array2<f64>,
    pub a02: Array2<f64>,
}

pub fn estimate_derivatives(grid: &ImageGrid, ctx: &ScaleContext) -> Result<DerivativeEstimates> {
    MomentSums::compute(grid, ctx, Needs::All, SumMethod::default())?.derivatives()
}

impl MomentSums {
    pub fn compute(grid: &ImageGrid, ctx: &ScaleContext, needs: Needs, method: SumMethod) -> Result<Self> {
        ctx.check_grid(grid)?;
        if ctx.radius > ctx.region.margin {
            return Err(Error::param(format!(
                "kernel radius {} exceeds interior margin {}",
                ctx.radius, ctx.region.margin
            )));
        }
        let sums = match method {
            SumMethod::Direct => direct(grid, ctx, needs),
            SumMethod::Separable => separable(grid, ctx, needs),
        };
        Ok(sums)
    }

    fn require(&self, needs: Needs) -> Result<()> {
        let ok = (!needs.slope() || !self.h10.is_empty()) && (!needs.curvature() || !self.h00.is_empty());
        if ok {
            Ok(())
        } else {
            Err(Error::param("required moment sums were not computed"))
        }
    }

    pub fn derivatives(&self) -> Result<DerivativeEstimates> {
        self.require(Needs::All)?;
        let h2 = self.ctx.h * self.ctx.h;
        let h4 = h2 * h2;
        let a20 = ndarray::Zip::from(&self.h20).and(&self.h00).map_collect(|&h20, &h00| (h20 - h00 * h2) / (2.0 * h4));
        let a02 = ndarray::Zip::from(&self.h02).and(&self.h00).map_collect(|&h02, &h00| (h02 - h00 * h2) / (2.0 * h4));
        Ok(DerivativeEstimates {
            region: self.ctx.region,
            a10: self.h10.mapv(|v| v / h2),
            a01: self.h01.mapv(|v| v / h2),
            a20,
            a11: self.h11.mapv(|v| v / (2.0 * h4)),
            a02,
        })
    }

    /// Unstandardized `Σ W·Y` per pixel.
    pub fn weighted_sum(&self, dir: Direction, order: Order) -> Result<Array2<f64>> {
        let (u, v) = (dir.u(), dir.v());
        match order {
            Order::Slope => {
                self.require(Needs::Slope)?;
                Ok(ndarray::Zip::from(&self.h10).and(&self.h01).map_collect(|&a, &b| u * a + v * b))
            }
            Order::Curvature => {
                self.require(Needs::Curvature)?;
                let h2 = self.ctx.h * self.ctx.h;
                let (uu, uv, vv) = (u * u, 2.0 * u * v, v * v);
                Ok(ndarray::Zip::from(&self.h20)
                    .and(&self.h11)
                    .and(&self.h02)
                    .and(&self.h00)
                    .map_collect(|&h20, &h11, &h02, &h00| uu * h20 + uv * h11 + vv * h02 - h2 * h00))
            }
        }
    }

    /// Standardized statistic; the denominator uses the finite truncated
    /// `Σ W²`, so the null variance is exactly one.
    pub fn stat_field(&self, dir: Direction, order: Order, sigma: f64) -> Result<StatField> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param(format!("sigma must be positive, got {sigma}; supply a known noise level")));
        }
        let energy = weight_energy(dir, order, self.ctx.h, self.ctx.radius)?;
        assert!(energy > 0.0, "directional weights vanish on the support");
        let scale = 1.0 / (sigma * energy.sqrt());
        let mut stats = self.weighted_sum(dir, order)?;
        stats.mapv_inplace(|v| v * scale);
        Ok(StatField { region: self.ctx.region, direction: dir, order, stats, sigma_used: sigma })
    }
}

fn empty() -> Array2<f64> {
    Array2::zeros((0, 0))
}

// Both paths sum offsets `+d` and `-d` as a pair before accumulating, so
// odd moments of symmetric data cancel exactly.

fn direct(grid: &ImageGrid, ctx: &ScaleContext, needs: Needs) -> MomentSums {
    let kw = KernelWeights::new(ctx.h, ctx.radius).expect("validated context");
    let region = ctx.region;
    let (gr, gc) = region.dim();
    let r = ctx.radius as isize;
    let m = region.margin as isize;
    let y = grid.values();

    let pixels: Vec<[f64; 6]> = (0..gr * gc)
        .into_par_iter()
        .map(|p| {
            let (i, j) = ((p / gc) as isize + m, (p % gc) as isize + m);
            let at = |dx: isize, dy: isize| kw.get(dx, dy) * y[[(i + dx) as usize, (j + dy) as usize]];
            // Σ_dy over one kernel row: (Σ t, Σ dy t, Σ dy² t)
            let inner = |dx: isize| {
                let t0 = at(dx, 0);
                let (mut s0, mut s1, mut s2) = (t0, 0.0, 0.0);
                for dy in 1..=r {
                    let (a, b) = (at(dx, dy), at(dx, -dy));
                    let fy = dy as f64;
                    s0 += a + b;
                    s1 += fy * (a - b);
                    s2 += fy * fy * (a + b);
                }
                (s0, s1, s2)
            };
            let (c0, c1, c2) = inner(0);
            let mut s = [c0, 0.0, c1, 0.0, 0.0, c2];
            for dx in 1..=r {
                let (p0, p1, p2) = inner(dx);
                let (n0, n1, n2) = inner(-dx);
                let fx = dx as f64;
                s[0] += p0 + n0;
                s[1] += fx * (p0 - n0);
                s[2] += p1 + n1;
                s[3] += fx * fx * (p0 + n0);
                s[4] += fx * (p1 - n1);
                s[5] += p2 + n2;
            }
            s
        })
        .collect();
    let field = |idx: usize, wanted: bool| {
        if wanted {
            Array2::from_shape_fn((gr, gc), |(i, j)| pixels[i * gc + j][idx])
        } else {
            empty()
        }
    };
    MomentSums {
        ctx: *ctx,
        h00: field(0, needs.curvature()),
        h10: field(1, needs.slope()),
        h01: field(2, needs.slope()),
        h20: field(3, needs.curvature()),
        h11: field(4, needs.curvature()),
        h02: field(5, needs.curvature()),
    }
}

/// `d^power g(d)` for `d = 0..=r`, with `g` the 1-D Gaussian density of
/// standard deviation `h`.
fn profile(h: f64, r: usize, power: i32) -> Vec<f64> {
    let norm = 1.0 / ((2.0 * PI).sqrt() * h);
    (0..=r)
        .map(|d| {
            let d = d as f64;
            d.powi(power) * (-(d * d) / (2.0 * h * h)).exp() * norm
        })
        .collect()
}

/// `Σ_d w(|d|) sgn(d)^power x(c + d)` with `+d`/`-d` paired.
#[inline]
fn paired(x: impl Fn(isize) -> f64, w: &[f64], odd: bool) -> f64 {
    let mut s = if odd { 0.0 } else { w[0] * x(0) };
    for (d, &wd) in w.iter().enumerate().skip(1) {
        let (a, b) = (x(d as isize), x(-(d as isize)));
        s += wd * if odd { a - b } else { a + b };
    }
    s
}

fn separable(grid: &ImageGrid, ctx: &ScaleContext, needs: Needs) -> MomentSums {
    let region = ctx.region;
    let (gr, gc) = region.dim();
    let r = ctx.radius;
    let m = region.margin;
    let cols = grid.cols();
    let y = grid.values().as_slice().expect("image storage is standard layout");
    let w: Vec<Vec<f64>> = (0..3).map(|p| profile(ctx.h, r, p)).collect();
    let band = gr + 2 * r;

    // Column pass: A_k(row, c) = Σ_dy Y(row, m + c + dy) dy^k g(dy) for the
    // rows the row pass will read.
    let col_pass = |k: usize| -> Vec<f64> {
        let wk = &w[k];
        let mut out = vec![0.0; band * gc];
        out.par_chunks_mut(gc).enumerate().for_each(|(b, dst)| {
            let row = m - r + b;
            let src = &y[row * cols..(row + 1) * cols];
            for (c, d) in dst.iter_mut().enumerate() {
                let centre = (m + c) as isize;
                *d = paired(|o| src[(centre + o) as usize], wk, k % 2 == 1);
            }
        });
        out
    };
    // Row pass: H(i, c) = Σ_dx A(i + r + dx, c) dx^p g(dx).
    let row_pass = |a: &[f64], p: usize| -> Array2<f64> {
        let wp = &w[p];
        let odd = p % 2 == 1;
        let mut out = vec![0.0; gr * gc];
        out.par_chunks_mut(gc).enumerate().for_each(|(i, dst)| {
            let row = |o: isize| &a[(i as isize + r as isize + o) as usize * gc..][..gc];
            if !odd {
                for (d, s) in dst.iter_mut().zip(row(0)) {
                    *d = wp[0] * s;
                }
            }
            for (t, &wt) in wp.iter().enumerate().skip(1) {
                let (pos, neg) = (row(t as isize), row(-(t as isize)));
                for ((d, a), b) in dst.iter_mut().zip(pos).zip(neg) {
                    *d += wt * if odd { a - b } else { a + b };
                }
            }
        });
        Array2::from_shape_vec((gr, gc), out).expect("shape")
    };

    let a0 = col_pass(0);
    let a1 = col_pass(1);
    let a2 = if needs.curvature() { col_pass(2) } else { Vec::new() };
    let sl = needs.slope();
    let cu = needs.curvature();
    MomentSums {
        ctx: *ctx,
        h00: if cu { row_pass(&a0, 0) } else { empty() },
        h10: if sl { row_pass(&a0, 1) } else { empty() },
        h01: if sl { row_pass(&a1, 0) } else { empty() },
        h20: if cu { row_pass(&a0, 2) } else { empty() },
        h11: if cu { row_pass(&a1, 1) } else { empty() },
        h02: if cu { row_pass(&a2, 0) } else { empty() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_from(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> ImageGrid {
        ImageGrid::new(Array2::from_shape_fn((rows, cols), |(i, j)| f(i, j))).unwrap()
    }

    /// Independent double-sum oracle for `H_mk` at one image pixel.
    fn oracle_h(grid: &ImageGrid, h: f64, r: isize, i: usize, j: usize, m: i32, k: i32) -> f64 {
        let mut s = 0.0;
        for dx in -r..=r {
            for dy in -r..=r {
                let (fx, fy) = (dx as f64, dy as f64);
                let kern = (-(fx * fx + fy * fy) / (2.0 * h * h)).exp() / (2.0 * PI * h * h);
                s += grid.get((i as isize + dx) as usize, (j as isize + dy) as usize) * fx.powi(m) * fy.powi(k) * kern;
            }
        }
        s
    }

    #[test]
    fn constant_image_derivatives() {
        let c = 7.5;
        let grid = grid_from(64, 64, |_, _| c);
        let ctx = ScaleContext::new(64, 64, 2.0, 6.0, None).unwrap();
        let d = estimate_derivatives(&grid, &ctx).unwrap();
        assert!(d.a10.iter().chain(&d.a01).chain(&d.a11).all(|&v| v == 0.0));
        for v in d.a20.iter().chain(&d.a02) {
            assert!(v.abs() < 1e-6 * c);
        }
    }

    #[test]
    fn direct_odd_moments_cancel_exactly() {
        let grid = grid_from(30, 30, |_, _| 3.0);
        let ctx = ScaleContext::new(30, 30, 2.0, 4.0, None).unwrap();
        let s = MomentSums::compute(&grid, &ctx, Needs::All, SumMethod::Direct).unwrap();
        assert!(s.h10.iter().chain(&s.h01).chain(&s.h11).all(|&v| v == 0.0));
    }

    #[test]
    fn ramp_slope_against_oracle() {
        let grid = grid_from(80, 80, |i, _| i as f64);
        let h = 4.0;
        let ctx = ScaleContext::new(80, 80, h, 6.0, None).unwrap();
        let d = estimate_derivatives(&grid, &ctx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = ctx.radius as isize;
        for _ in 0..5 {
            let (i, j) = (rng.random_range(0..ctx.region.g_rows), rng.random_range(0..ctx.region.g_cols));
            let (ii, jj) = ctx.region.to_image(i, j);
            let a10 = oracle_h(&grid, h, r, ii, jj, 1, 0) / (h * h);
            let a01 = oracle_h(&grid, h, r, ii, jj, 0, 1) / (h * h);
            assert!((a10 - 1.0).abs() < 1e-4);
            assert!(a01.abs() < 1e-4);
            assert!((d.a10[[i, j]] - a10).abs() < 1e-10);
            assert!((d.a01[[i, j]] - a01).abs() < 1e-10);
        }
    }

    #[test]
    fn paraboloid_curvature_against_oracle() {
        let h = 3.0;
        let (i0, j0) = (40usize, 37usize);
        let grid = grid_from(80, 80, |i, _| (i as f64 - i0 as f64).powi(2));
        let ctx = ScaleContext::new(80, 80, h, 6.0, None).unwrap();
        let d = estimate_derivatives(&grid, &ctx).unwrap();
        let r = ctx.radius as isize;
        let h20 = oracle_h(&grid, h, r, i0, j0, 2, 0);
        let h00 = oracle_h(&grid, h, r, i0, j0, 0, 0);
        let a20 = (h20 - h00 * h * h) / (2.0 * h.powi(4));
        assert!((a20 - 1.0).abs() < 1e-3);
        let m = ctx.region.margin;
        assert!((d.a20[[i0 - m, j0 - m]] - a20).abs() < 1e-10);
    }

    #[test]
    fn separable_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = grid_from(50, 61, |_, _| rng.random_range(-5.0..5.0));
        for h in [1.5, 3.0] {
            let ctx = ScaleContext::for_grid(&grid, h).unwrap();
            let a = MomentSums::compute(&grid, &ctx, Needs::All, SumMethod::Direct).unwrap();
            let b = MomentSums::compute(&grid, &ctx, Needs::All, SumMethod::Separable).unwrap();
            for (x, y) in [
                (&a.h00, &b.h00),
                (&a.h10, &b.h10),
                (&a.h01, &b.h01),
                (&a.h20, &b.h20),
                (&a.h11, &b.h11),
                (&a.h02, &b.h02),
            ] {
                for (p, q) in x.iter().zip(y) {
                    assert!((p - q).abs() <= 1e-10 * p.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn partial_needs() {
        let grid = grid_from(40, 40, |i, j| (i * j) as f64);
        let ctx = ScaleContext::for_grid(&grid, 2.0).unwrap();
        let s = MomentSums::compute(&grid, &ctx, Needs::Slope, SumMethod::Separable).unwrap();
        assert!(s.stat_field(Direction::ROW, Order::Slope, 1.0).is_ok());
        assert!(s.stat_field(Direction::ROW, Order::Curvature, 1.0).is_err());
        assert!(s.derivatives().is_err());
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        let grid = grid_from(40, 40, |_, _| 1.0);
        let ctx = ScaleContext::for_grid(&grid, 2.0).unwrap();
        let s = MomentSums::compute(&grid, &ctx, Needs::All, SumMethod::Separable).unwrap();
        let err = s.stat_field(Direction::ROW, Order::Slope, 0.0).unwrap_err();
        assert!(err.to_string().contains("sigma"));
    }

    #[test]
    fn wrong_grid_size() {
        let grid = grid_from(40, 40, |_, _| 1.0);
        let ctx = ScaleContext::new(50, 50, 2.0, 4.0, None).unwrap();
        assert!(MomentSums::compute(&grid, &ctx, Needs::All, SumMethod::Separable).is_err());
    }
}
