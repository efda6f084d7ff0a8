use serde::{Deserialize, Serialize};

use super::SlopeResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    LeftRegion,
    LostSignificance,
    MaxSteps,
    Stagnation,
}

/// Polyline in image coordinates `(row, col)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Streamline {
    pub points: Vec<(f64, f64)>,
    pub terminated_by: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamlineParams {
    pub seed_stride: usize,
    pub step: f64,
    pub max_steps: usize,
}

impl Default for StreamlineParams {
    fn default() -> Self {
        StreamlineParams { seed_stride: 4, step: 0.5, max_steps: 400 }
    }
}

struct Field<'a> {
    res: &'a SlopeResult,
    rows: usize,
    cols: usize,
}

impl Field<'_> {
    fn inside(&self, (r, c): (f64, f64)) -> bool {
        r >= 0.0 && c >= 0.0 && r <= (self.rows - 1) as f64 && c <= (self.cols - 1) as f64
    }

    fn significant(&self, (r, c): (f64, f64)) -> bool {
        self.res.significant[[r.round() as usize, c.round() as usize]]
    }

    /// Bilinearly interpolated, unit-normalised gradient.
    fn direction(&self, (r, c): (f64, f64)) -> Option<(f64, f64)> {
        let r0 = (r.floor() as usize).min(self.rows.saturating_sub(2));
        let c0 = (c.floor() as usize).min(self.cols.saturating_sub(2));
        let r1 = (r0 + 1).min(self.rows - 1);
        let c1 = (c0 + 1).min(self.cols - 1);
        let (fr, fc) = (r - r0 as f64, c - c0 as f64);
        let lerp = |a: &ndarray::Array2<f64>| {
            let top = a[[r0, c0]] * (1.0 - fc) + a[[r0, c1]] * fc;
            let bot = a[[r1, c0]] * (1.0 - fc) + a[[r1, c1]] * fc;
            top * (1.0 - fr) + bot * fr
        };
        let (gr, gc) = (lerp(&self.res.a10), lerp(&self.res.a01));
        let norm = gr.hypot(gc);
        (norm > 0.0 && norm.is_finite()).then(|| (gr / norm, gc / norm))
    }
}

enum Step {
    To((f64, f64)),
    Stop(Termination),
}

fn rk4(field: &Field, p: (f64, f64), h: f64) -> Step {
    let at = |q: (f64, f64)| {
        if !field.inside(q) {
            return Err(Termination::LeftRegion);
        }
        field.direction(q).ok_or(Termination::Stagnation)
    };
    let shift = |q: (f64, f64), k: (f64, f64), s: f64| (q.0 + s * k.0, q.1 + s * k.1);
    let run = || -> Result<(f64, f64), Termination> {
        let k1 = at(p)?;
        let k2 = at(shift(p, k1, h / 2.0))?;
        let k3 = at(shift(p, k2, h / 2.0))?;
        let k4 = at(shift(p, k3, h))?;
        Ok((
            p.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            p.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        ))
    };
    match run() {
        Ok(q) => Step::To(q),
        Err(t) => Step::Stop(t),
    }
}

/// Integrates the normalised gradient uphill from every `seed_stride`-th
/// significant pixel with fixed-step RK4. A line stops when it would leave
/// the interior, enters a non-significant pixel, moves less than `1e-6`,
/// or reaches `max_steps`.
pub fn trace_streamlines(result: &SlopeResult, params: StreamlineParams) -> Vec<Streamline> {
    assert!(params.step > 0.0, "streamline step must be positive");
    assert!(params.seed_stride >= 1, "seed stride must be at least 1");
    let (rows, cols) = result.region.dim();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let field = Field { res: result, rows, cols };
    let m = result.region.margin as f64;
    let mut lines = Vec::new();
    for i in (0..rows).step_by(params.seed_stride) {
        for j in (0..cols).step_by(params.seed_stride) {
            if !result.significant[[i, j]] {
                continue;
            }
            let mut p = (i as f64, j as f64);
            let mut pts = vec![(p.0 + m, p.1 + m)];
            let mut end = Termination::MaxSteps;
            for _ in 0..params.max_steps {
                let q = match rk4(&field, p, params.step) {
                    Step::To(q) => q,
                    Step::Stop(t) => {
                        end = t;
                        break;
                    }
                };
                if !field.inside(q) {
                    end = Termination::LeftRegion;
                    break;
                }
                if (q.0 - p.0).hypot(q.1 - p.1) < 1e-6 {
                    end = Termination::Stagnation;
                    break;
                }
                if !field.significant(q) {
                    end = Termination::LostSignificance;
                    break;
                }
                pts.push((q.0 + m, q.1 + m));
                p = q;
            }
            lines.push(Streamline { points: pts, terminated_by: end });
        }
    }
    lines
}
