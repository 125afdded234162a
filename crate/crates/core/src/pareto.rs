//! Two-objective toy problem with a slightly concave Pareto frontier.
//!
//! `f1(x) = x`, `f2(x) = (1 - x)^a` on `[0, 1]` with `0 < a < 1`. Every point
//! is efficient, yet a weighted sum `w1 f1 + w2 f2` is concave in `x` and so
//! is always minimized at an endpoint. Maximizing `log(z1 - f1) + log(z2 - f2)`
//! instead reaches interior trade-offs.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToyProblem {
    exponent: f64,
}

impl ToyProblem {
    pub const DEFAULT_EXPONENT: f64 = 0.9;

    pub fn new(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent < 1.0) {
            return Err(Error::Domain(format!(
                "frontier exponent must lie in (0, 1), got {exponent}"
            )));
        }
        Ok(Self { exponent })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn objectives(&self, x: f64) -> Result<(f64, f64)> {
        toy_objectives(x, self)
    }
}

impl Default for ToyProblem {
    fn default() -> Self {
        Self {
            exponent: Self::DEFAULT_EXPONENT,
        }
    }
}

pub fn toy_objectives(x: f64, problem: &ToyProblem) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x must lie in [0, 1], got {x}")));
    }
    Ok((x, (1.0 - x).powf(problem.exponent)))
}

/// Points `k * step` for `k = 0..=n` with `n = round(1 / step)`; the last
/// point is exactly 1.
pub fn grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Domain(format!(
            "grid step must lie in (0, 1], got {step}"
        )));
    }
    let n = (1.0 / step).round() as usize;
    Ok((0..=n).map(|k| k as f64 / n as f64).collect())
}

/// Grid point minimizing `score`; ties go to the smaller `x`.
fn grid_argmin(step: f64, score: impl Fn(f64) -> f64) -> Result<f64> {
    let mut best = (f64::NAN, f64::INFINITY);
    for x in grid(step)? {
        let s = score(x);
        if s < best.1 {
            best = (x, s);
        }
    }
    Ok(best.0)
}

fn check_step(step: f64) -> Result<()> {
    if step > 1e-4 {
        return Err(Error::Domain(format!(
            "grid step must be <= 1e-4, got {step}"
        )));
    }
    Ok(())
}

/// Weighted-sum value `w1 f1 + w2 f2`.
pub fn linear_value(f: (f64, f64), w1: f64, w2: f64) -> f64 {
    w1 * f.0 + w2 * f.1
}

/// `log(z1 - f1) + log(z2 - f2)`, or `-inf` where the Nadir point does not
/// dominate.
pub fn log_hv_value(f: (f64, f64), z1: f64, z2: f64) -> f64 {
    if z1 > f.0 && z2 > f.1 {
        (z1 - f.0).ln() + (z2 - f.1).ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Grid minimizer of the weighted sum over `[0, 1]`.
pub fn linear_argmin(problem: &ToyProblem, w1: f64, w2: f64, grid_step: f64) -> Result<f64> {
    check_step(grid_step)?;
    if !(w1 >= 0.0 && w2 >= 0.0) || (w1 == 0.0 && w2 == 0.0) {
        return Err(Error::Domain(format!(
            "weights must be >= 0 and not both zero, got ({w1}, {w2})"
        )));
    }
    let p = *problem;
    grid_argmin(grid_step, |x| {
        linear_value((x, (1.0 - x).powf(p.exponent)), w1, w2)
    })
}

/// Grid maximizer of the log-hypervolume for an arbitrary two-objective
/// curve on `[0, 1]`.
pub fn hv_argmax_curve(
    curve: impl Fn(f64) -> (f64, f64),
    z1: f64,
    z2: f64,
    grid_step: f64,
) -> Result<f64> {
    check_step(grid_step)?;
    grid_argmin(grid_step, |x| -log_hv_value(curve(x), z1, z2))
}

/// Grid maximizer of `log(z1 - f1) + log(z2 - f2)`; the Nadir point must
/// dominate the whole frontier (`z1, z2 > 1`).
pub fn hv_argmax(problem: &ToyProblem, z1: f64, z2: f64, grid_step: f64) -> Result<f64> {
    if !(z1 > 1.0 && z2 > 1.0) {
        return Err(Error::Domain(format!(
            "nadir ({z1}, {z2}) must exceed 1 in both objectives"
        )));
    }
    let p = *problem;
    hv_argmax_curve(|x| (x, (1.0 - x).powf(p.exponent)), z1, z2, grid_step)
}

/// True when no grid point is at least as good in both objectives and
/// strictly better in one.
pub fn is_grid_efficient(problem: &ToyProblem, x: f64, grid_step: f64) -> Result<bool> {
    let (a1, a2) = problem.objectives(x)?;
    for g in grid(grid_step)? {
        let (b1, b2) = problem.objectives(g)?;
        if b1 <= a1 && b2 <= a2 && (b1 < a1 || b2 < a2) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontierRow {
    pub x: f64,
    pub f1: f64,
    pub f2: f64,
    pub linear: f64,
    pub log_hv: f64,
}

/// The frontier sampled on the grid with both scalarizations.
pub fn frontier_table(
    problem: &ToyProblem,
    weights: (f64, f64),
    nadir: (f64, f64),
    step: f64,
) -> Result<Vec<FrontierRow>> {
    grid(step)?
        .into_iter()
        .map(|x| {
            let f = problem.objectives(x)?;
            Ok(FrontierRow {
                x,
                f1: f.0,
                f2: f.1,
                linear: linear_value(f, weights.0, weights.1),
                log_hv: log_hv_value(f, nadir.0, nadir.1),
            })
        })
        .collect()
}
