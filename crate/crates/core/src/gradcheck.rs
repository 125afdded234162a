//! Finite-difference verification of the analytic gradients.
//!
//! Three checks, each comparing an analytic gradient with central
//! differences:
//!
//! - `weighted_backward`: backprop of `sum_i w_i l_i` for random weights;
//! - `hypervolume`: backprop with `w_i = 1/(mu - l_i)` against differences
//!   of `-log H_mu(theta)` at fixed `mu`;
//! - `scalar_identity`: `d/dx log H_mu = -sum_i w_i dl_i/dx` on convex
//!   quadratic toy losses of a scalar parameter.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::net::{self, AutoencoderParams, Batch};
use crate::scalarize::{hv_weights, log_hypervolume_mu, LossVector, Mu, WeightVector};

pub const STEP: f64 = 1e-6;
pub const THRESHOLD: f64 = 1e-5;
/// Denominator floor of the relative error, so entries whose true value is
/// near zero are judged by absolute error instead.
pub const RELATIVE_FLOOR: f64 = 1e-3;

/// Largest supported dimensions for the command-line check.
pub const MAX_INPUT_DIM: usize = 16;
pub const MAX_HIDDEN_DIM: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckOptions {
    pub seed: u64,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub batch_size: usize,
    pub trials: usize,
    /// Added to every analytic entry; non-zero values must make checks fail.
    pub perturb: f64,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            input_dim: 6,
            hidden_dim: 4,
            batch_size: 3,
            trials: 10,
            perturb: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub trials: usize,
    pub entries: usize,
    pub max_relative_error: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_relative_error < THRESHOLD
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Central differences of `f` with respect to every parameter entry, in
/// [`AutoencoderParams::iter`] order.
pub fn finite_difference_gradient(
    params: &AutoencoderParams,
    f: impl Fn(&AutoencoderParams) -> Result<f64>,
    step: f64,
) -> Result<Vec<f64>> {
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(params.num_params());
    for k in 0..params.num_params() {
        let original = *probe.iter().nth(k).expect("index in range");
        *probe.iter_mut().nth(k).expect("index in range") = original + step;
        let plus = f(&probe)?;
        *probe.iter_mut().nth(k).expect("index in range") = original - step;
        let minus = f(&probe)?;
        *probe.iter_mut().nth(k).expect("index in range") = original;
        out.push((plus - minus) / (2.0 * step));
    }
    Ok(out)
}

fn max_error(analytic: &AutoencoderParams, numeric: &[f64], perturb: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| relative_error(a + perturb, *n))
        .fold(0.0, f64::max)
}

fn random_setup(
    opts: &GradcheckOptions,
    trial: usize,
) -> Result<(AutoencoderParams, Batch, ChaCha8Rng)> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(1_000_003).wrapping_add(trial as u64));
    let params = net::init_params(rng.random(), opts.input_dim, opts.hidden_dim)?;
    let shape = (opts.batch_size, opts.input_dim);
    let clean = Array2::from_shape_simple_fn(shape, || rng.random::<f64>());
    let corrupted = Array2::from_shape_simple_fn(shape, || rng.random::<f64>());
    Ok((params, Batch::new(clean, corrupted)?, rng))
}

pub fn check_weighted_backward(opts: &GradcheckOptions) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut entries = 0;
    for trial in 0..opts.trials {
        let (params, batch, mut rng) = random_setup(opts, trial)?;
        let w: Vec<f64> = (0..opts.batch_size)
            .map(|_| rng.random_range(0.05..1.0))
            .collect();
        let weights = WeightVector::new(w.clone())?;
        let analytic = net::weighted_backward(&params, &batch, &weights)?;
        let numeric = finite_difference_gradient(
            &params,
            |p| {
                let l = net::batch_losses(p, &batch)?;
                Ok(l.values().iter().zip(&w).map(|(l, w)| l * w).sum())
            },
            STEP,
        )?;
        worst = worst.max(max_error(&analytic, &numeric, opts.perturb));
        entries += numeric.len();
    }
    Ok(CheckResult {
        name: "weighted_backward",
        trials: opts.trials,
        entries,
        max_relative_error: worst,
    })
}

pub fn check_hypervolume_gradient(opts: &GradcheckOptions) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut entries = 0;
    for trial in 0..opts.trials {
        let (params, batch, mut rng) = random_setup(opts, trial)?;
        let losses = net::batch_losses(&params, &batch)?;
        let mu = Mu(losses.max() + rng.random_range(0.5..2.0));
        let weights = hv_weights(&losses, mu)?;
        let analytic = net::weighted_backward(&params, &batch, &weights)?;
        let numeric = finite_difference_gradient(
            &params,
            |p| Ok(-log_hypervolume_mu(&net::batch_losses(p, &batch)?, mu)?),
            STEP,
        )?;
        worst = worst.max(max_error(&analytic, &numeric, opts.perturb));
        entries += numeric.len();
    }
    Ok(CheckResult {
        name: "hypervolume",
        trials: opts.trials,
        entries,
        max_relative_error: worst,
    })
}

pub fn check_scalar_identity(opts: &GradcheckOptions) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5ca1_ab1e);
    for _ in 0..opts.trials {
        let n = rng.random_range(1..8);
        let quads: Vec<(f64, f64, f64)> = (0..n)
            .map(|_| {
                (
                    rng.random_range(0.1..2.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.0..1.0),
                )
            })
            .collect();
        let losses = |x: f64| {
            LossVector::new(
                quads
                    .iter()
                    .map(|&(a, c, b)| a * (x - c).powi(2) + b)
                    .collect(),
            )
        };
        let x = rng.random_range(-1.0..1.0);
        let at_x = losses(x)?;
        let mu = Mu(at_x.max() + rng.random_range(0.5..2.0));
        let w = hv_weights(&at_x, mu)?;
        let analytic: f64 = -w
            .values()
            .iter()
            .zip(&quads)
            .map(|(w, &(a, c, _))| w * 2.0 * a * (x - c))
            .sum::<f64>();
        let numeric = (log_hypervolume_mu(&losses(x + STEP)?, mu)?
            - log_hypervolume_mu(&losses(x - STEP)?, mu)?)
            / (2.0 * STEP);
        worst = worst.max(relative_error(analytic + opts.perturb, numeric));
    }
    Ok(CheckResult {
        name: "scalar_identity",
        trials: opts.trials,
        entries: opts.trials,
        max_relative_error: worst,
    })
}

pub fn run_all(opts: &GradcheckOptions) -> Result<Vec<CheckResult>> {
    Ok(vec![
        check_weighted_backward(opts)?,
        check_hypervolume_gradient(opts)?,
        check_scalar_identity(opts)?,
    ])
}
