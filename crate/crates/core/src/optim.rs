//! Minibatch gradient descent for the mean-loss baseline and the
//! hypervolume objective.
//!
//! Both objectives share the same loop. Each minibatch is forwarded on its
//! corrupted inputs, the per-sample losses against the clean targets are
//! turned into sample weights (uniform `1/B`, or normalized `1/(mu - l_i)`),
//! and a plain SGD step follows. The slack `eps(t)` that places `mu` above
//! the batch maximum changes only between epochs.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;

use crate::data::{salt_pepper, Dataset};
use crate::error::{Error, Result};
use crate::net::{self, AutoencoderParams, Batch};
use crate::rng::{self, Stream};
use crate::scalarize::{
    hv_weights, mu_for_batch, normalize_weights, LossVector, Mu, NadirSchedule, WeightVector,
};
use crate::stats::RunRecord;

/// Tolerance on the sum of normalized hypervolume weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Objective {
    MeanLoss,
    Hypervolume,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::MeanLoss => "mean",
            Objective::Hypervolume => "hv",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" | "meanloss" | "mean-loss" => Ok(Objective::MeanLoss),
            "hv" | "hypervolume" => Ok(Objective::Hypervolume),
            other => Err(Error::InvalidConfig(format!("unknown objective {other:?}"))),
        }
    }
}

/// Which losses define the maximum that `mu` is placed above.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum MuScope {
    /// The current minibatch.
    #[default]
    Batch,
    /// The whole (corrupted) training split, measured at the start of each
    /// epoch; the batch maximum still bounds `mu` from below.
    Full,
}

impl MuScope {
    pub fn name(self) -> &'static str {
        match self {
            MuScope::Batch => "batch",
            MuScope::Full => "full",
        }
    }
}

impl FromStr for MuScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "batch" => Ok(MuScope::Batch),
            "full" => Ok(MuScope::Full),
            other => Err(Error::InvalidConfig(format!("unknown mu scope {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub objective: Objective,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden_dim: usize,
    pub schedule: NadirSchedule,
    pub seed: u64,
    pub corruption_p: f64,
    pub mu_scope: MuScope,
}

impl Default for TrainConfig {
    /// Full-scale settings: lr 0.1, batch 500, 100 epochs, 500 hidden units,
    /// eps0 = 1, kappa = 1.
    fn default() -> Self {
        Self {
            objective: Objective::Hypervolume,
            learning_rate: 0.1,
            batch_size: 500,
            epochs: 100,
            hidden_dim: 500,
            schedule: NadirSchedule::default(),
            seed: 0,
            corruption_p: 0.0,
            mu_scope: MuScope::Batch,
        }
    }
}

impl TrainConfig {
    pub fn with_objective(&self, objective: Objective) -> Self {
        Self {
            objective,
            ..self.clone()
        }
    }

    pub fn validate(&self, train_rows: usize) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.batch_size > train_rows {
            return Err(Error::InvalidConfig(format!(
                "batch size {} must be in 1..={train_rows}",
                self.batch_size
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.hidden_dim == 0 {
            return Err(Error::InvalidConfig("hidden units must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.corruption_p) {
            return Err(Error::InvalidConfig(format!(
                "corruption p must be in [0, 1], got {}",
                self.corruption_p
            )));
        }
        NadirSchedule::new(self.schedule.epsilon0, self.schedule.kappa)?;
        if self.objective == Objective::Hypervolume && self.schedule.epsilon0 <= 0.0 {
            return Err(Error::InvalidConfig(
                "hypervolume training needs epsilon0 > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitMetrics {
    pub mean: f64,
    pub max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train: SplitMetrics,
    pub valid: SplitMetrics,
    pub test: SplitMetrics,
}

/// `params - learning_rate * gradient`.
pub fn sgd_step(
    params: &AutoencoderParams,
    gradient: &AutoencoderParams,
    learning_rate: f64,
) -> Result<AutoencoderParams> {
    let mut next = params.clone();
    next.scaled_add(-learning_rate, gradient)?;
    Ok(next)
}

/// Mean and maximum reconstruction loss on clean inputs.
pub fn evaluate(params: &AutoencoderParams, split: ArrayView2<'_, f64>) -> Result<SplitMetrics> {
    let recon = net::forward(params, split)?;
    let losses = net::per_sample_loss(recon.view(), split)?;
    Ok(SplitMetrics {
        mean: losses.mean(),
        max: losses.max(),
    })
}

pub fn evaluate_all(
    params: &AutoencoderParams,
    dataset: &Dataset,
    epoch: usize,
) -> Result<EpochMetrics> {
    Ok(EpochMetrics {
        epoch,
        train: evaluate(params, dataset.train.view())?,
        valid: evaluate(params, dataset.valid.view())?,
        test: evaluate(params, dataset.test.view())?,
    })
}

/// Corrupted training inputs and the minibatch order for one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochPlan {
    pub corrupted: Array2<f64>,
    pub order: Vec<usize>,
}

impl EpochPlan {
    /// Row indices of each minibatch; the last one may be short.
    pub fn batches(&self, batch_size: usize) -> impl Iterator<Item = &[usize]> {
        self.order.chunks(batch_size)
    }
}

/// Fresh salt-and-pepper noise and a fresh permutation, both drawn from
/// streams keyed by `(seed, epoch)` only.
pub fn plan_epoch(
    train: ArrayView2<'_, f64>,
    seed: u64,
    corruption_p: f64,
    epoch: usize,
) -> Result<EpochPlan> {
    let corrupted = salt_pepper(
        train,
        corruption_p,
        &mut rng::stream(seed, Stream::Noise { epoch }),
    )?;
    let mut order: Vec<usize> = (0..train.nrows()).collect();
    order.shuffle(&mut rng::stream(seed, Stream::Shuffle { epoch }));
    Ok(EpochPlan { corrupted, order })
}

/// Normalized hypervolume weights for one minibatch.
///
/// `mu = max(batch max, floor) + epsilon`, where `floor` is the full-split
/// maximum when that scope is selected.
pub fn hypervolume_batch_weights(
    losses: &LossVector,
    epsilon: f64,
    floor: Option<f64>,
) -> Result<WeightVector> {
    let mu = match floor {
        None => mu_for_batch(losses, epsilon)?,
        Some(f) => {
            let base = mu_for_batch(losses, epsilon)?;
            Mu(base.0.max(f + epsilon))
        }
    };
    let worst = losses.max();
    if mu.0 <= worst {
        return Err(Error::Invariant(format!(
            "mu {} is not above the batch maximum {worst}",
            mu.0
        )));
    }
    let weights = normalize_weights(&hv_weights(losses, mu)?);
    let sum = weights.sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::Invariant(format!("normalized weights sum to {sum}")));
    }
    Ok(weights)
}

/// Runs one pass over the plan's minibatches, with `weigh` turning each
/// batch's losses into sample weights.
pub fn train_epoch_with<F>(
    params: &AutoencoderParams,
    train: ArrayView2<'_, f64>,
    plan: &EpochPlan,
    batch_size: usize,
    learning_rate: f64,
    mut weigh: F,
) -> Result<AutoencoderParams>
where
    F: FnMut(&LossVector) -> Result<WeightVector>,
{
    if plan.corrupted.dim() != train.dim() || plan.order.len() != train.nrows() {
        return Err(Error::ShapeMismatch(
            "epoch plan does not match the training split".into(),
        ));
    }
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be >= 1".into()));
    }
    let mut params = params.clone();
    for rows in plan.batches(batch_size) {
        let batch = Batch::new(
            train.select(Axis(0), rows),
            plan.corrupted.select(Axis(0), rows),
        )?;
        let (_, _, grad) = net::loss_and_gradient(&params, &batch, &mut weigh)?;
        params.scaled_add(-learning_rate, &grad)?;
    }
    Ok(params)
}

/// One training epoch (index `epoch_index`, starting at 0) followed by
/// noiseless evaluation of all three splits. The returned metrics are
/// labelled `epoch_index + 1`.
pub fn train_epoch(
    params: &AutoencoderParams,
    dataset: &Dataset,
    plan: &EpochPlan,
    config: &TrainConfig,
    epoch_index: usize,
) -> Result<(AutoencoderParams, EpochMetrics)> {
    let next = match config.objective {
        Objective::MeanLoss => train_epoch_with(
            params,
            dataset.train.view(),
            plan,
            config.batch_size,
            config.learning_rate,
            |l| Ok(WeightVector::uniform(l.len())),
        )?,
        Objective::Hypervolume => {
            let epsilon = config.schedule.epsilon_at(epoch_index);
            let floor = match config.mu_scope {
                MuScope::Batch => None,
                MuScope::Full => {
                    let batch = Batch::new(dataset.train.clone(), plan.corrupted.clone())?;
                    Some(net::batch_losses(params, &batch)?.max())
                }
            };
            train_epoch_with(
                params,
                dataset.train.view(),
                plan,
                config.batch_size,
                config.learning_rate,
                |l| hypervolume_batch_weights(l, epsilon, floor),
            )?
        }
    };
    let metrics = evaluate_all(&next, dataset, epoch_index + 1)?;
    Ok((next, metrics))
}

/// A full run: metrics of the initial parameters, then after every epoch.
pub fn train_run(dataset: &Dataset, config: &TrainConfig) -> Result<RunRecord> {
    train_run_with_params(dataset, config).map(|(record, _)| record)
}

/// Like [`train_run`], also returning the final parameters.
pub fn train_run_with_params(
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(RunRecord, AutoencoderParams)> {
    config.validate(dataset.train.nrows())?;
    let mut params = net::init_params(config.seed, dataset.dim(), config.hidden_dim)?;
    let mut epochs = Vec::with_capacity(config.epochs + 1);
    epochs.push(evaluate_all(&params, dataset, 0)?);
    for t in 0..config.epochs {
        let plan = plan_epoch(dataset.train.view(), config.seed, config.corruption_p, t)?;
        let (next, metrics) = train_epoch(&params, dataset, &plan, config, t)?;
        params = next;
        epochs.push(metrics);
    }
    let record = RunRecord {
        seed: config.seed,
        objective: config.objective,
        corruption_p: config.corruption_p,
        epochs,
    };
    record.validate()?;
    Ok((record, params))
}

/// Trains the baseline and the candidate from the same initial parameters
/// and the same noise and shuffling streams.
pub fn paired_run(
    baseline: &TrainConfig,
    candidate: &TrainConfig,
    dataset: &Dataset,
) -> Result<(RunRecord, RunRecord)> {
    if candidate.with_objective(baseline.objective) != *baseline {
        return Err(Error::ConfigMismatch(format!(
            "{baseline:?} vs {candidate:?}"
        )));
    }
    Ok((
        train_run(dataset, baseline)?,
        train_run(dataset, candidate)?,
    ))
}
