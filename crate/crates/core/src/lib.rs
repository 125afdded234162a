//! Hypervolume maximization as a training objective for per-sample losses.
//!
//! Every sample in a data set is treated as its own objective. Instead of
//! minimizing the uniform mean of the losses, training maximizes the
//! logarithm of the single-solution hypervolume
//!
//! ```text
//! log H_mu(theta) = sum_i log(mu - l_i(theta))
//! ```
//!
//! whose gradient is a weighted mean of the per-sample loss gradients with
//! self-adjusting weights `w_i = 1 / (mu - l_i)`: the worse a sample is
//! currently fit, the more pressure it receives.
//!
//! The crate is organised by concern:
//!
//! - [`scalarize`]: linear and hypervolume scalarization, self-adjusting
//!   weights, and the Nadir (`mu`) schedule.
//! - [`net`]: a from-scratch dense denoising autoencoder with per-sample
//!   cross-entropy and weighted backpropagation.
//! - [`optim`]: minibatch gradient descent for the mean-loss baseline and the
//!   hypervolume objective, plus paired runs.
//! - [`data`]: IDX ingestion, desk-scale downsampling, synthetic digits and
//!   salt-and-pepper corruption.
//! - [`pareto`]: a toy two-objective problem with a concave frontier.
//! - [`stats`]: run records, paired difference series and the paired t-test.
//! - [`gradcheck`]: finite-difference checks of the analytic gradients.
//!
//! ```
//! use hvloss_core::scalarize::{hv_weights, mu_for_batch, normalize_weights, LossVector};
//!
//! let losses = LossVector::new(vec![0.5, 1.5]).unwrap();
//! let mu = mu_for_batch(&losses, 0.5).unwrap();
//! let w = normalize_weights(&hv_weights(&losses, mu).unwrap());
//! assert!(w.values()[1] > w.values()[0]);
//! ```

pub mod data;
pub mod error;
pub mod gradcheck;
pub mod net;
pub mod optim;
pub mod pareto;
pub mod rng;
pub mod scalarize;
pub mod stats;

pub use data::{Dataset, SplitSizes};
pub use error::{Error, Result};
pub use net::{AutoencoderParams, Batch};
pub use optim::{EpochMetrics, MuScope, Objective, SplitMetrics, TrainConfig};
pub use scalarize::{LossVector, Mu, NadirPoint, NadirSchedule, WeightVector};
pub use stats::{Metric, RunRecord, Split};
