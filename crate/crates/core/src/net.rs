//! Dense denoising autoencoder.
//!
//! `input -> sigmoid(hidden) -> sigmoid(input)` with untied encoder and
//! decoder weights. Rows of every matrix are samples. The per-sample loss is
//! the binary cross-entropy summed over output dimensions, and
//! [`weighted_backward`] returns the gradient of `sum_i w_i * l_i` for an
//! arbitrary weight vector, which covers both the mean loss (`w_i = 1/B`) and
//! the hypervolume objective (`w_i` from [`crate::scalarize::hv_weights`]).

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::scalarize::{LossVector, WeightVector};

/// Reconstructions are clamped to `[LOSS_CLAMP, 1 - LOSS_CLAMP]` inside the loss.
pub const LOSS_CLAMP: f64 = 1e-12;

/// Network parameters. The same structure carries gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct AutoencoderParams {
    /// `hidden x input`
    pub enc_weights: Array2<f64>,
    pub enc_bias: Array1<f64>,
    /// `input x hidden`
    pub dec_weights: Array2<f64>,
    pub dec_bias: Array1<f64>,
}

impl AutoencoderParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            enc_weights: Array2::zeros((hidden_dim, input_dim)),
            enc_bias: Array1::zeros(hidden_dim),
            dec_weights: Array2::zeros((input_dim, hidden_dim)),
            dec_bias: Array1::zeros(input_dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.enc_weights.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.enc_weights.nrows()
    }

    pub fn num_params(&self) -> usize {
        self.enc_weights.len() + self.enc_bias.len() + self.dec_weights.len() + self.dec_bias.len()
    }

    /// Checks mutual consistency of the four blocks and finiteness.
    pub fn validate(&self) -> Result<()> {
        let (h, d) = self.enc_weights.dim();
        if self.enc_bias.len() != h || self.dec_weights.dim() != (d, h) || self.dec_bias.len() != d
        {
            return Err(Error::ShapeMismatch(format!(
                "enc {:?} + {}, dec {:?} + {}",
                self.enc_weights.dim(),
                self.enc_bias.len(),
                self.dec_weights.dim(),
                self.dec_bias.len()
            )));
        }
        if self.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.enc_weights.dim() == other.enc_weights.dim()
            && self.enc_bias.dim() == other.enc_bias.dim()
            && self.dec_weights.dim() == other.dec_weights.dim()
            && self.dec_bias.dim() == other.dec_bias.dim()
    }

    /// All entries in a fixed order: encoder weights, encoder bias, decoder
    /// weights, decoder bias (each row-major).
    pub fn iter(&self) -> impl Iterator<Item = &f64> + '_ {
        self.enc_weights
            .iter()
            .chain(self.enc_bias.iter())
            .chain(self.dec_weights.iter())
            .chain(self.dec_bias.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.enc_weights
            .iter_mut()
            .chain(self.enc_bias.iter_mut())
            .chain(self.dec_weights.iter_mut())
            .chain(self.dec_bias.iter_mut())
    }

    /// `self += alpha * other`; shapes must match.
    pub fn scaled_add(&mut self, alpha: f64, other: &Self) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch(
                "parameter blocks differ in shape".into(),
            ));
        }
        self.enc_weights.scaled_add(alpha, &other.enc_weights);
        self.enc_bias.scaled_add(alpha, &other.enc_bias);
        self.dec_weights.scaled_add(alpha, &other.dec_weights);
        self.dec_bias.scaled_add(alpha, &other.dec_bias);
        Ok(())
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Clean targets and the corrupted inputs fed to the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub clean: Array2<f64>,
    pub corrupted: Array2<f64>,
}

impl Batch {
    pub fn new(clean: Array2<f64>, corrupted: Array2<f64>) -> Result<Self> {
        if clean.dim() != corrupted.dim() {
            return Err(Error::ShapeMismatch(format!(
                "clean {:?} vs corrupted {:?}",
                clean.dim(),
                corrupted.dim()
            )));
        }
        if clean
            .iter()
            .chain(corrupted.iter())
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::Domain("batch entries must lie in [0, 1]".into()));
        }
        Ok(Self { clean, corrupted })
    }

    /// A batch whose input is its own target.
    pub fn noiseless(clean: Array2<f64>) -> Result<Self> {
        let corrupted = clean.clone();
        Self::new(clean, corrupted)
    }

    pub fn len(&self) -> usize {
        self.clean.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.clean.nrows() == 0
    }
}

/// Fan-based uniform initialization scaled for sigmoid units; zero biases.
pub fn init_params(seed: u64, input_dim: usize, hidden_dim: usize) -> Result<AutoencoderParams> {
    if input_dim == 0 || hidden_dim == 0 {
        return Err(Error::Domain(format!(
            "dimensions must be >= 1, got {input_dim}x{hidden_dim}"
        )));
    }
    let bound = 4.0 * (6.0 / (input_dim + hidden_dim) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    let mut rng = rng::stream(seed, Stream::Init);
    let mut params = AutoencoderParams::zeros(input_dim, hidden_dim);
    params
        .enc_weights
        .iter_mut()
        .for_each(|w| *w = dist.sample(&mut rng));
    params
        .dec_weights
        .iter_mut()
        .for_each(|w| *w = dist.sample(&mut rng));
    Ok(params)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn affine_sigmoid(
    x: ArrayView2<'_, f64>,
    weights: &Array2<f64>,
    bias: &Array1<f64>,
) -> Array2<f64> {
    let mut z = x.dot(&weights.t());
    z += bias;
    z.mapv_inplace(sigmoid);
    z
}

fn check_inputs(params: &AutoencoderParams, inputs: ArrayView2<'_, f64>) -> Result<()> {
    params.validate()?;
    if inputs.ncols() != params.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "inputs have {} columns, network expects {}",
            inputs.ncols(),
            params.input_dim()
        )));
    }
    Ok(())
}

fn forward_unchecked(
    params: &AutoencoderParams,
    inputs: ArrayView2<'_, f64>,
) -> (Array2<f64>, Array2<f64>) {
    let hidden = affine_sigmoid(inputs, &params.enc_weights, &params.enc_bias);
    let output = affine_sigmoid(hidden.view(), &params.dec_weights, &params.dec_bias);
    (hidden, output)
}

/// Reconstructions for a `B x input` matrix of inputs.
pub fn forward(params: &AutoencoderParams, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_inputs(params, inputs)?;
    Ok(forward_unchecked(params, inputs).1)
}

/// Binary cross-entropy per row, summed over columns.
pub fn per_sample_loss(
    reconstruction: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
) -> Result<LossVector> {
    if reconstruction.dim() != target.dim() {
        return Err(Error::ShapeMismatch(format!(
            "reconstruction {:?} vs target {:?}",
            reconstruction.dim(),
            target.dim()
        )));
    }
    let losses: Vec<f64> = reconstruction
        .outer_iter()
        .zip(target.outer_iter())
        .map(|(r, t)| {
            Zip::from(&r).and(&t).fold(0.0, |acc, &r, &t| {
                let r = r.clamp(LOSS_CLAMP, 1.0 - LOSS_CLAMP);
                acc - (t * r.ln() + (1.0 - t) * (1.0 - r).ln())
            })
        })
        .collect();
    if let Some(i) = losses.iter().position(|l| !l.is_finite()) {
        return Err(Error::Numerical(format!(
            "loss of sample {i} is {}",
            losses[i]
        )));
    }
    LossVector::new(losses)
}

/// Forward on the corrupted inputs, loss against the clean targets.
pub fn batch_losses(params: &AutoencoderParams, batch: &Batch) -> Result<LossVector> {
    let recon = forward(params, batch.corrupted.view())?;
    per_sample_loss(recon.view(), batch.clean.view())
}

/// Gradient of `sum_i w_i * l_i` with respect to every parameter, where
/// `l_i` is the cross-entropy of reconstructing `clean[i]` from `corrupted[i]`.
pub fn weighted_backward(
    params: &AutoencoderParams,
    batch: &Batch,
    weights: &WeightVector,
) -> Result<AutoencoderParams> {
    check_inputs(params, batch.corrupted.view())?;
    if weights.len() != batch.len() {
        return Err(Error::LengthMismatch {
            expected: batch.len(),
            got: weights.len(),
        });
    }
    let (hidden, output) = forward_unchecked(params, batch.corrupted.view());
    backward_unchecked(params, batch, &hidden, &output, weights)
}

/// One forward pass that yields the per-sample losses, lets `weigh` turn
/// them into sample weights, and backpropagates those weights.
pub fn loss_and_gradient<F>(
    params: &AutoencoderParams,
    batch: &Batch,
    weigh: F,
) -> Result<(LossVector, WeightVector, AutoencoderParams)>
where
    F: FnOnce(&LossVector) -> Result<WeightVector>,
{
    check_inputs(params, batch.corrupted.view())?;
    let (hidden, output) = forward_unchecked(params, batch.corrupted.view());
    let losses = per_sample_loss(output.view(), batch.clean.view())?;
    let weights = weigh(&losses)?;
    if weights.len() != batch.len() {
        return Err(Error::LengthMismatch {
            expected: batch.len(),
            got: weights.len(),
        });
    }
    let grad = backward_unchecked(params, batch, &hidden, &output, &weights)?;
    Ok((losses, weights, grad))
}

fn backward_unchecked(
    params: &AutoencoderParams,
    batch: &Batch,
    hidden: &Array2<f64>,
    output: &Array2<f64>,
    weights: &WeightVector,
) -> Result<AutoencoderParams> {
    let w = Array1::from(weights.values().to_vec()).insert_axis(Axis(1));

    // d l / d z_out = r - t for sigmoid outputs under cross-entropy.
    let delta_out = (output - &batch.clean) * &w;
    let dec_weights = delta_out.t().dot(hidden);
    let dec_bias = delta_out.sum_axis(Axis(0));

    let mut delta_hidden = delta_out.dot(&params.dec_weights);
    Zip::from(&mut delta_hidden)
        .and(hidden)
        .for_each(|d, &h| *d *= h * (1.0 - h));
    let enc_weights = delta_hidden.t().dot(&batch.corrupted);
    let enc_bias = delta_hidden.sum_axis(Axis(0));

    let grad = AutoencoderParams {
        enc_weights,
        enc_bias,
        dec_weights,
        dec_bias,
    };
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical("non-finite gradient".into()));
    }
    Ok(grad)
}
