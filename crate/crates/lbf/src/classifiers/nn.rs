//! Small feed-forward network: ReLU hidden layers, a single sigmoid output,
//! weighted binary cross-entropy, trained by plain mini-batch SGD.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{class_weights, sigmoid, Classifier};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NnParams {
    /// Hidden layer widths, e.g. `[25]` or `[10, 10]`.
    pub hidden: Vec<usize>,
    pub lr: f64,
    /// Weight positive samples by the class ratio `|D-| / |D+|`.
    pub cost_sensitive: bool,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Stop when the mean epoch loss improves by less than
    /// `plateau_rel_tol` (relatively) over this many epochs.
    pub plateau_epochs: usize,
    pub plateau_rel_tol: f64,
}

impl Default for NnParams {
    fn default() -> Self {
        Self {
            hidden: vec![10],
            lr: 1e-3,
            cost_sensitive: false,
            max_epochs: 200,
            batch_size: 32,
            plateau_epochs: 10,
            plateau_rel_tol: 1e-5,
        }
    }
}

/// Dense network with layer `l` mapping `layer_sizes[l]` inputs to
/// `layer_sizes[l + 1]` outputs; weights are row-major `(out, in)`.
/// The last layer always has a single sigmoid unit.
#[derive(Debug, Clone, PartialEq)]
pub struct NnModel {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    /// Learning rate the model was trained with; informational, not part of
    /// the canonical encoding.
    pub lr: f64,
}

impl NnModel {
    /// Zero-initialized network with the given topology.
    fn zeroed(layer_sizes: Vec<usize>, lr: f64) -> Self {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            weights.push(vec![0.0; layer_sizes[l + 1] * layer_sizes[l]]);
            biases.push(vec![0.0; layer_sizes[l + 1]]);
        }
        Self {
            layer_sizes,
            weights,
            biases,
            lr,
        }
    }

    pub fn n_parameters(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Pre-activations and activations for every layer; `activations[0]` is
    /// the input itself.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n_layers = self.layer_sizes.len() - 1;
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(x.to_vec());
        for l in 0..n_layers {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let prev = &activations[l];
            let mut out = Vec::with_capacity(n_out);
            for o in 0..n_out {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                let z = row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>() + self.biases[l][o];
                out.push(if l + 1 == self.layer_sizes.len() - 1 {
                    sigmoid(z)
                } else {
                    z.max(0.0)
                });
            }
            activations.push(out);
        }
        activations
    }
}

impl Classifier for NnModel {
    fn score(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.layer_sizes[0]);
        let out = self.forward(x).pop().expect("network has layers")[0];
        if out.is_nan() {
            0.5
        } else {
            out
        }
    }

    fn feature_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    fn size_bits(&self) -> u64 {
        super::encoding::nn_encoded_len(&self.layer_sizes) * 8
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(1e-12, 1.0 - 1e-12)
}

/// Mean weighted binary cross-entropy of the model on a batch.
pub fn batch_loss(model: &NnModel, xs: &[&[f64]], ys: &[u8], weights: (f64, f64)) -> f64 {
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let p = clamp_prob(model.score(x));
        let u = if y == 1 { weights.1 } else { weights.0 };
        total -= u * if y == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    total / xs.len() as f64
}

/// Gradients of [`batch_loss`] with respect to every weight and bias,
/// laid out exactly like `model.weights` / `model.biases`.
pub fn batch_gradients(
    model: &NnModel,
    xs: &[&[f64]],
    ys: &[u8],
    weights: (f64, f64),
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n_layers = model.layer_sizes.len() - 1;
    let mut dw: Vec<Vec<f64>> = model.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut db: Vec<Vec<f64>> = model.biases.iter().map(|b| vec![0.0; b.len()]).collect();
    let scale = 1.0 / xs.len() as f64;

    for (x, &y) in xs.iter().zip(ys) {
        let activations = model.forward(x);
        let p = clamp_prob(activations[n_layers][0]);
        let u = if y == 1 { weights.1 } else { weights.0 };
        // Sigmoid + cross-entropy: the output delta collapses to u * (p - y).
        let mut delta = vec![u * (p - y as f64) * scale];

        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (model.layer_sizes[l], model.layer_sizes[l + 1]);
            let prev = &activations[l];
            for o in 0..n_out {
                for i in 0..n_in {
                    dw[l][o * n_in + i] += delta[o] * prev[i];
                }
                db[l][o] += delta[o];
            }
            if l > 0 {
                // delta_prev = (W^T delta) gated by the ReLU mask.
                let mut prev_delta = vec![0.0; n_in];
                for (i, pd) in prev_delta.iter_mut().enumerate() {
                    if prev[i] > 0.0 {
                        *pd = (0..n_out)
                            .map(|o| model.weights[l][o * n_in + i] * delta[o])
                            .sum();
                    }
                }
                delta = prev_delta;
            }
        }
    }
    (dw, db)
}

pub fn train_nn(data: &LabeledDataset, params: &NnParams, seed: u64) -> Result<NnModel> {
    Ok(train_nn_traced(data, params, seed)?.0)
}

/// Like [`train_nn`] but also returns the mean loss of every completed epoch,
/// so callers can observe convergence and early stopping.
pub fn train_nn_traced(
    data: &LabeledDataset,
    params: &NnParams,
    seed: u64,
) -> Result<(NnModel, Vec<f64>)> {
    if !(params.lr > 0.0 && params.lr.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be positive and finite, got {}",
            params.lr
        )));
    }
    if params.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    if params.hidden.contains(&0) {
        return Err(Error::InvalidArgument(
            "hidden layer widths must be positive".into(),
        ));
    }
    let class_w = class_weights(data.labels(), params.cost_sensitive)?;

    let mut layer_sizes = Vec::with_capacity(params.hidden.len() + 2);
    layer_sizes.push(data.dim());
    layer_sizes.extend_from_slice(&params.hidden);
    layer_sizes.push(1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = NnModel::zeroed(layer_sizes, params.lr);
    for l in 0..model.weights.len() {
        // Uniform Glorot initialization keeps early activations in range.
        let (n_in, n_out) = (model.layer_sizes[l], model.layer_sizes[l + 1]);
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        for w in &mut model.weights[l] {
            *w = rng.gen_range(-limit..limit);
        }
    }

    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses: Vec<f64> = Vec::new();

    for _ in 0..params.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(params.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| data.row(i)).collect();
            let ys: Vec<u8> = batch.iter().map(|&i| data.label(i)).collect();
            epoch_loss += batch_loss(&model, &xs, &ys, class_w) * batch.len() as f64;
            let (dw, db) = batch_gradients(&model, &xs, &ys, class_w);
            for l in 0..model.weights.len() {
                for (w, g) in model.weights[l].iter_mut().zip(&dw[l]) {
                    *w -= params.lr * g;
                }
                for (b, g) in model.biases[l].iter_mut().zip(&db[l]) {
                    *b -= params.lr * g;
                }
            }
        }
        epoch_losses.push(epoch_loss / n as f64);

        let e = epoch_losses.len() - 1;
        if e >= params.plateau_epochs {
            let old = epoch_losses[e - params.plateau_epochs];
            let rel = (old - epoch_losses[e]) / old.abs().max(1e-12);
            if rel < params.plateau_rel_tol {
                break;
            }
        }
    }

    Ok((model, epoch_losses))
}
