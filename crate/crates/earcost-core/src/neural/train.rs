//! Backpropagation training for both network families.
//!
//! Feed-forward nets train with minibatch gradient descent, inverted
//! dropout and ADADELTA-adapted learning rates. Recurrent nets train on
//! length-limited subsequences without minibatching, using momentum,
//! a linearly decayed learning rate and gradient-norm clipping. Both stop
//! early when the validation cost stalls and return the best-validation
//! snapshot.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::Real;

use super::{activation, sigmoid, Activation, NetworkParams};

/// Feed-forward training knobs.
#[derive(Debug, Clone, Copy)]
pub struct TrainSpecDnn {
    pub minibatch: usize,
    pub dropout: f64,
    pub patience: usize,
    pub adadelta_decay: f64,
    pub adadelta_epsilon: f64,
    pub max_epochs: usize,
}

impl Default for TrainSpecDnn {
    fn default() -> Self {
        Self {
            minibatch: 100,
            dropout: 0.2,
            patience: 20,
            adadelta_decay: 0.95,
            adadelta_epsilon: 1e-6,
            max_epochs: 200,
        }
    }
}

/// Recurrent training knobs.
#[derive(Debug, Clone, Copy)]
pub struct TrainSpecRnn {
    pub initial_lr: f64,
    pub lr_decay_iterations: usize,
    pub momentum: f64,
    pub subsequence: usize,
    pub clip_norm: f64,
    pub patience: usize,
    pub max_epochs: usize,
}

impl Default for TrainSpecRnn {
    fn default() -> Self {
        Self {
            initial_lr: 0.001,
            lr_decay_iterations: 1000,
            momentum: 0.9,
            subsequence: 100,
            clip_norm: 10.0,
            patience: 20,
            max_epochs: 100,
        }
    }
}

/// Feed-forward architecture cell.
#[derive(Debug, Clone, Copy)]
pub struct DnnArch {
    pub layers: usize,
    pub hidden: usize,
    pub activation: Activation,
}

/// Recurrent architecture cell.
#[derive(Debug, Clone, Copy)]
pub struct RnnArch {
    pub layers: usize,
    pub hidden: usize,
}

/// Training outcome: best-validation snapshot plus bookkeeping.
#[derive(Debug, Clone)]
pub struct TrainedNetwork<R> {
    pub params: NetworkParams<R>,
    pub epochs_run: usize,
    pub best_validation_cost: f64,
    pub stopped_early: bool,
}

/// Gradient of the mean binary cross-entropy, flattened in
/// [`NetworkParams::to_flat`] order.
#[derive(Debug, Clone)]
pub struct Gradients(pub Vec<f64>);

/// Euclidean norm of a flat gradient.
pub fn gradient_norm(grads: &[f64]) -> f64 {
    grads.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Rescale the gradient to `max_norm` when it exceeds it; returns the
/// norm before clipping.
pub fn clip_gradients(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = gradient_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

/// Linearly decayed learning rate, reaching zero at `decay_iterations`.
pub fn linear_lr(initial: f64, iteration: usize, decay_iterations: usize) -> f64 {
    if decay_iterations == 0 {
        return initial;
    }
    initial * (1.0 - iteration as f64 / decay_iterations as f64).max(0.0)
}

fn bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

fn activation_derivative(kind: Activation, post: f64) -> f64 {
    match kind {
        Activation::Sigmoid => post * (1.0 - post),
        Activation::Relu => {
            if post > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Tanh => 1.0 - post * post,
    }
}

/// Offsets of each parameter block inside the flat layout.
struct Layout {
    weight: Vec<usize>,
    recurrent: Vec<Option<usize>>,
    bias: Vec<usize>,
    output_weight: usize,
    output_bias: usize,
    total: usize,
}

impl Layout {
    fn of<R: Real>(params: &NetworkParams<R>) -> Self {
        let mut offset = 0;
        let mut weight = Vec::new();
        let mut recurrent = Vec::new();
        let mut bias = Vec::new();
        for layer in params.hidden_layers() {
            weight.push(offset);
            offset += layer.weight.len() * layer.weight[0].len();
            recurrent.push(layer.recurrent.as_ref().map(|r| {
                let at = offset;
                offset += r.len() * r[0].len();
                at
            }));
            bias.push(offset);
            offset += layer.bias.len();
        }
        let output_weight = offset;
        offset += params.output_weight().len();
        let output_bias = offset;
        Self {
            weight,
            recurrent,
            bias,
            output_weight,
            output_bias,
            total: offset + 1,
        }
    }
}

/// Mean BCE of a feed-forward net over a batch, without dropout.
pub fn dnn_cost<R: Real>(params: &NetworkParams<R>, xs: &[Vec<R>], ys: &[bool]) -> Result<f64> {
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let p = super::dnn_forward(x, params)?.as_f64();
        total += bce(p, y as u8 as f64);
    }
    Ok(total / xs.len().max(1) as f64)
}

/// Mean frame BCE of a recurrent net over whole sequences (state reset at
/// each sequence start).
pub fn rnn_cost<R: Real>(
    params: &NetworkParams<R>,
    sequences: &[(Vec<Vec<R>>, Vec<bool>)],
) -> Result<f64> {
    let mut total = 0.0;
    let mut frames = 0usize;
    for (seq, labels) in sequences {
        let outputs = super::rnn_forward(seq, params)?;
        for (p, &y) in outputs.iter().zip(labels) {
            total += bce(p.as_f64(), y as u8 as f64);
            frames += 1;
        }
    }
    Ok(total / frames.max(1) as f64)
}

/// Loss and gradients of a feed-forward batch. `dropout_masks`, when
/// present, holds one inverted-dropout scale per (sample, layer, unit).
fn dnn_loss_and_grads<R: Real>(
    params: &NetworkParams<R>,
    xs: &[&Vec<R>],
    ys: &[f64],
    dropout_masks: Option<&[Vec<Vec<f64>>]>,
    layout: &Layout,
) -> (f64, Vec<f64>) {
    let l = params.layers();
    let h = params.hidden_width();
    let mut grads = vec![0.0f64; layout.total];
    let mut loss = 0.0;
    let batch = xs.len() as f64;

    for (s, (x, &y)) in xs.iter().zip(ys).enumerate() {
        // forward, keeping pre-dropout and post-dropout activations
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(l);
        let mut fed: Vec<Vec<f64>> = Vec::with_capacity(l + 1);
        fed.push(x.iter().map(|v| v.as_f64()).collect());
        for (li, layer) in params.hidden_layers().iter().enumerate() {
            let input = &fed[li];
            let mut act = vec![0.0f64; h];
            for i in 0..h {
                let mut z = layer.bias[i].as_f64();
                for (w, v) in layer.weight[i].iter().zip(input) {
                    z += w.as_f64() * v;
                }
                act[i] = activation(params.activation(), R::of(z)).as_f64();
            }
            let mut out = act.clone();
            if let Some(masks) = dropout_masks {
                for i in 0..h {
                    out[i] *= masks[s][li][i];
                }
            }
            post.push(act);
            fed.push(out);
        }
        let last = &fed[l];
        let mut z_out = params.output_bias().as_f64();
        for (w, v) in params.output_weight().iter().zip(last) {
            z_out += w.as_f64() * v;
        }
        let p = sigmoid(z_out);
        loss += bce(p, y);

        // backward
        let delta_out = (p - y) / batch;
        for i in 0..h {
            grads[layout.output_weight + i] += delta_out * last[i];
        }
        grads[layout.output_bias] += delta_out;
        let mut upstream: Vec<f64> = params
            .output_weight()
            .iter()
            .map(|w| w.as_f64() * delta_out)
            .collect();
        for li in (0..l).rev() {
            let layer = &params.hidden_layers()[li];
            let mut dz = vec![0.0f64; h];
            for i in 0..h {
                let mut da = upstream[i];
                if let Some(masks) = dropout_masks {
                    da *= masks[s][li][i];
                }
                dz[i] = da * activation_derivative(params.activation(), post[li][i]);
            }
            let fan_in = layer.weight[0].len();
            let input = &fed[li];
            for i in 0..h {
                let row = layout.weight[li] + i * fan_in;
                for j in 0..fan_in {
                    grads[row + j] += dz[i] * input[j];
                }
                grads[layout.bias[li] + i] += dz[i];
            }
            if li > 0 {
                let mut down = vec![0.0f64; fan_in];
                for i in 0..h {
                    let w_row = &layer.weight[i];
                    for j in 0..fan_in {
                        down[j] += w_row[j].as_f64() * dz[i];
                    }
                }
                upstream = down;
            }
        }
    }
    (loss / batch, grads)
}

/// Loss and gradients of one recurrent subsequence via full
/// backpropagation through time (state starts at zero).
fn rnn_loss_and_grads<R: Real>(
    params: &NetworkParams<R>,
    seq: &[Vec<R>],
    ys: &[f64],
    layout: &Layout,
) -> (f64, Vec<f64>) {
    let l = params.layers();
    let h = params.hidden_width();
    let steps = seq.len();
    let mut grads = vec![0.0f64; layout.total];

    // forward pass, storing every hidden state
    let mut states: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; h]; steps]; l];
    let mut probs = vec![0.0f64; steps];
    let mut loss = 0.0;
    for t in 0..steps {
        let mut input: Vec<f64> = seq[t].iter().map(|v| v.as_f64()).collect();
        for (li, layer) in params.hidden_layers().iter().enumerate() {
            let w_r = layer.recurrent.as_ref().expect("recurrent layer");
            let mut act = vec![0.0f64; h];
            for i in 0..h {
                let mut z = layer.bias[i].as_f64();
                for (w, v) in layer.weight[i].iter().zip(&input) {
                    z += w.as_f64() * v;
                }
                if t > 0 {
                    for (w, v) in w_r[i].iter().zip(&states[li][t - 1]) {
                        z += w.as_f64() * v;
                    }
                }
                act[i] = z.tanh();
            }
            states[li][t] = act.clone();
            input = act;
        }
        let mut z_out = params.output_bias().as_f64();
        for (w, v) in params.output_weight().iter().zip(&input) {
            z_out += w.as_f64() * v;
        }
        probs[t] = sigmoid(z_out);
        loss += bce(probs[t], ys[t]);
    }
    loss /= steps as f64;

    // backward through time
    let mut carry: Vec<Vec<f64>> = vec![vec![0.0; h]; l];
    for t in (0..steps).rev() {
        let delta_out = (probs[t] - ys[t]) / steps as f64;
        let top = &states[l - 1][t];
        for i in 0..h {
            grads[layout.output_weight + i] += delta_out * top[i];
        }
        grads[layout.output_bias] += delta_out;
        let mut upstream: Vec<f64> = params
            .output_weight()
            .iter()
            .map(|w| w.as_f64() * delta_out)
            .collect();
        for li in (0..l).rev() {
            let layer = &params.hidden_layers()[li];
            let w_r = layer.recurrent.as_ref().unwrap();
            let mut dz = vec![0.0f64; h];
            for i in 0..h {
                let a = states[li][t][i];
                dz[i] = (upstream[i] + carry[li][i]) * (1.0 - a * a);
            }
            let fan_in = layer.weight[0].len();
            let input: Vec<f64> = if li == 0 {
                seq[t].iter().map(|v| v.as_f64()).collect()
            } else {
                states[li - 1][t].clone()
            };
            for i in 0..h {
                let row = layout.weight[li] + i * fan_in;
                for j in 0..fan_in {
                    grads[row + j] += dz[i] * input[j];
                }
                grads[layout.bias[li] + i] += dz[i];
                if t > 0 {
                    let r_row = layout.recurrent[li].unwrap() + i * h;
                    for j in 0..h {
                        grads[r_row + j] += dz[i] * states[li][t - 1][j];
                    }
                }
            }
            // carry through the recurrent weights to t-1
            let mut next_carry = vec![0.0f64; h];
            for i in 0..h {
                for j in 0..h {
                    next_carry[j] += w_r[i][j].as_f64() * dz[i];
                }
            }
            carry[li] = next_carry;
            if li > 0 {
                let mut down = vec![0.0f64; fan_in];
                for i in 0..h {
                    let w_row = &layer.weight[i];
                    for j in 0..fan_in {
                        down[j] += w_row[j].as_f64() * dz[i];
                    }
                }
                upstream = down;
            }
        }
    }
    (loss, grads)
}

/// Gradients for testing and verification, dropout disabled.
pub fn dnn_gradients<R: Real>(
    params: &NetworkParams<R>,
    xs: &[Vec<R>],
    ys: &[bool],
) -> Result<(f64, Gradients)> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::InvalidParameter("empty or misaligned batch".into()));
    }
    let layout = Layout::of(params);
    let refs: Vec<&Vec<R>> = xs.iter().collect();
    let y: Vec<f64> = ys.iter().map(|&b| b as u8 as f64).collect();
    let (loss, grads) = dnn_loss_and_grads(params, &refs, &y, None, &layout);
    Ok((loss, Gradients(grads)))
}

/// BPTT gradients for testing and verification.
pub fn rnn_gradients<R: Real>(
    params: &NetworkParams<R>,
    seq: &[Vec<R>],
    ys: &[bool],
) -> Result<(f64, Gradients)> {
    if seq.is_empty() || seq.len() != ys.len() {
        return Err(Error::InvalidParameter("empty or misaligned sequence".into()));
    }
    let layout = Layout::of(params);
    let y: Vec<f64> = ys.iter().map(|&b| b as u8 as f64).collect();
    let (loss, grads) = rnn_loss_and_grads(params, seq, &y, &layout);
    Ok((loss, Gradients(grads)))
}

fn validate_frames<R: Real>(xs: &[Vec<R>], dim: usize) -> Result<()> {
    if xs.iter().any(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: xs.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(0),
        });
    }
    if xs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training frames".into()));
    }
    Ok(())
}

/// Train a feed-forward net from a seeded initialization.
pub fn train_dnn<R: Real>(
    train_x: &[Vec<R>],
    train_y: &[bool],
    val_x: &[Vec<R>],
    val_y: &[bool],
    arch: DnnArch,
    spec: &TrainSpecDnn,
    rng_seed: u64,
) -> Result<TrainedNetwork<R>> {
    let input_dim = train_x
        .first()
        .map(Vec::len)
        .ok_or(Error::NotEnoughData {
            needed: 1,
            available: 0,
        })?;
    let params = NetworkParams::new_dnn(input_dim, arch.layers, arch.hidden, arch.activation, rng_seed)?;
    train_dnn_from(params, train_x, train_y, val_x, val_y, spec, rng_seed)
}

/// Train a feed-forward net starting from explicit parameters.
pub fn train_dnn_from<R: Real>(
    mut params: NetworkParams<R>,
    train_x: &[Vec<R>],
    train_y: &[bool],
    val_x: &[Vec<R>],
    val_y: &[bool],
    spec: &TrainSpecDnn,
    rng_seed: u64,
) -> Result<TrainedNetwork<R>> {
    if train_x.len() != train_y.len() || val_x.len() != val_y.len() {
        return Err(Error::InvalidParameter("frames and labels misaligned".into()));
    }
    if !(0.0..1.0).contains(&spec.dropout) {
        return Err(Error::InvalidParameter("dropout must lie in [0, 1)".into()));
    }
    validate_frames(train_x, params.input_dim())?;
    validate_frames(val_x, params.input_dim())?;

    let layout = Layout::of(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x5eed_da7a);
    let mut flat: Vec<f64> = params.to_flat().iter().map(|v| v.as_f64()).collect();
    let mut grad_sq = vec![0.0f64; layout.total];
    let mut delta_sq = vec![0.0f64; layout.total];

    let mut best_flat = flat.clone();
    let mut best_cost = dnn_cost(&params, val_x, val_y)?;
    let mut stall = 0usize;
    let mut epochs_run = 0usize;
    let mut stopped_early = false;
    let keep = 1.0 - spec.dropout;

    let mut order: Vec<usize> = (0..train_x.len()).collect();
    for _epoch in 0..spec.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(spec.minibatch.max(1)) {
            let xs: Vec<&Vec<R>> = chunk.iter().map(|&i| &train_x[i]).collect();
            let ys: Vec<f64> = chunk.iter().map(|&i| train_y[i] as u8 as f64).collect();
            let masks: Option<Vec<Vec<Vec<f64>>>> = (spec.dropout > 0.0).then(|| {
                xs.iter()
                    .map(|_| {
                        (0..params.layers())
                            .map(|_| {
                                (0..params.hidden_width())
                                    .map(|_| {
                                        if rng.gen::<f64>() < keep {
                                            1.0 / keep
                                        } else {
                                            0.0
                                        }
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            });
            let (loss, grads) = dnn_loss_and_grads(&params, &xs, &ys, masks.as_deref(), &layout);
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss after {epochs_run} epochs",
                    epochs_run = epochs_run
                )));
            }
            for i in 0..layout.total {
                let g = grads[i];
                grad_sq[i] = spec.adadelta_decay * grad_sq[i] + (1.0 - spec.adadelta_decay) * g * g;
                let step = -((delta_sq[i] + spec.adadelta_epsilon).sqrt()
                    / (grad_sq[i] + spec.adadelta_epsilon).sqrt())
                    * g;
                delta_sq[i] =
                    spec.adadelta_decay * delta_sq[i] + (1.0 - spec.adadelta_decay) * step * step;
                flat[i] += step;
            }
            let lifted: Vec<R> = flat.iter().map(|&v| R::of(v)).collect();
            params.set_from_flat(&lifted);
        }
        epochs_run += 1;

        let cost = dnn_cost(&params, val_x, val_y)?;
        if !cost.is_finite() {
            return Err(Error::NonFinite("validation cost".into()));
        }
        if cost < best_cost {
            best_cost = cost;
            best_flat = flat.clone();
            stall = 0;
        } else {
            stall += 1;
            if stall >= spec.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let lifted: Vec<R> = best_flat.iter().map(|&v| R::of(v)).collect();
    params.set_from_flat(&lifted);
    Ok(TrainedNetwork {
        params,
        epochs_run,
        best_validation_cost: best_cost,
        stopped_early,
    })
}

/// Train a recurrent net from a seeded initialization.
pub fn train_rnn<R: Real>(
    train: &[(Vec<Vec<R>>, Vec<bool>)],
    validation: &[(Vec<Vec<R>>, Vec<bool>)],
    arch: RnnArch,
    spec: &TrainSpecRnn,
    rng_seed: u64,
) -> Result<TrainedNetwork<R>> {
    let input_dim = train
        .first()
        .and_then(|(seq, _)| seq.first())
        .map(Vec::len)
        .ok_or(Error::NotEnoughData {
            needed: 1,
            available: 0,
        })?;
    let mut params = NetworkParams::<R>::new_rnn(input_dim, arch.layers, arch.hidden, rng_seed)?;

    for (seq, labels) in train.iter().chain(validation) {
        if seq.len() != labels.len() {
            return Err(Error::InvalidParameter("sequence and labels misaligned".into()));
        }
        validate_frames(seq, input_dim)?;
    }

    // carve the training material into bounded subsequences; state resets
    // at each subsequence start
    let mut subsequences: Vec<(Vec<Vec<R>>, Vec<f64>)> = Vec::new();
    for (seq, labels) in train {
        for (chunk_x, chunk_y) in seq
            .chunks(spec.subsequence.max(1))
            .zip(labels.chunks(spec.subsequence.max(1)))
        {
            subsequences.push((
                chunk_x.to_vec(),
                chunk_y.iter().map(|&b| b as u8 as f64).collect(),
            ));
        }
    }
    if subsequences.is_empty() {
        return Err(Error::NotEnoughData {
            needed: 1,
            available: 0,
        });
    }

    let layout = Layout::of(&params);
    let mut flat: Vec<f64> = params.to_flat().iter().map(|v| v.as_f64()).collect();
    let mut velocity = vec![0.0f64; layout.total];
    let mut best_flat = flat.clone();
    let mut best_cost = rnn_cost(&params, validation)?;
    let mut stall = 0usize;
    let mut epochs_run = 0usize;
    let mut stopped_early = false;
    let mut iteration = 0usize;

    for _epoch in 0..spec.max_epochs {
        for (seq, ys) in &subsequences {
            let (loss, mut grads) = rnn_loss_and_grads(&params, seq, ys, &layout);
            if !loss.is_finite() {
                return Err(Error::NonFinite("recurrent training loss".into()));
            }
            clip_gradients(&mut grads, spec.clip_norm);
            let lr = linear_lr(spec.initial_lr, iteration, spec.lr_decay_iterations);
            iteration += 1;
            for i in 0..layout.total {
                velocity[i] = spec.momentum * velocity[i] - lr * grads[i];
                flat[i] += velocity[i];
            }
            let lifted: Vec<R> = flat.iter().map(|&v| R::of(v)).collect();
            params.set_from_flat(&lifted);
        }
        epochs_run += 1;

        let cost = rnn_cost(&params, validation)?;
        if !cost.is_finite() {
            return Err(Error::NonFinite("validation cost".into()));
        }
        if cost < best_cost {
            best_cost = cost;
            best_flat = flat.clone();
            stall = 0;
        } else {
            stall += 1;
            if stall >= spec.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let lifted: Vec<R> = best_flat.iter().map(|&v| R::of(v)).collect();
    params.set_from_flat(&lifted);
    Ok(TrainedNetwork {
        params,
        epochs_run,
        best_validation_cost: best_cost,
        stopped_early,
    })
}
