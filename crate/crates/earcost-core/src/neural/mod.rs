//! Feed-forward and recurrent networks with a single sigmoid output unit.
//!
//! Hidden layers share one width H. Feed-forward nets use sigmoid or ReLU
//! hidden activations; recurrent nets use tanh with one recurrent matrix
//! per hidden layer and carry their state across frames.

pub mod select;
pub mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costmodel::ops::{NullSink, OpSink};
use crate::error::{Error, Result};
use crate::real::Real;

pub use select::{
    default_dnn_grid, default_rnn_grid, select_dnn, select_rnn, NetworkGridPoint,
    NetworkSelection,
};
pub use train::{
    clip_gradients, dnn_cost, dnn_gradients, gradient_norm, linear_lr, rnn_cost, rnn_gradients,
    train_dnn, train_dnn_from, train_rnn, DnnArch, Gradients, RnnArch, TrainSpecDnn,
    TrainSpecRnn, TrainedNetwork,
};

/// Hidden-unit nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Sigmoid,
    Relu,
    Tanh,
}

impl Activation {
    pub fn name(&self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

/// Apply a nonlinearity to one value.
pub fn activation<R: Real>(kind: Activation, v: R) -> R {
    match kind {
        Activation::Sigmoid => sigmoid(v),
        Activation::Relu => {
            if v > R::zero() {
                v
            } else {
                R::zero()
            }
        }
        Activation::Tanh => v.tanh(),
    }
}

pub fn sigmoid<R: Real>(v: R) -> R {
    R::one() / (R::one() + (-v).exp())
}

/// One hidden layer: forward weights (rows are units), optional recurrent
/// weights, and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer<R> {
    pub weight: Vec<Vec<R>>,
    pub recurrent: Option<Vec<Vec<R>>>,
    pub bias: Vec<R>,
}

/// Full parameter set, shape D -> H x L -> 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<R> {
    input_dim: usize,
    hidden: Vec<HiddenLayer<R>>,
    output_weight: Vec<R>,
    output_bias: R,
    activation: Activation,
}

impl<R: Real> NetworkParams<R> {
    /// Feed-forward network with Glorot-uniform seeded initialization.
    pub fn new_dnn(
        input_dim: usize,
        layers: usize,
        hidden: usize,
        activation: Activation,
        rng_seed: u64,
    ) -> Result<Self> {
        if activation == Activation::Tanh {
            // tanh hidden units are reserved for the recurrent family here
            return Err(Error::InvalidParameter(
                "feed-forward hidden activation must be sigmoid or relu".into(),
            ));
        }
        Self::init(input_dim, layers, hidden, activation, false, rng_seed)
    }

    /// Recurrent tanh network with Glorot-uniform seeded initialization.
    pub fn new_rnn(input_dim: usize, layers: usize, hidden: usize, rng_seed: u64) -> Result<Self> {
        Self::init(input_dim, layers, hidden, Activation::Tanh, true, rng_seed)
    }

    fn init(
        input_dim: usize,
        layers: usize,
        hidden: usize,
        activation: Activation,
        recurrent: bool,
        rng_seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || layers == 0 || hidden == 0 {
            return Err(Error::InvalidParameter(
                "input dim, layer count and width must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut glorot = |rows: usize, cols: usize| -> Vec<Vec<R>> {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            (0..rows)
                .map(|_| (0..cols).map(|_| R::of(rng.gen_range(-bound..bound))).collect())
                .collect()
        };
        let mut hidden_layers = Vec::with_capacity(layers);
        for l in 0..layers {
            let fan_in = if l == 0 { input_dim } else { hidden };
            hidden_layers.push(HiddenLayer {
                weight: glorot(hidden, fan_in),
                recurrent: recurrent.then(|| glorot(hidden, hidden)),
                bias: vec![R::zero(); hidden],
            });
        }
        let output_weight = glorot(1, hidden).pop().unwrap();
        Ok(Self {
            input_dim,
            hidden: hidden_layers,
            output_weight,
            output_bias: R::zero(),
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> usize {
        self.hidden.len()
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden[0].bias.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn is_recurrent(&self) -> bool {
        self.hidden[0].recurrent.is_some()
    }

    pub fn hidden_layers(&self) -> &[HiddenLayer<R>] {
        &self.hidden
    }

    pub fn output_weight(&self) -> &[R] {
        &self.output_weight
    }

    pub fn output_bias(&self) -> R {
        self.output_bias
    }

    /// Total parameter count.
    pub fn num_params(&self) -> usize {
        let mut n = 0;
        for layer in &self.hidden {
            n += layer.weight.len() * layer.weight[0].len();
            if let Some(r) = &layer.recurrent {
                n += r.len() * r[0].len();
            }
            n += layer.bias.len();
        }
        n + self.output_weight.len() + 1
    }

    /// Parameters in a fixed order (used by the optimizers and checks).
    pub fn to_flat(&self) -> Vec<R> {
        let mut flat = Vec::with_capacity(self.num_params());
        for layer in &self.hidden {
            flat.extend(layer.weight.iter().flatten().copied());
            if let Some(r) = &layer.recurrent {
                flat.extend(r.iter().flatten().copied());
            }
            flat.extend(layer.bias.iter().copied());
        }
        flat.extend(self.output_weight.iter().copied());
        flat.push(self.output_bias);
        flat
    }

    /// Overwrite parameters from [`Self::to_flat`] order.
    pub fn set_from_flat(&mut self, flat: &[R]) {
        assert_eq!(flat.len(), self.num_params());
        let mut it = flat.iter().copied();
        for layer in &mut self.hidden {
            for row in &mut layer.weight {
                for v in row {
                    *v = it.next().unwrap();
                }
            }
            if let Some(r) = &mut layer.recurrent {
                for row in r {
                    for v in row {
                        *v = it.next().unwrap();
                    }
                }
            }
            for v in &mut layer.bias {
                *v = it.next().unwrap();
            }
        }
        for v in &mut self.output_weight {
            *v = it.next().unwrap();
        }
        self.output_bias = it.next().unwrap();
    }
}

fn matvec_sunk<R: Real, S: OpSink>(weight: &[Vec<R>], v: &[R], sink: &mut S) -> Vec<R> {
    weight
        .iter()
        .map(|row| {
            let mut acc = R::zero();
            for (w, x) in row.iter().zip(v) {
                let p = *w * *x;
                sink.multiplication(1);
                acc = acc + p;
                sink.addition(1);
            }
            acc
        })
        .collect()
}

fn book_activation<R: Real, S: OpSink>(kind: Activation, v: R, sink: &mut S) -> R {
    match kind {
        Activation::Relu => sink.relu(1),
        _ => sink.lut(1),
    }
    activation(kind, v)
}

/// Feed-forward inference: hidden transforms then the sigmoid output.
pub fn dnn_forward<R: Real>(x: &[R], params: &NetworkParams<R>) -> Result<R> {
    if params.is_recurrent() {
        return Err(Error::InvalidParameter(
            "recurrent network scored frame-wise; use rnn_forward".into(),
        ));
    }
    if x.len() != params.input_dim {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim,
            actual: x.len(),
        });
    }
    Ok(dnn_forward_sunk(x, params, &mut NullSink))
}

/// Feed-forward pass with operation events reported to `sink`.
///
/// Each matrix row books one multiplication and one accumulation per
/// input, biases book one addition per unit, and every nonlinearity books
/// a lookup (ReLU through its own channel).
pub fn dnn_forward_sunk<R: Real, S: OpSink>(x: &[R], params: &NetworkParams<R>, sink: &mut S) -> R {
    let mut v = x.to_vec();
    for layer in &params.hidden {
        let mut pre = matvec_sunk(&layer.weight, &v, sink);
        for (p, b) in pre.iter_mut().zip(&layer.bias) {
            *p = *p + *b;
            sink.addition(1);
        }
        v = pre
            .into_iter()
            .map(|p| book_activation(params.activation, p, sink))
            .collect();
    }
    output_unit_sunk(&v, params, sink)
}

fn output_unit_sunk<R: Real, S: OpSink>(v: &[R], params: &NetworkParams<R>, sink: &mut S) -> R {
    let mut acc = R::zero();
    for (w, h) in params.output_weight.iter().zip(v) {
        let p = *w * *h;
        sink.multiplication(1);
        acc = acc + p;
        sink.addition(1);
    }
    acc = acc + params.output_bias;
    sink.addition(1);
    let out = sigmoid(acc);
    sink.lut(1);
    out
}

/// Per-layer hidden state carried between frames of a recurrent pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnState<R> {
    pub hidden: Vec<Vec<R>>,
}

impl<R: Real> RnnState<R> {
    /// All-zero initial state.
    pub fn zeros(params: &NetworkParams<R>) -> Self {
        Self {
            hidden: params
                .hidden
                .iter()
                .map(|l| vec![R::zero(); l.bias.len()])
                .collect(),
        }
    }
}

/// One recurrent time step; the state is updated in place.
pub fn rnn_step<R: Real>(x: &[R], params: &NetworkParams<R>, state: &mut RnnState<R>) -> Result<R> {
    if !params.is_recurrent() {
        return Err(Error::InvalidParameter("network has no recurrent weights".into()));
    }
    if x.len() != params.input_dim {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim,
            actual: x.len(),
        });
    }
    Ok(rnn_step_sunk(x, params, state, &mut NullSink))
}

/// Recurrent step with operation events reported to `sink`.
///
/// Forward and recurrent matrix products book per-element multiply and
/// accumulate; merging the recurrent contribution books one addition per
/// unit except in the first layer, where it rides the input accumulation.
pub fn rnn_step_sunk<R: Real, S: OpSink>(
    x: &[R],
    params: &NetworkParams<R>,
    state: &mut RnnState<R>,
    sink: &mut S,
) -> R {
    let mut input = x.to_vec();
    for (l, layer) in params.hidden.iter().enumerate() {
        let fwd = matvec_sunk(&layer.weight, &input, sink);
        let rec = matvec_sunk(
            layer.recurrent.as_ref().expect("recurrent layer"),
            &state.hidden[l],
            sink,
        );
        let width = layer.bias.len();
        let mut h = Vec::with_capacity(width);
        for i in 0..width {
            let merged = fwd[i] + rec[i];
            if l > 0 {
                sink.addition(1);
            }
            let pre = merged + layer.bias[i];
            sink.addition(1);
            let a = pre.tanh();
            sink.lut(1);
            h.push(a);
        }
        state.hidden[l] = h.clone();
        input = h;
    }
    output_unit_sunk(&input, params, sink)
}

/// Score a whole sequence from a zero initial state, one probability per
/// frame, each conditioned on the full prefix.
pub fn rnn_forward<R: Real>(seq: &[Vec<R>], params: &NetworkParams<R>) -> Result<Vec<R>> {
    let mut state = RnnState::zeros(params);
    seq.iter().map(|x| rnn_step(x, params, &mut state)).collect()
}

/// Serialized network form; numbers stored as f64, matrices row-major.
#[derive(Debug, Serialize, Deserialize)]
pub struct NetworkParamsFile {
    pub format_version: u32,
    pub kind: String,
    pub input_dim: usize,
    pub layers: usize,
    pub hidden: usize,
    pub activation: Activation,
    pub recurrent: bool,
    pub hidden_weights: Vec<Vec<f64>>,
    pub recurrent_weights: Option<Vec<Vec<f64>>>,
    pub hidden_biases: Vec<Vec<f64>>,
    pub output_weight: Vec<f64>,
    pub output_bias: f64,
}

/// Current network file format version.
pub const NETWORK_FORMAT_VERSION: u32 = 1;

impl<R: Real> NetworkParams<R> {
    pub fn to_file(&self) -> NetworkParamsFile {
        let row_major = |m: &Vec<Vec<R>>| m.iter().flatten().map(|v| v.as_f64()).collect();
        NetworkParamsFile {
            format_version: NETWORK_FORMAT_VERSION,
            kind: "network".into(),
            input_dim: self.input_dim,
            layers: self.layers(),
            hidden: self.hidden_width(),
            activation: self.activation,
            recurrent: self.is_recurrent(),
            hidden_weights: self.hidden.iter().map(|l| row_major(&l.weight)).collect(),
            recurrent_weights: self.is_recurrent().then(|| {
                self.hidden
                    .iter()
                    .map(|l| row_major(l.recurrent.as_ref().unwrap()))
                    .collect()
            }),
            hidden_biases: self
                .hidden
                .iter()
                .map(|l| l.bias.iter().map(|v| v.as_f64()).collect())
                .collect(),
            output_weight: self.output_weight.iter().map(|v| v.as_f64()).collect(),
            output_bias: self.output_bias.as_f64(),
        }
    }

    pub fn from_file(file: &NetworkParamsFile) -> Result<Self> {
        if file.format_version != NETWORK_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported network format version {}",
                file.format_version
            )));
        }
        if file.kind != "network" {
            return Err(Error::Format(format!(
                "expected kind \"network\", got {:?}",
                file.kind
            )));
        }
        let (l, h) = (file.layers, file.hidden);
        let unflatten = |flat: &Vec<f64>, rows: usize, cols: usize| -> Result<Vec<Vec<R>>> {
            if flat.len() != rows * cols {
                return Err(Error::Format("weight matrix size mismatch".into()));
            }
            Ok(flat
                .chunks(cols)
                .map(|row| row.iter().map(|&v| R::of(v)).collect())
                .collect())
        };
        let mut hidden = Vec::with_capacity(l);
        for i in 0..l {
            let fan_in = if i == 0 { file.input_dim } else { h };
            hidden.push(HiddenLayer {
                weight: unflatten(&file.hidden_weights[i], h, fan_in)?,
                recurrent: match &file.recurrent_weights {
                    Some(r) => Some(unflatten(&r[i], h, h)?),
                    None => None,
                },
                bias: file.hidden_biases[i].iter().map(|&v| R::of(v)).collect(),
            });
        }
        Ok(Self {
            input_dim: file.input_dim,
            hidden,
            output_weight: file.output_weight.iter().map(|&v| R::of(v)).collect(),
            output_bias: R::of(file.output_bias),
            activation: file.activation,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }
}
