//! Quantized inference for the multiply-add model families.
//!
//! Eligible families are the mixture pair, feed-forward nets and the
//! linear-kernel SVM. Parameters are quantized at export time with the
//! costly inversions precomputed: the mixture stores means, the square
//! root of each half-inverted variance, and per-component log
//! normalizers with the shared dimension constant folded out (it cancels
//! in the likelihood ratio).
//!
//! Parameters and stored activations live at the format's width;
//! accumulation runs in registers twice that wide (products through a
//! double-width intermediate), mirroring how DSP multiply-accumulate
//! units behave. Saturation - at the wide-register limit, or when a
//! value is written back to storage width - is recorded on the result,
//! never an error. Operation booking follows the same conventions as the
//! float kernels, so fixed and float tallies agree. Physical table reads
//! are counted separately: a ReLU is compare-and-select and touches no
//! table.

use crate::costmodel::ops::{OpCounter, OpSink};
use crate::costmodel::FrameModel;
use crate::error::{Error, Result};
use crate::eval::{eer_from_scores, ScoredFrames};
use crate::gmm::GmmScorerPair;
use crate::neural::{Activation, NetworkParams};
use crate::real::Real;
use crate::svm::{KernelSpec, SvmModel};

use super::{lut_build, quantize, Lut, LutFunction, QFormat};

/// Default table size for exported nonlinearities.
pub const DEFAULT_LUT_SIZE: usize = 1024;

/// Table size matched to a format's precision: finer fractional
/// resolution warrants finer tables, so the lookup error does not drown
/// the quantization error it sits next to.
pub fn lut_size_for(q: QFormat) -> usize {
    (1usize << q.fractional_bits.min(24)).clamp(DEFAULT_LUT_SIZE, 65_536)
}

const SIGMOID_DOMAIN: (f64, f64) = (-8.0, 8.0);
const LOG1P_EXP_DOMAIN: (f64, f64) = (-16.0, 0.0);

/// Qm.n arithmetic with double-width accumulators and a sticky
/// saturation flag.
struct FixedAlu {
    q: QFormat,
    saturated: bool,
}

impl FixedAlu {
    fn new(q: QFormat) -> Self {
        Self {
            q,
            saturated: false,
        }
    }

    fn wide(&mut self, v: i128) -> i64 {
        if v > i64::MAX as i128 {
            self.saturated = true;
            i64::MAX
        } else if v < i64::MIN as i128 {
            self.saturated = true;
            i64::MIN
        } else {
            v as i64
        }
    }

    fn add(&mut self, a: i64, b: i64) -> i64 {
        self.wide(a as i128 + b as i128)
    }

    fn sub(&mut self, a: i64, b: i64) -> i64 {
        self.wide(a as i128 - b as i128)
    }

    fn mul(&mut self, a: i64, b: i64) -> i64 {
        let n = self.q.fractional_bits as u32;
        let product = a as i128 * b as i128;
        let rounded = if n == 0 {
            product
        } else {
            (product + (1i128 << (n - 1))) >> n
        };
        self.wide(rounded)
    }

    /// Write an accumulator back to storage width.
    fn store(&mut self, v: i64) -> i64 {
        let (lo, hi) = (self.q.min_raw() as i64, self.q.max_raw() as i64);
        if v > hi {
            self.saturated = true;
            hi
        } else if v < lo {
            self.saturated = true;
            lo
        } else {
            v
        }
    }
}

/// A lookup table converted to raw fixed-point in and out.
#[derive(Debug, Clone)]
struct QLut {
    lo_raw: i32,
    hi_raw: i32,
    entries: Vec<i32>,
}

impl QLut {
    fn from_lut(lut: &Lut, q: QFormat) -> Self {
        let (lo, hi) = lut.domain();
        Self {
            lo_raw: quantize(lo, q),
            hi_raw: quantize(hi, q),
            entries: lut.entries().iter().map(|&v| quantize(v, q)).collect(),
        }
    }

    fn eval(&self, v_raw: i64, reads: &mut u64) -> i64 {
        *reads += 1;
        let v = v_raw.clamp(self.lo_raw as i64, self.hi_raw as i64);
        let span = ((self.hi_raw - self.lo_raw) as i64).max(1) as i128;
        let num = (v - self.lo_raw as i64) as i128;
        let size = self.entries.len() as i128;
        let idx = ((num * size + span / 2) / span).min(size - 1) as usize;
        self.entries[idx] as i64
    }
}

#[derive(Debug, Clone)]
struct QGmmHalf {
    /// Component-major means, then sqrt(1/(2 sigma)) scales, both m x d.
    means: Vec<i32>,
    scales: Vec<i32>,
    /// Per-component log weight plus half log-determinant (the shared
    /// dimension constant is folded out).
    log_norm: Vec<i32>,
}

#[derive(Debug, Clone)]
pub struct QuantizedGmm {
    pub(crate) components: usize,
    pub(crate) dim: usize,
    target: QGmmHalf,
    background: QGmmHalf,
    log1p_lut: QLut,
    pub(crate) lut_descriptor: (LutFunction, f64, f64, usize),
}

impl QuantizedGmm {
    pub(crate) fn target_raw(&self) -> (Vec<i32>, Vec<i32>, Vec<i32>) {
        (
            self.target.means.clone(),
            self.target.scales.clone(),
            self.target.log_norm.clone(),
        )
    }

    pub(crate) fn background_raw(&self) -> (Vec<i32>, Vec<i32>, Vec<i32>) {
        (
            self.background.means.clone(),
            self.background.scales.clone(),
            self.background.log_norm.clone(),
        )
    }

    /// Reassemble from decoded raw blocks; the lookup table is rebuilt by
    /// the caller from the stored descriptor.
    pub(crate) fn from_raw(
        components: usize,
        dim: usize,
        target: (Vec<i32>, Vec<i32>, Vec<i32>),
        background: (Vec<i32>, Vec<i32>, Vec<i32>),
        lut_descriptor: (LutFunction, f64, f64, usize),
    ) -> Self {
        Self {
            components,
            dim,
            target: QGmmHalf {
                means: target.0,
                scales: target.1,
                log_norm: target.2,
            },
            background: QGmmHalf {
                means: background.0,
                scales: background.1,
                log_norm: background.2,
            },
            log1p_lut: QLut {
                lo_raw: 0,
                hi_raw: 1,
                entries: vec![0, 0],
            },
            lut_descriptor,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QLayer {
    /// Row-major h x fan_in weights.
    pub(crate) weight: Vec<i32>,
    pub(crate) bias: Vec<i32>,
}

#[derive(Debug, Clone)]
pub struct QuantizedDnn {
    pub(crate) dim: usize,
    pub(crate) hidden: usize,
    pub(crate) relu: bool,
    pub(crate) layers: Vec<QLayer>,
    pub(crate) output_weight: Vec<i32>,
    pub(crate) output_bias: i32,
    sigmoid_lut: QLut,
    pub(crate) lut_descriptor: (LutFunction, f64, f64, usize),
}

impl QuantizedDnn {
    /// Reassemble from decoded raw blocks; the lookup table is rebuilt by
    /// the caller from the stored descriptor.
    pub(crate) fn from_raw(
        dim: usize,
        hidden: usize,
        relu: bool,
        layers: Vec<QLayer>,
        output_weight: Vec<i32>,
        output_bias: i32,
        lut_descriptor: (LutFunction, f64, f64, usize),
    ) -> Self {
        Self {
            dim,
            hidden,
            relu,
            layers,
            output_weight,
            output_bias,
            sigmoid_lut: QLut {
                lo_raw: 0,
                hi_raw: 1,
                entries: vec![0, 0],
            },
            lut_descriptor,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuantizedSvm {
    pub(crate) support_vectors: usize,
    pub(crate) dim: usize,
    /// Row-major sv x dim.
    pub(crate) vectors: Vec<i32>,
    pub(crate) coeffs: Vec<i32>,
    pub(crate) bias: i32,
}

/// A model exported to fixed point.
#[derive(Debug, Clone)]
pub enum QuantizedModel {
    Gmm {
        q: QFormat,
        gmm: QuantizedGmm,
    },
    Dnn {
        q: QFormat,
        dnn: QuantizedDnn,
    },
    SvmLinear {
        q: QFormat,
        svm: QuantizedSvm,
    },
}

impl QuantizedModel {
    pub fn q_format(&self) -> QFormat {
        match self {
            QuantizedModel::Gmm { q, .. }
            | QuantizedModel::Dnn { q, .. }
            | QuantizedModel::SvmLinear { q, .. } => *q,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            QuantizedModel::Gmm { gmm, .. } => gmm.dim,
            QuantizedModel::Dnn { dnn, .. } => dnn.dim,
            QuantizedModel::SvmLinear { svm, .. } => svm.dim,
        }
    }

    /// Export a mixture pair.
    pub fn from_gmm<R: Real>(
        pair: &GmmScorerPair<R>,
        q: QFormat,
        lut_size: usize,
    ) -> Result<Self> {
        let lut = lut_build(
            LutFunction::Log1pExp,
            LOG1P_EXP_DOMAIN.0,
            LOG1P_EXP_DOMAIN.1,
            lut_size,
        )?;
        let export_half = |params: &crate::gmm::GmmParams<R>| -> QGmmHalf {
            let mut means = Vec::new();
            let mut scales = Vec::new();
            let mut log_norm = Vec::new();
            for i in 0..params.components() {
                for d in 0..params.dim() {
                    means.push(quantize(params.means()[i][d].as_f64(), q));
                    let sigma = params.variances()[i][d].as_f64();
                    scales.push(quantize((0.5 / sigma).sqrt(), q));
                }
                let log_det: f64 = params.variances()[i]
                    .iter()
                    .map(|v| v.as_f64().ln())
                    .sum();
                log_norm.push(quantize(
                    params.weights()[i].as_f64().ln() - 0.5 * log_det,
                    q,
                ));
            }
            QGmmHalf {
                means,
                scales,
                log_norm,
            }
        };
        Ok(QuantizedModel::Gmm {
            q,
            gmm: QuantizedGmm {
                components: pair.target.components(),
                dim: pair.target.dim(),
                target: export_half(&pair.target),
                background: export_half(&pair.ubm),
                log1p_lut: QLut::from_lut(&lut, q),
                lut_descriptor: (
                    LutFunction::Log1pExp,
                    LOG1P_EXP_DOMAIN.0,
                    LOG1P_EXP_DOMAIN.1,
                    lut_size,
                ),
            },
        })
    }

    /// Export a feed-forward net (sigmoid or ReLU hidden units).
    pub fn from_dnn<R: Real>(net: &NetworkParams<R>, q: QFormat, lut_size: usize) -> Result<Self> {
        if net.is_recurrent() {
            return Err(Error::InvalidParameter(
                "recurrent nets are not part of the fixed-point path".into(),
            ));
        }
        let relu = match net.activation() {
            Activation::Relu => true,
            Activation::Sigmoid => false,
            Activation::Tanh => {
                return Err(Error::InvalidParameter(
                    "fixed-point nets support sigmoid or relu hidden units".into(),
                ))
            }
        };
        let lut = lut_build(
            LutFunction::Sigmoid,
            SIGMOID_DOMAIN.0,
            SIGMOID_DOMAIN.1,
            lut_size,
        )?;
        let layers = net
            .hidden_layers()
            .iter()
            .map(|layer| QLayer {
                weight: layer
                    .weight
                    .iter()
                    .flatten()
                    .map(|w| quantize(w.as_f64(), q))
                    .collect(),
                bias: layer.bias.iter().map(|b| quantize(b.as_f64(), q)).collect(),
            })
            .collect();
        Ok(QuantizedModel::Dnn {
            q,
            dnn: QuantizedDnn {
                dim: net.input_dim(),
                hidden: net.hidden_width(),
                relu,
                layers,
                output_weight: net
                    .output_weight()
                    .iter()
                    .map(|w| quantize(w.as_f64(), q))
                    .collect(),
                output_bias: quantize(net.output_bias().as_f64(), q),
                sigmoid_lut: QLut::from_lut(&lut, q),
                lut_descriptor: (
                    LutFunction::Sigmoid,
                    SIGMOID_DOMAIN.0,
                    SIGMOID_DOMAIN.1,
                    lut_size,
                ),
            },
        })
    }

    /// Export a linear-kernel SVM.
    pub fn from_svm_linear<R: Real>(model: &SvmModel<R>, q: QFormat) -> Result<Self> {
        if !matches!(model.kernel(), KernelSpec::Linear) {
            return Err(Error::InvalidParameter(
                "only the linear kernel is part of the fixed-point path".into(),
            ));
        }
        Ok(QuantizedModel::SvmLinear {
            q,
            svm: QuantizedSvm {
                support_vectors: model.num_support_vectors(),
                dim: model.dim(),
                vectors: model
                    .support_vectors()
                    .iter()
                    .flatten()
                    .map(|v| quantize(v.as_f64(), q))
                    .collect(),
                coeffs: model
                    .coeffs()
                    .iter()
                    .map(|c| quantize(c.as_f64(), q))
                    .collect(),
                bias: quantize(model.bias().as_f64(), q),
            },
        })
    }

    pub(crate) fn rebuild_luts(&mut self) -> Result<()> {
        match self {
            QuantizedModel::Gmm { q, gmm } => {
                let (f, lo, hi, size) = gmm.lut_descriptor;
                gmm.log1p_lut = QLut::from_lut(&lut_build(f, lo, hi, size)?, *q);
            }
            QuantizedModel::Dnn { q, dnn } => {
                let (f, lo, hi, size) = dnn.lut_descriptor;
                dnn.sigmoid_lut = QLut::from_lut(&lut_build(f, lo, hi, size)?, *q);
            }
            QuantizedModel::SvmLinear { .. } => {}
        }
        Ok(())
    }
}

/// Outcome of one fixed-point scoring call.
#[derive(Debug, Clone)]
pub struct FixedScore {
    pub raw: i64,
    /// Dequantized score.
    pub value: f64,
    pub ops: OpCounter,
    /// True when an accumulator or a storage write-back clipped.
    pub saturated: bool,
    /// Physical table reads (a ReLU performs none).
    pub lut_reads: u64,
}

/// Score one frame entirely in fixed point.
pub fn fixed_score(x: &[f64], model: &QuantizedModel) -> Result<FixedScore> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: x.len(),
        });
    }
    let q = model.q_format();
    let x_raw: Vec<i64> = x.iter().map(|&v| quantize(v, q) as i64).collect();
    let mut alu = FixedAlu::new(q);
    let mut ops = OpCounter::new();
    let mut reads = 0u64;

    let raw = match model {
        QuantizedModel::Gmm { gmm, .. } => {
            let target = gmm_half_ll(&gmm.target, gmm, &x_raw, &mut alu, &mut ops, &mut reads);
            let background =
                gmm_half_ll(&gmm.background, gmm, &x_raw, &mut alu, &mut ops, &mut reads);
            ops.lut(gmm.components as u64);
            alu.sub(target, background)
        }
        QuantizedModel::Dnn { dnn, .. } => dnn_fixed(dnn, &x_raw, &mut alu, &mut ops, &mut reads),
        QuantizedModel::SvmLinear { svm, .. } => svm_fixed(svm, &x_raw, &mut alu, &mut ops),
    };

    Ok(FixedScore {
        raw,
        value: raw as f64 / q.scale(),
        ops,
        saturated: alu.saturated,
        lut_reads: reads,
    })
}

fn gmm_half_ll(
    half: &QGmmHalf,
    gmm: &QuantizedGmm,
    x: &[i64],
    alu: &mut FixedAlu,
    ops: &mut OpCounter,
    reads: &mut u64,
) -> i64 {
    let d = gmm.dim;
    let mut acc = 0i64;
    for i in 0..gmm.components {
        let mut quad = 0i64;
        for j in 0..d {
            let at = i * d + j;
            let diff = alu.sub(x[j], half.means[at] as i64);
            ops.addition(1);
            let t = alu.mul(diff, half.scales[at] as i64);
            ops.multiplication(1);
            let sq = alu.mul(t, t);
            ops.multiplication(1);
            quad = alu.add(quad, sq);
        }
        let z = alu.sub(half.log_norm[i] as i64, quad);
        ops.addition(1);
        acc = if i == 0 {
            z
        } else {
            ops.comparison(1);
            // stable pairwise merge through the log1p-exp table
            let (hi, lo) = if acc >= z { (acc, z) } else { (z, acc) };
            let delta = alu.sub(lo, hi);
            let correction = gmm.log1p_lut.eval(delta, reads);
            alu.add(hi, correction)
        };
    }
    ops.addition(gmm.components as u64);
    acc
}

fn dnn_fixed(
    dnn: &QuantizedDnn,
    x: &[i64],
    alu: &mut FixedAlu,
    ops: &mut OpCounter,
    reads: &mut u64,
) -> i64 {
    let mut v = x.to_vec();
    for layer in &dnn.layers {
        let fan_in = v.len();
        let mut next = Vec::with_capacity(dnn.hidden);
        for row in 0..dnn.hidden {
            let mut acc = 0i64;
            for j in 0..fan_in {
                let p = alu.mul(layer.weight[row * fan_in + j] as i64, v[j]);
                ops.multiplication(1);
                acc = alu.add(acc, p);
                ops.addition(1);
            }
            acc = alu.add(acc, layer.bias[row] as i64);
            ops.addition(1);
            // activations are stored between layers at format width
            let out = if dnn.relu {
                ops.relu(1);
                alu.store(acc.max(0))
            } else {
                ops.lut(1);
                dnn.sigmoid_lut.eval(acc, reads)
            };
            next.push(out);
        }
        v = next;
    }
    let mut acc = 0i64;
    for j in 0..dnn.hidden {
        let p = alu.mul(dnn.output_weight[j] as i64, v[j]);
        ops.multiplication(1);
        acc = alu.add(acc, p);
        ops.addition(1);
    }
    acc = alu.add(acc, dnn.output_bias as i64);
    ops.addition(1);
    ops.lut(1);
    dnn.sigmoid_lut.eval(acc, reads)
}

fn svm_fixed(svm: &QuantizedSvm, x: &[i64], alu: &mut FixedAlu, ops: &mut OpCounter) -> i64 {
    let d = svm.dim;
    let mut score = 0i64;
    for i in 0..svm.support_vectors {
        let mut dot = 0i64;
        for j in 0..d {
            let p = alu.mul(svm.vectors[i * d + j] as i64, x[j]);
            ops.multiplication(1);
            dot = alu.add(dot, p);
            ops.addition(1);
        }
        let term = alu.mul(svm.coeffs[i] as i64, dot);
        score = alu.add(score, term);
        ops.addition(1);
    }
    score = alu.add(score, svm.bias as i64);
    ops.addition(1);
    score
}

/// Per-frame comparison of the float and fixed paths on one dataset.
#[derive(Debug, Clone)]
pub struct FloatFixedReport {
    pub max_abs_delta: f64,
    pub eer_float: f64,
    pub eer_fixed: f64,
    pub saturated_frames: usize,
    pub frames: usize,
}

/// Score every frame both ways and compare score deltas and EERs.
pub fn compare_float_fixed<R: Real>(
    frames: &[Vec<R>],
    labels: &[bool],
    float_model: &FrameModel<R>,
    quantized: &QuantizedModel,
) -> Result<FloatFixedReport> {
    if frames.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: frames.len(),
            actual: labels.len(),
        });
    }
    let mut float_scores = Vec::with_capacity(frames.len());
    let mut fixed_scores = Vec::with_capacity(frames.len());
    let mut max_abs_delta = 0.0f64;
    let mut saturated_frames = 0usize;
    for frame in frames {
        let float_score = match float_model {
            FrameModel::Gmm(pair) => pair.score(frame),
            FrameModel::Svm(model) => crate::svm::svm_score(frame, model)?,
            FrameModel::Dnn(net) => crate::neural::dnn_forward(frame, net)?,
            FrameModel::Rnn(_) => {
                return Err(Error::InvalidParameter(
                    "recurrent nets are not part of the fixed-point path".into(),
                ))
            }
        }
        .as_f64();
        let frame_f64: Vec<f64> = frame.iter().map(|v| v.as_f64()).collect();
        let fixed = fixed_score(&frame_f64, quantized)?;
        if fixed.saturated {
            saturated_frames += 1;
        }
        max_abs_delta = max_abs_delta.max((float_score - fixed.value).abs());
        float_scores.push(float_score);
        fixed_scores.push(fixed.value);
    }
    // the float likelihood ratio keeps the dimension constant on both
    // sides, the fixed export folds it out; both cancel, so scores are
    // directly comparable
    let eer_float = eer_from_scores(&ScoredFrames::new(float_scores, labels.to_vec())?)?;
    let eer_fixed = eer_from_scores(&ScoredFrames::new(fixed_scores, labels.to_vec())?)?;
    Ok(FloatFixedReport {
        max_abs_delta,
        eer_float: eer_float.eer_percent,
        eer_fixed: eer_fixed.eer_percent,
        saturated_frames,
        frames: frames.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{formula_ops, instrumented_score, ModelDescriptor};
    use crate::gmm::GmmParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q7(n: u8) -> QFormat {
        QFormat::new(7, n).unwrap()
    }

    fn small_pair(rng: &mut ChaCha8Rng, m: usize, d: usize) -> GmmScorerPair<f64> {
        let mut make = |offset: f64| {
            let mut weights = vec![1.0 / m as f64; m];
            let fix: f64 = 1.0 - weights.iter().sum::<f64>();
            weights[0] += fix;
            GmmParams::new(
                weights,
                (0..m)
                    .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0) + offset).collect())
                    .collect(),
                (0..m)
                    .map(|_| (0..d).map(|_| rng.gen_range(0.4..1.2)).collect())
                    .collect(),
            )
            .unwrap()
        };
        GmmScorerPair::new(make(0.8), make(-0.8)).unwrap()
    }

    #[test]
    fn zero_weight_relu_net_scores_exactly_half() {
        let mut net =
            NetworkParams::<f64>::new_dnn(4, 2, 3, Activation::Relu, 0).unwrap();
        let zeros = vec![0.0; net.num_params()];
        net.set_from_flat(&zeros);
        let quantized = QuantizedModel::from_dnn(&net, q7(24), DEFAULT_LUT_SIZE).unwrap();
        let fixed = fixed_score(&[0.1, -0.2, 0.3, 0.0], &quantized).unwrap();
        assert_eq!(fixed.value, 0.5);
        assert!(!fixed.saturated);
        let float = crate::neural::dnn_forward(&[0.1, -0.2, 0.3, 0.0], &net).unwrap();
        assert_eq!(fixed.value, float);
    }

    #[test]
    fn relu_hidden_layers_touch_no_table() {
        let net = NetworkParams::<f64>::new_dnn(6, 3, 5, Activation::Relu, 1).unwrap();
        let quantized = QuantizedModel::from_dnn(&net, q7(15), DEFAULT_LUT_SIZE).unwrap();
        let fixed = fixed_score(&vec![0.2; 6], &quantized).unwrap();
        // only the output sigmoid reads the table
        assert_eq!(fixed.lut_reads, 1);
        // sigmoid hidden units read once per unit per layer
        let net_s = NetworkParams::<f64>::new_dnn(6, 3, 5, Activation::Sigmoid, 1).unwrap();
        let quantized_s = QuantizedModel::from_dnn(&net_s, q7(15), DEFAULT_LUT_SIZE).unwrap();
        let fixed_s = fixed_score(&vec![0.2; 6], &quantized_s).unwrap();
        assert_eq!(fixed_s.lut_reads, 3 * 5 + 1);
    }

    #[test]
    fn gmm_scalar_fixed_tracks_float_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pair = small_pair(&mut rng, 1, 1);
        let prepared = pair.prepared();
        let quantized = QuantizedModel::from_gmm(&pair, q7(24), DEFAULT_LUT_SIZE).unwrap();
        for _ in 0..50 {
            let x = vec![rng.gen_range(-2.0..2.0)];
            let float = prepared.score(&x);
            let fixed = fixed_score(&x, &quantized).unwrap();
            // quantization of ~3 products per dim and the table merge;
            // an interval bound of a few dozen LSBs is generous
            let bound = 64.0 * q7(24).resolution() + 2e-4;
            assert!(
                (float - fixed.value).abs() <= bound,
                "float {float} fixed {} gap {}",
                fixed.value,
                (float - fixed.value).abs()
            );
        }
    }

    #[test]
    fn fixed_op_count_equals_float_op_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // mixture pair
        let pair = small_pair(&mut rng, 4, 6);
        let prepared = pair.prepared();
        let quantized = QuantizedModel::from_gmm(&pair, q7(11), 256).unwrap();
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, float_ops) = instrumented_score(&x, &FrameModel::Gmm(&prepared)).unwrap();
        let fixed = fixed_score(&x, &quantized).unwrap();
        assert_eq!(fixed.ops.table_count(), float_ops.table_count());
        assert_eq!(
            fixed.ops.table_count(),
            formula_ops(&ModelDescriptor::Gmm {
                components: 4,
                dim: 6
            })
        );

        // both net activations
        for act in [Activation::Sigmoid, Activation::Relu] {
            let net = NetworkParams::<f64>::new_dnn(6, 2, 5, act, 4).unwrap();
            let qnet = QuantizedModel::from_dnn(&net, q7(11), 256).unwrap();
            let (_, float_ops) = instrumented_score(&x, &FrameModel::Dnn(&net)).unwrap();
            let fixed = fixed_score(&x, &qnet).unwrap();
            assert_eq!(fixed.ops.table_count(), float_ops.table_count());
        }

        // linear svm
        let svm = SvmModel::new(
            (0..7)
                .map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
            (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            0.25,
            KernelSpec::Linear,
        )
        .unwrap();
        let qsvm = QuantizedModel::from_svm_linear(&svm, q7(11)).unwrap();
        let (_, float_ops) = instrumented_score(&x, &FrameModel::Svm(&svm)).unwrap();
        let fixed = fixed_score(&x, &qsvm).unwrap();
        assert_eq!(fixed.ops.table_count(), float_ops.table_count());
    }

    #[test]
    fn aggressive_quantization_reports_instead_of_crashing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pair = small_pair(&mut rng, 2, 3);
        let quantized =
            QuantizedModel::from_gmm(&pair, QFormat::new(3, 3).unwrap(), 64).unwrap();
        let frames: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let labels: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let prepared = pair.prepared();
        let report =
            compare_float_fixed(&frames, &labels, &FrameModel::Gmm(&prepared), &quantized)
                .unwrap();
        assert!(report.max_abs_delta.is_finite());
        assert_eq!(report.frames, 20);
    }

    #[test]
    fn comparison_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pair = small_pair(&mut rng, 2, 4);
        let prepared = pair.prepared();
        let quantized = QuantizedModel::from_gmm(&pair, q7(15), 512).unwrap();
        let frames: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let a = compare_float_fixed(&frames, &labels, &FrameModel::Gmm(&prepared), &quantized)
            .unwrap();
        let b = compare_float_fixed(&frames, &labels, &FrameModel::Gmm(&prepared), &quantized)
            .unwrap();
        assert_eq!(a.max_abs_delta, b.max_abs_delta);
        assert_eq!(a.eer_float, b.eer_float);
        assert_eq!(a.eer_fixed, b.eer_fixed);
    }

    #[test]
    fn score_gap_shrinks_as_fractional_bits_grow() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = NetworkParams::<f64>::new_dnn(5, 2, 6, Activation::Sigmoid, 8).unwrap();
        let frames: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..5).map(|_| rng.gen_range(-1.5..1.5)).collect())
            .collect();
        let labels: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let mut previous = f64::INFINITY;
        for n in [7u8, 11, 15, 24] {
            let quantized =
                QuantizedModel::from_dnn(&net, q7(n), lut_size_for(q7(n))).unwrap();
            let report =
                compare_float_fixed(&frames, &labels, &FrameModel::Dnn(&net), &quantized)
                    .unwrap();
            assert!(
                report.max_abs_delta <= previous + 1e-12,
                "n={n}: {} after {previous}",
                report.max_abs_delta
            );
            previous = report.max_abs_delta;
        }
        assert!(previous < 1e-3, "finest format still off by {previous}");
    }
}
