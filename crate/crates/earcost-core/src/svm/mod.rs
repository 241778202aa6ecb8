//! Soft-margin binary SVM scoring and training.
//!
//! Scores are the raw margin value: the weighted kernel sum over support
//! vectors plus the bias, with no sign taken. Classification thresholds
//! the score at zero, ties counting as positive.

pub mod select;
pub mod smo;

use serde::{Deserialize, Serialize};

use crate::costmodel::ops::{NullSink, OpSink};
use crate::error::{Error, Result};
use crate::real::Real;

pub use select::{
    default_c_grid, default_kernel_grid, default_t_grid, select_svm, SvmGridPoint, SvmSelection,
};
pub use smo::{downsample_training, kkt_max_violation, smo_train, SmoConfig, TrainedSvm};

/// Kernel family with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec<R> {
    Linear,
    /// (x . y)^degree
    Polynomial { degree: u32 },
    /// exp(-gamma |x - y|^2)
    Rbf { gamma: R },
    /// tanh(x . y), no offset or scale
    Sigmoid,
}

impl<R: Real> KernelSpec<R> {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Polynomial { degree } if *degree < 1 => Err(Error::InvalidParameter(
                "polynomial degree must be at least 1".into(),
            )),
            KernelSpec::Rbf { gamma } if *gamma <= R::zero() => Err(Error::InvalidParameter(
                "rbf gamma must be positive".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Polynomial { .. } => "polynomial",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Sigmoid => "sigmoid",
        }
    }
}

/// Support vectors, their signed multipliers, the bias and the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<R> {
    support_vectors: Vec<Vec<R>>,
    coeffs: Vec<R>,
    bias: R,
    kernel: KernelSpec<R>,
}

impl<R: Real> SvmModel<R> {
    pub fn new(
        support_vectors: Vec<Vec<R>>,
        coeffs: Vec<R>,
        bias: R,
        kernel: KernelSpec<R>,
    ) -> Result<Self> {
        kernel.validate()?;
        if support_vectors.is_empty() {
            return Err(Error::InvalidParameter(
                "a model needs at least one support vector".into(),
            ));
        }
        if support_vectors.len() != coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: support_vectors.len(),
                actual: coeffs.len(),
            });
        }
        let dim = support_vectors[0].len();
        if dim == 0 || support_vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidParameter("ragged support vectors".into()));
        }
        Ok(Self {
            support_vectors,
            coeffs,
            bias,
            kernel,
        })
    }

    pub fn support_vectors(&self) -> &[Vec<R>] {
        &self.support_vectors
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    pub fn bias(&self) -> R {
        self.bias
    }

    pub fn kernel(&self) -> &KernelSpec<R> {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.support_vectors[0].len()
    }

    pub fn num_support_vectors(&self) -> usize {
        self.support_vectors.len()
    }
}

/// Kernel value for one pair of vectors.
pub fn kernel_eval<R: Real>(spec: &KernelSpec<R>, x: &[R], y: &[R]) -> R {
    kernel_eval_sunk(spec, x, y, &mut NullSink)
}

/// Kernel evaluation with operation events reported to `sink`.
///
/// Dot products book one multiplication and one accumulation per
/// dimension. The polynomial power books `degree` multiplications, the
/// RBF books the squared distance as two additions and one multiplication
/// per dimension plus the gamma scaling, and the transcendental kernels
/// book one table lookup each.
pub fn kernel_eval_sunk<R: Real, S: OpSink>(
    spec: &KernelSpec<R>,
    x: &[R],
    y: &[R],
    sink: &mut S,
) -> R {
    debug_assert_eq!(x.len(), y.len());
    match *spec {
        KernelSpec::Linear => dot_sunk(x, y, sink),
        KernelSpec::Polynomial { degree } => {
            let base = dot_sunk(x, y, sink);
            let mut value = R::one();
            for _ in 0..degree {
                value = value * base;
                sink.multiplication(1);
            }
            value
        }
        KernelSpec::Rbf { gamma } => {
            let mut dist_sq = R::zero();
            for d in 0..x.len() {
                let diff = x[d] - y[d];
                sink.addition(1);
                let sq = diff * diff;
                sink.multiplication(1);
                dist_sq = dist_sq + sq;
                sink.addition(1);
            }
            let scaled = dist_sq * -gamma;
            sink.multiplication(1);
            let value = scaled.exp();
            sink.lut(1);
            value
        }
        KernelSpec::Sigmoid => {
            let dot = dot_sunk(x, y, sink);
            let value = dot.tanh();
            sink.lut(1);
            value
        }
    }
}

fn dot_sunk<R: Real, S: OpSink>(x: &[R], y: &[R], sink: &mut S) -> R {
    let mut acc = R::zero();
    for d in 0..x.len() {
        let p = x[d] * y[d];
        sink.multiplication(1);
        acc = acc + p;
        sink.addition(1);
    }
    acc
}

/// Raw decision value: weighted kernel sum plus bias, no sign taken.
pub fn svm_score<R: Real>(x: &[R], model: &SvmModel<R>) -> Result<R> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.len(),
        });
    }
    Ok(svm_score_sunk(x, model, &mut NullSink))
}

/// Score with operation events reported to `sink`.
///
/// Folding a support vector's kernel value into the running score books
/// one addition; for the transcendental kernels the multiplier scaling is
/// booked as a multiplication, for the linear and polynomial kernels it
/// rides the fold. The bias books the final addition.
pub fn svm_score_sunk<R: Real, S: OpSink>(x: &[R], model: &SvmModel<R>, sink: &mut S) -> R {
    let books_coeff_multiply = matches!(
        model.kernel,
        KernelSpec::Rbf { .. } | KernelSpec::Sigmoid
    );
    let mut score = R::zero();
    for (sv, &coeff) in model.support_vectors.iter().zip(&model.coeffs) {
        let k = kernel_eval_sunk(&model.kernel, x, sv, sink);
        if books_coeff_multiply {
            sink.multiplication(1);
        }
        score = score + coeff * k;
        sink.addition(1);
    }
    score = score + model.bias;
    sink.addition(1);
    score
}

/// Hard decision: sign of the score, with a zero score counting as +1.
pub fn svm_classify<R: Real>(x: &[R], model: &SvmModel<R>) -> Result<i8> {
    Ok(if svm_score(x, model)? >= R::zero() { 1 } else { -1 })
}

/// Serialized form of [`SvmModel`]; numbers stored as f64.
#[derive(Debug, Serialize, Deserialize)]
pub struct SvmModelFile {
    pub format_version: u32,
    pub kind: String,
    pub kernel: KernelSpec<f64>,
    pub num_support_vectors: usize,
    pub dim: usize,
    pub support_vectors: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    pub bias: f64,
}

/// Current SVM file format version.
pub const SVM_FORMAT_VERSION: u32 = 1;

impl<R: Real> SvmModel<R> {
    pub fn to_file(&self) -> SvmModelFile {
        let kernel = match self.kernel {
            KernelSpec::Linear => KernelSpec::Linear,
            KernelSpec::Polynomial { degree } => KernelSpec::Polynomial { degree },
            KernelSpec::Rbf { gamma } => KernelSpec::Rbf {
                gamma: gamma.as_f64(),
            },
            KernelSpec::Sigmoid => KernelSpec::Sigmoid,
        };
        SvmModelFile {
            format_version: SVM_FORMAT_VERSION,
            kind: "svm".into(),
            kernel,
            num_support_vectors: self.num_support_vectors(),
            dim: self.dim(),
            support_vectors: self
                .support_vectors
                .iter()
                .map(|v| v.iter().map(|c| c.as_f64()).collect())
                .collect(),
            coeffs: self.coeffs.iter().map(|c| c.as_f64()).collect(),
            bias: self.bias.as_f64(),
        }
    }

    pub fn from_file(file: &SvmModelFile) -> Result<Self> {
        if file.format_version != SVM_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported svm format version {}",
                file.format_version
            )));
        }
        if file.kind != "svm" {
            return Err(Error::Format(format!("expected kind \"svm\", got {:?}", file.kind)));
        }
        let kernel = match file.kernel {
            KernelSpec::Linear => KernelSpec::Linear,
            KernelSpec::Polynomial { degree } => KernelSpec::Polynomial { degree },
            KernelSpec::Rbf { gamma } => KernelSpec::Rbf { gamma: R::of(gamma) },
            KernelSpec::Sigmoid => KernelSpec::Sigmoid,
        };
        let model = Self::new(
            file.support_vectors
                .iter()
                .map(|v| v.iter().map(|&c| R::of(c)).collect())
                .collect(),
            file.coeffs.iter().map(|&c| R::of(c)).collect(),
            R::of(file.bias),
            kernel,
        )?;
        if model.num_support_vectors() != file.num_support_vectors || model.dim() != file.dim {
            return Err(Error::Format("svm header does not match payload".into()));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }
}
