//! Instrumented inference and formula-versus-measured verification.
//!
//! The same scoring kernels used for plain inference run here with a
//! counting sink attached, so the measured tallies are the executed
//! dataflow, not a re-derivation. Scores are bit-identical to the plain
//! paths because the arithmetic is shared.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gmm::{GmmParams, GmmScorerPair, PreparedPair};
use crate::neural::{
    dnn_forward_sunk, rnn_step_sunk, Activation, NetworkParams, RnnState,
};
use crate::real::Real;
use crate::svm::{svm_score_sunk, KernelSpec, SvmModel};

use super::descriptor::{formula_ops, ModelDescriptor};
use super::ops::{OpCount, OpCounter};

/// A scorable model for per-frame instrumentation. Recurrent nets are
/// measured over a single time step (the steady-state per-frame cost).
pub enum FrameModel<'a, R: Real> {
    Gmm(&'a PreparedPair<R>),
    Svm(&'a SvmModel<R>),
    Dnn(&'a NetworkParams<R>),
    Rnn(&'a NetworkParams<R>),
}

impl<'a, R: Real> FrameModel<'a, R> {
    pub fn input_dim(&self) -> usize {
        match self {
            FrameModel::Gmm(pair) => pair.dim(),
            FrameModel::Svm(model) => model.dim(),
            FrameModel::Dnn(net) | FrameModel::Rnn(net) => net.input_dim(),
        }
    }

    /// Descriptor of this concrete model, when its shape matches a cost
    /// row (mixture pairs must have equal component counts).
    pub fn descriptor(&self) -> Result<ModelDescriptor> {
        match self {
            FrameModel::Gmm(pair) => {
                if pair.target.components() != pair.ubm.components() {
                    return Err(Error::InvalidParameter(
                        "cost row requires target and background of equal size".into(),
                    ));
                }
                Ok(ModelDescriptor::Gmm {
                    components: pair.target.components() as u64,
                    dim: pair.dim() as u64,
                })
            }
            FrameModel::Svm(model) => {
                let support_vectors = model.num_support_vectors() as u64;
                let dim = model.dim() as u64;
                Ok(match model.kernel() {
                    KernelSpec::Linear => ModelDescriptor::SvmLinear {
                        support_vectors,
                        dim,
                    },
                    KernelSpec::Polynomial { degree } => ModelDescriptor::SvmPolynomial {
                        support_vectors,
                        dim,
                        degree: *degree as u64,
                    },
                    KernelSpec::Rbf { .. } => ModelDescriptor::SvmRbf {
                        support_vectors,
                        dim,
                    },
                    KernelSpec::Sigmoid => ModelDescriptor::SvmSigmoid {
                        support_vectors,
                        dim,
                    },
                })
            }
            FrameModel::Dnn(net) => {
                let (layers, hidden, dim) = (
                    net.layers() as u64,
                    net.hidden_width() as u64,
                    net.input_dim() as u64,
                );
                Ok(match net.activation() {
                    Activation::Sigmoid => ModelDescriptor::DnnSigmoid { layers, hidden, dim },
                    Activation::Relu => ModelDescriptor::DnnRelu { layers, hidden, dim },
                    Activation::Tanh => {
                        return Err(Error::InvalidParameter(
                            "tanh feed-forward nets have no cost row".into(),
                        ))
                    }
                })
            }
            FrameModel::Rnn(net) => Ok(ModelDescriptor::RnnTanh {
                layers: net.layers() as u64,
                hidden: net.hidden_width() as u64,
                dim: net.input_dim() as u64,
            }),
        }
    }
}

/// Score one frame while tallying every executed operation.
pub fn instrumented_score<R: Real>(x: &[R], model: &FrameModel<R>) -> Result<(R, OpCounter)> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: x.len(),
        });
    }
    let mut counter = OpCounter::new();
    let score = match model {
        FrameModel::Gmm(pair) => pair.score_sunk(x, &mut counter),
        FrameModel::Svm(svm) => svm_score_sunk(x, svm, &mut counter),
        FrameModel::Dnn(net) => dnn_forward_sunk(x, net, &mut counter),
        FrameModel::Rnn(net) => {
            let mut state = RnnState::zeros(net);
            rnn_step_sunk(x, net, &mut state, &mut counter)
        }
    };
    Ok((score, counter))
}

/// One formula-versus-instrumented comparison.
#[derive(Debug, Clone)]
pub struct CostCheck {
    pub descriptor: ModelDescriptor,
    pub formula: OpCount,
    pub instrumented: OpCount,
}

impl CostCheck {
    pub fn matches(&self) -> bool {
        self.formula == self.instrumented
    }
}

/// The verification sweep's outcome.
#[derive(Debug, Clone, Default)]
pub struct CostReport {
    pub checks: Vec<CostCheck>,
}

impl CostReport {
    pub fn mismatches(&self) -> Vec<&CostCheck> {
        self.checks.iter().filter(|c| !c.matches()).collect()
    }

    pub fn all_match(&self) -> bool {
        self.checks.iter().all(CostCheck::matches)
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:>6} {:>5} | {:>30} | {:>30} | status",
            "family", "size", "dim", "formula", "instrumented"
        )?;
        for check in &self.checks {
            writeln!(
                f,
                "{:<12} {:>6} {:>5} | {:>30} | {:>30} | {}",
                check.descriptor.family_name(),
                check.descriptor.size_parameter(),
                check.descriptor.dim(),
                check.formula.to_string(),
                check.instrumented.to_string(),
                if check.matches() { "ok" } else { "MISMATCH" }
            )?;
        }
        let bad = self.mismatches().len();
        writeln!(f, "{} checks, {} mismatches", self.checks.len(), bad)
    }
}

/// A synthetic model realizing a descriptor, for measurement.
pub enum SyntheticModel<R: Real> {
    Gmm(Box<PreparedPair<R>>),
    Svm(SvmModel<R>),
    Net(NetworkParams<R>),
    RecurrentNet(NetworkParams<R>),
}

impl<R: Real> SyntheticModel<R> {
    pub fn as_frame_model(&self) -> FrameModel<'_, R> {
        match self {
            SyntheticModel::Gmm(pair) => FrameModel::Gmm(pair),
            SyntheticModel::Svm(model) => FrameModel::Svm(model),
            SyntheticModel::Net(net) => FrameModel::Dnn(net),
            SyntheticModel::RecurrentNet(net) => FrameModel::Rnn(net),
        }
    }
}

/// Build a random but valid model with exactly the descriptor's shape.
pub fn synthesize_model<R: Real>(desc: &ModelDescriptor, rng_seed: u64) -> Result<SyntheticModel<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    match *desc {
        ModelDescriptor::Gmm { components, dim } => {
            let make = |rng: &mut ChaCha8Rng| -> Result<GmmParams<R>> {
                let m = components as usize;
                let d = dim as usize;
                let mut weights = vec![1.0 / m as f64; m];
                let correction: f64 = 1.0 - weights.iter().sum::<f64>();
                weights[0] += correction;
                GmmParams::new(
                    weights.into_iter().map(R::of).collect(),
                    (0..m)
                        .map(|_| (0..d).map(|_| R::of(rng.gen_range(-1.0..1.0))).collect())
                        .collect(),
                    (0..m)
                        .map(|_| (0..d).map(|_| R::of(rng.gen_range(0.5..1.5))).collect())
                        .collect(),
                )
            };
            let pair = GmmScorerPair::new(make(&mut rng)?, make(&mut rng)?)?;
            Ok(SyntheticModel::Gmm(Box::new(pair.prepared())))
        }
        ModelDescriptor::SvmLinear { support_vectors, dim }
        | ModelDescriptor::SvmPolynomial { support_vectors, dim, .. }
        | ModelDescriptor::SvmRbf { support_vectors, dim }
        | ModelDescriptor::SvmSigmoid { support_vectors, dim } => {
            let kernel = match *desc {
                ModelDescriptor::SvmLinear { .. } => KernelSpec::Linear,
                ModelDescriptor::SvmPolynomial { degree, .. } => KernelSpec::Polynomial {
                    degree: degree as u32,
                },
                ModelDescriptor::SvmRbf { .. } => KernelSpec::Rbf { gamma: R::of(0.01) },
                _ => KernelSpec::Sigmoid,
            };
            let sv = support_vectors as usize;
            let d = dim as usize;
            let model = SvmModel::new(
                (0..sv)
                    .map(|_| (0..d).map(|_| R::of(rng.gen_range(-1.0..1.0))).collect())
                    .collect(),
                (0..sv).map(|_| R::of(rng.gen_range(-1.0..1.0))).collect(),
                R::of(rng.gen_range(-0.5..0.5)),
                kernel,
            )?;
            Ok(SyntheticModel::Svm(model))
        }
        ModelDescriptor::DnnSigmoid { layers, hidden, dim } => Ok(SyntheticModel::Net(
            NetworkParams::new_dnn(
                dim as usize,
                layers as usize,
                hidden as usize,
                Activation::Sigmoid,
                rng_seed,
            )?,
        )),
        ModelDescriptor::DnnRelu { layers, hidden, dim } => Ok(SyntheticModel::Net(
            NetworkParams::new_dnn(
                dim as usize,
                layers as usize,
                hidden as usize,
                Activation::Relu,
                rng_seed,
            )?,
        )),
        ModelDescriptor::RnnTanh { layers, hidden, dim } => Ok(SyntheticModel::RecurrentNet(
            NetworkParams::new_rnn(dim as usize, layers as usize, hidden as usize, rng_seed)?,
        )),
    }
}

/// Measure one descriptor against its formula.
pub fn verify_descriptor<R: Real>(desc: &ModelDescriptor, rng_seed: u64) -> Result<CostCheck> {
    let model = synthesize_model::<R>(desc, rng_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0xfeed);
    let x: Vec<R> = (0..desc.dim() as usize)
        .map(|_| R::of(rng.gen_range(-1.0..1.0)))
        .collect();
    let (_, counter) = instrumented_score(&x, &model.as_frame_model())?;
    Ok(CostCheck {
        descriptor: *desc,
        formula: formula_ops(desc),
        instrumented: counter.table_count(),
    })
}

/// Measure every descriptor in a grid.
pub fn verify_costs<R: Real>(descriptors: &[ModelDescriptor], rng_seed: u64) -> Result<CostReport> {
    let mut checks = Vec::with_capacity(descriptors.len());
    for (i, desc) in descriptors.iter().enumerate() {
        checks.push(verify_descriptor::<R>(desc, rng_seed.wrapping_add(i as u64))?);
    }
    Ok(CostReport { checks })
}

/// The full verification grid: every family, both feature widths, mixture
/// sizes 1..1024, the reference support-vector counts, and the network
/// architecture grid.
pub fn default_verification_sweep() -> Vec<ModelDescriptor> {
    let mut sweep = Vec::new();
    for &dim in &[18u64, 54] {
        for k in 0..=10u32 {
            sweep.push(ModelDescriptor::Gmm {
                components: 1 << k,
                dim,
            });
        }
        for &sv in &[1u64, 152, 655] {
            sweep.push(ModelDescriptor::SvmLinear {
                support_vectors: sv,
                dim,
            });
            for degree in [2, 3] {
                sweep.push(ModelDescriptor::SvmPolynomial {
                    support_vectors: sv,
                    dim,
                    degree,
                });
            }
            sweep.push(ModelDescriptor::SvmRbf {
                support_vectors: sv,
                dim,
            });
            sweep.push(ModelDescriptor::SvmSigmoid {
                support_vectors: sv,
                dim,
            });
        }
        for &layers in &[1u64, 2, 3, 4] {
            for &hidden in &[10u64, 25, 50, 100, 150] {
                sweep.push(ModelDescriptor::DnnSigmoid { layers, hidden, dim });
                sweep.push(ModelDescriptor::DnnRelu { layers, hidden, dim });
            }
        }
        for &layers in &[1u64, 2, 3] {
            for &hidden in &[10u64, 25, 50, 100, 150] {
                sweep.push(ModelDescriptor::RnnTanh { layers, hidden, dim });
            }
        }
    }
    sweep
}
