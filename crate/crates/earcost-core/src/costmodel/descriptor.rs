//! Analytical per-frame operation counts for every model family.
//!
//! `formula_ops` evaluates the planner's closed-form cost rows. For the
//! mixture family the row covers the full likelihood-ratio evaluation
//! (target and background model of M components each), with the
//! log-domain cumulation booked as M additions per model and M lookups
//! for the pair.

use serde::{Deserialize, Serialize};

use super::ops::OpCount;

/// A model family together with the size parameters its cost row needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelDescriptor {
    /// Likelihood-ratio pair of two M-component diagonal mixtures.
    Gmm { components: u64, dim: u64 },
    SvmLinear { support_vectors: u64, dim: u64 },
    SvmPolynomial {
        support_vectors: u64,
        dim: u64,
        degree: u64,
    },
    SvmRbf { support_vectors: u64, dim: u64 },
    SvmSigmoid { support_vectors: u64, dim: u64 },
    DnnSigmoid { layers: u64, hidden: u64, dim: u64 },
    DnnRelu { layers: u64, hidden: u64, dim: u64 },
    RnnTanh { layers: u64, hidden: u64, dim: u64 },
}

impl ModelDescriptor {
    pub fn family_name(&self) -> &'static str {
        match self {
            ModelDescriptor::Gmm { .. } => "gmm",
            ModelDescriptor::SvmLinear { .. } => "svm-linear",
            ModelDescriptor::SvmPolynomial { .. } => "svm-poly",
            ModelDescriptor::SvmRbf { .. } => "svm-rbf",
            ModelDescriptor::SvmSigmoid { .. } => "svm-sigmoid",
            ModelDescriptor::DnnSigmoid { .. } => "dnn-sigmoid",
            ModelDescriptor::DnnRelu { .. } => "dnn-relu",
            ModelDescriptor::RnnTanh { .. } => "rnn-tanh",
        }
    }

    pub fn dim(&self) -> u64 {
        match *self {
            ModelDescriptor::Gmm { dim, .. }
            | ModelDescriptor::SvmLinear { dim, .. }
            | ModelDescriptor::SvmPolynomial { dim, .. }
            | ModelDescriptor::SvmRbf { dim, .. }
            | ModelDescriptor::SvmSigmoid { dim, .. }
            | ModelDescriptor::DnnSigmoid { dim, .. }
            | ModelDescriptor::DnnRelu { dim, .. }
            | ModelDescriptor::RnnTanh { dim, .. } => dim,
        }
    }

    /// The size knob the family scales with (M, lambda, or H).
    pub fn size_parameter(&self) -> u64 {
        match *self {
            ModelDescriptor::Gmm { components, .. } => components,
            ModelDescriptor::SvmLinear { support_vectors, .. }
            | ModelDescriptor::SvmPolynomial { support_vectors, .. }
            | ModelDescriptor::SvmRbf { support_vectors, .. }
            | ModelDescriptor::SvmSigmoid { support_vectors, .. } => support_vectors,
            ModelDescriptor::DnnSigmoid { hidden, .. }
            | ModelDescriptor::DnnRelu { hidden, .. }
            | ModelDescriptor::RnnTanh { hidden, .. } => hidden,
        }
    }

    /// Number of stored parameters (used for memory sizing).
    pub fn parameter_count(&self) -> u64 {
        match *self {
            // two mixtures, each M x (mean + variance per dim, one weight)
            ModelDescriptor::Gmm { components: m, dim: d } => 2 * m * (2 * d + 1),
            ModelDescriptor::SvmLinear { support_vectors: sv, dim: d }
            | ModelDescriptor::SvmPolynomial { support_vectors: sv, dim: d, .. }
            | ModelDescriptor::SvmRbf { support_vectors: sv, dim: d }
            | ModelDescriptor::SvmSigmoid { support_vectors: sv, dim: d } => sv * (d + 1) + 1,
            ModelDescriptor::DnnSigmoid { layers: l, hidden: h, dim: d }
            | ModelDescriptor::DnnRelu { layers: l, hidden: h, dim: d } => {
                h * (d + 1) + (l - 1) * (h * h + h) + h + 1
            }
            ModelDescriptor::RnnTanh { layers: l, hidden: h, dim: d } => {
                h * (d + 1) + h * h + (l - 1) * (2 * h * h + h) + h + 1
            }
        }
    }
}

/// Closed-form per-frame cost of a descriptor, in the planner's
/// convention: every nonlinearity is a LUT lookup and comparisons are
/// not booked.
pub fn formula_ops(desc: &ModelDescriptor) -> OpCount {
    match *desc {
        ModelDescriptor::Gmm { components: m, dim: d } => OpCount {
            additions: 2 * (m * (d + 1) + m),
            multiplications: 2 * m * 2 * d,
            lut_lookups: m,
            comparisons: 0,
        },
        ModelDescriptor::SvmLinear { support_vectors: sv, dim: d } => OpCount {
            additions: sv * d + sv + 1,
            multiplications: sv * d,
            lut_lookups: 0,
            comparisons: 0,
        },
        ModelDescriptor::SvmPolynomial {
            support_vectors: sv,
            dim: d,
            degree,
        } => OpCount {
            additions: sv * d + sv + 1,
            multiplications: sv * (d + degree),
            lut_lookups: 0,
            comparisons: 0,
        },
        ModelDescriptor::SvmRbf { support_vectors: sv, dim: d } => OpCount {
            additions: 2 * sv * d + sv + 1,
            multiplications: sv * (d + 2),
            lut_lookups: sv,
            comparisons: 0,
        },
        ModelDescriptor::SvmSigmoid { support_vectors: sv, dim: d } => OpCount {
            additions: sv * d + sv + 1,
            multiplications: sv * (d + 1),
            lut_lookups: sv,
            comparisons: 0,
        },
        ModelDescriptor::DnnSigmoid { layers: l, hidden: h, dim: d }
        | ModelDescriptor::DnnRelu { layers: l, hidden: h, dim: d } => OpCount {
            additions: h * (1 + d + l + (l - 1) * h) + 1,
            multiplications: h * (1 + d + (l - 1) * h),
            lut_lookups: l * h + 1,
            comparisons: 0,
        },
        ModelDescriptor::RnnTanh { layers: l, hidden: h, dim: d } => OpCount {
            additions: h * (2 + d + h + 2 * (l - 1) * (h + 1)) + 1,
            multiplications: h * (1 + d + h + 2 * (l - 1) * h),
            lut_lookups: l * h + 1,
            comparisons: 0,
        },
    }
}

/// Supplementary accounting for hardware without a lookup unit: ReLU
/// becomes a comparison (the output sigmoid stays a lookup) and the
/// mixture's log-domain max-selections are surfaced as comparisons.
pub fn formula_ops_piecewise(desc: &ModelDescriptor) -> OpCount {
    let table = formula_ops(desc);
    match *desc {
        ModelDescriptor::Gmm { components: m, .. } => OpCount {
            comparisons: 2 * m.saturating_sub(1),
            ..table
        },
        ModelDescriptor::DnnRelu { layers: l, hidden: h, .. } => OpCount {
            lut_lookups: 1,
            comparisons: l * h,
            ..table
        },
        _ => table,
    }
}
