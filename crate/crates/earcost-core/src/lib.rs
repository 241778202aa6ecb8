//! Acoustic event detection under computational cost constraints.
//!
//! The crate covers the full frame-classification pipeline: WAV ingestion
//! and 18/54-dimensional acoustic features, three classifier families
//! (diagonal-covariance mixture pairs, kernel SVMs, feed-forward and
//! recurrent networks), DET/EER evaluation, a per-frame operation-count
//! model verified against instrumented inference, and a fixed-point
//! execution path for embedded deployment analysis.
//!
//! All floating-point kernels are generic over [`Real`] (`f32` or `f64`);
//! the concrete aliases below pin the default `f64` instantiations.

pub mod costmodel;
pub mod error;
pub mod eval;
pub mod features;
pub mod fixedpoint;
pub mod gmm;
pub mod neural;
pub mod real;
pub mod svm;
pub mod wav;

pub use error::{Error, Result};
pub use real::Real;

/// Default scalar for end-to-end experiments.
pub type Scalar = f64;

/// Default-precision mixture parameters.
pub type GmmParams64 = gmm::GmmParams<Scalar>;
/// Default-precision mixture scoring pair.
pub type GmmScorerPair64 = gmm::GmmScorerPair<Scalar>;
/// Default-precision SVM model.
pub type SvmModel64 = svm::SvmModel<Scalar>;
/// Default-precision network parameters.
pub type NetworkParams64 = neural::NetworkParams<Scalar>;
/// Default-precision feature sequence.
pub type FeatureSequence64 = features::FeatureSequence<Scalar>;
/// Default-precision scored frames.
pub type ScoredFrames64 = eval::ScoredFrames<Scalar>;
