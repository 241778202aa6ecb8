//! Per-frame operation-count modeling: closed-form cost rows, counters
//! wired into the scoring kernels, formula-versus-measured verification,
//! and platform budget planning.

pub mod budget;
pub mod descriptor;
pub mod instrument;
pub mod ops;

pub use budget::{
    max_model_size, ops_budget_per_frame, BindingConstraint, PlatformBudget, SizingOutcome,
    SizingShape,
};
pub use descriptor::{formula_ops, formula_ops_piecewise, ModelDescriptor};
pub use instrument::{
    default_verification_sweep, instrumented_score, synthesize_model, verify_costs,
    verify_descriptor, CostCheck, CostReport, FrameModel, SyntheticModel,
};
pub use ops::{NullSink, OpCount, OpCounter, OpSink};
