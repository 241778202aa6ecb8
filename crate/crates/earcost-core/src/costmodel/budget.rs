//! Embedded budget planning: per-frame operation budgets and the largest
//! model a platform can host.

use serde::{Deserialize, Serialize};

use super::descriptor::{formula_ops, ModelDescriptor};
use crate::error::{Error, Result};

/// A processor and its allowances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatformBudget {
    pub clock_hz: f64,
    /// Fraction of cycles available after system tasks.
    pub available_fraction: f64,
    pub frame_rate_hz: f64,
    pub memory_bytes: u64,
    /// Fraction of memory left for model storage after code.
    pub memory_fraction: f64,
    pub bytes_per_param: u32,
}

impl PlatformBudget {
    pub fn new(
        clock_hz: f64,
        available_fraction: f64,
        frame_rate_hz: f64,
        memory_bytes: u64,
        memory_fraction: f64,
        bytes_per_param: u32,
    ) -> Result<Self> {
        let budget = Self {
            clock_hz,
            available_fraction,
            frame_rate_hz,
            memory_bytes,
            memory_fraction,
            bytes_per_param,
        };
        if clock_hz <= 0.0
            || frame_rate_hz <= 0.0
            || memory_bytes == 0
            || bytes_per_param == 0
            || !(0.0..=1.0).contains(&available_fraction)
            || available_fraction == 0.0
            || !(0.0..=1.0).contains(&memory_fraction)
            || memory_fraction == 0.0
        {
            return Err(Error::InvalidParameter(
                "platform budget fields must be positive (fractions in (0, 1])".into(),
            ));
        }
        Ok(budget)
    }

    /// The worked reference configuration: an 80 MHz core at 80% load,
    /// 62.5 frames per second, 256 kB with 80% free, 2-byte parameters.
    pub fn reference_case() -> Self {
        Self {
            clock_hz: 80e6,
            available_fraction: 0.8,
            frame_rate_hz: 62.5,
            memory_bytes: 256_000,
            memory_fraction: 0.8,
            bytes_per_param: 2,
        }
    }

    /// Operations available per analysis frame.
    pub fn ops_per_frame(&self) -> u64 {
        ops_budget_per_frame(self)
    }

    /// Bytes available for model storage.
    pub fn model_memory_bytes(&self) -> u64 {
        (self.memory_bytes as f64 * self.memory_fraction).floor() as u64
    }
}

/// floor(clock x available_fraction / frame_rate).
pub fn ops_budget_per_frame(budget: &PlatformBudget) -> u64 {
    (budget.clock_hz * budget.available_fraction / budget.frame_rate_hz).floor() as u64
}

/// The family shape being sized; the free size parameter is M, lambda, H
/// or the stored-vector count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum SizingShape {
    Gmm { dim: u64 },
    SvmLinear { dim: u64 },
    SvmPolynomial { dim: u64, degree: u64 },
    SvmRbf { dim: u64 },
    SvmSigmoid { dim: u64 },
    Dnn { layers: u64, dim: u64 },
    Rnn { layers: u64, dim: u64 },
    /// Distance scan over stored vectors: one subtraction, two
    /// multiplications and one accumulation per dimension per vector.
    NearestNeighbour { dim: u64 },
}

impl SizingShape {
    fn descriptor(&self, size: u64) -> Option<ModelDescriptor> {
        Some(match *self {
            SizingShape::Gmm { dim } => ModelDescriptor::Gmm {
                components: size,
                dim,
            },
            SizingShape::SvmLinear { dim } => ModelDescriptor::SvmLinear {
                support_vectors: size,
                dim,
            },
            SizingShape::SvmPolynomial { dim, degree } => ModelDescriptor::SvmPolynomial {
                support_vectors: size,
                dim,
                degree,
            },
            SizingShape::SvmRbf { dim } => ModelDescriptor::SvmRbf {
                support_vectors: size,
                dim,
            },
            SizingShape::SvmSigmoid { dim } => ModelDescriptor::SvmSigmoid {
                support_vectors: size,
                dim,
            },
            SizingShape::Dnn { layers, dim } => ModelDescriptor::DnnSigmoid {
                layers,
                hidden: size,
                dim,
            },
            SizingShape::Rnn { layers, dim } => ModelDescriptor::RnnTanh {
                layers,
                hidden: size,
                dim,
            },
            SizingShape::NearestNeighbour { .. } => return None,
        })
    }

    /// Per-frame operations at a given size.
    pub fn ops_at(&self, size: u64) -> u64 {
        match self.descriptor(size) {
            Some(desc) => formula_ops(&desc).total(),
            None => {
                let SizingShape::NearestNeighbour { dim } = *self else {
                    unreachable!()
                };
                4 * dim * size
            }
        }
    }

    /// Stored parameters at a given size.
    pub fn params_at(&self, size: u64) -> u64 {
        match self.descriptor(size) {
            Some(desc) => desc.parameter_count(),
            None => {
                let SizingShape::NearestNeighbour { dim } = *self else {
                    unreachable!()
                };
                dim * size
            }
        }
    }
}

/// Which resource capped the sizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BindingConstraint {
    Ops,
    Memory,
}

/// Result of [`max_model_size`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizingOutcome {
    pub size: u64,
    pub binding: BindingConstraint,
    pub ops_at_size: u64,
    pub param_bytes_at_size: u64,
}

const SIZE_SEARCH_CAP: u64 = 1 << 24;

fn largest_size_under(limit: u64, cost: impl Fn(u64) -> u64) -> u64 {
    if cost(1) > limit {
        return 0;
    }
    let mut lo = 1u64;
    let mut hi = SIZE_SEARCH_CAP;
    if cost(hi) <= limit {
        return hi;
    }
    // invariant: cost(lo) <= limit < cost(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if cost(mid) <= limit {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest size parameter whose per-frame operations fit the cycle budget
/// and whose parameters fit the memory budget, with the binding resource.
pub fn max_model_size(budget: &PlatformBudget, shape: &SizingShape) -> SizingOutcome {
    let ops_limit = ops_budget_per_frame(budget);
    let memory_limit = budget.model_memory_bytes();
    let bytes_per_param = budget.bytes_per_param as u64;

    let ops_max = largest_size_under(ops_limit, |s| shape.ops_at(s));
    let mem_max = largest_size_under(memory_limit, |s| shape.params_at(s) * bytes_per_param);

    let (size, binding) = if ops_max <= mem_max {
        (ops_max, BindingConstraint::Ops)
    } else {
        (mem_max, BindingConstraint::Memory)
    };
    SizingOutcome {
        size,
        binding,
        ops_at_size: if size == 0 { 0 } else { shape.ops_at(size) },
        param_bytes_at_size: if size == 0 {
            0
        } else {
            shape.params_at(size) * bytes_per_param
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_ops_budget() {
        let budget = PlatformBudget::reference_case();
        assert_eq!(ops_budget_per_frame(&budget), 1_024_000);
    }

    #[test]
    fn trivial_budget_scaling() {
        let budget = PlatformBudget::new(100.0, 1.0, 1.0, 1000, 1.0, 1).unwrap();
        assert_eq!(ops_budget_per_frame(&budget), 100);
        // linear in clock, inverse in frame rate
        let double_clock = PlatformBudget::new(200.0, 1.0, 1.0, 1000, 1.0, 1).unwrap();
        assert_eq!(ops_budget_per_frame(&double_clock), 200);
        let double_rate = PlatformBudget::new(100.0, 1.0, 2.0, 1000, 1.0, 1).unwrap();
        assert_eq!(ops_budget_per_frame(&double_rate), 50);
    }

    #[test]
    fn nearest_neighbour_case_study() {
        let budget = PlatformBudget::reference_case();
        let shape = SizingShape::NearestNeighbour { dim: 40 };
        // ops capacity alone: 1,024,000 / (4 ops x 40 dims) = 6,400
        assert_eq!(
            largest_size_under(budget.ops_per_frame(), |s| shape.ops_at(s)),
            6_400
        );
        // memory capacity alone: 256 kB x 80% / 40 / 2 B = 2,560
        assert_eq!(
            largest_size_under(budget.model_memory_bytes(), |s| shape.params_at(s) * 2),
            2_560
        );
        // memory binds
        let outcome = max_model_size(&budget, &shape);
        assert_eq!(outcome.size, 2_560);
        assert_eq!(outcome.binding, BindingConstraint::Memory);
    }

    #[test]
    fn gmm_sizing_with_infinite_memory_inverts_the_formula() {
        let budget = PlatformBudget::new(80e6, 0.8, 62.5, u64::MAX / 4, 1.0, 2).unwrap();
        let outcome = max_model_size(&budget, &SizingShape::Gmm { dim: 54 });
        assert_eq!(outcome.binding, BindingConstraint::Ops);
        // oracle: direct linear solve of the cost row in M
        // total(M) = 2(M(D+1) + M) + 4MD + M = M(2D + 4 + 4D + 1)
        let per_component = 2 * (54 + 1) + 2 + 4 * 54 + 1;
        let expected = 1_024_000 / per_component;
        assert_eq!(outcome.size, expected as u64);
        assert!(outcome.ops_at_size <= 1_024_000);
        let next = SizingShape::Gmm { dim: 54 }.ops_at(outcome.size + 1);
        assert!(next > 1_024_000);
    }

    #[test]
    fn zero_budget_is_ops_bound_at_size_zero() {
        let budget = PlatformBudget::new(1.0, 1.0, 10.0, 1, 1.0, 2).unwrap();
        let outcome = max_model_size(&budget, &SizingShape::Dnn { layers: 2, dim: 54 });
        assert_eq!(outcome.size, 0);
        assert_eq!(outcome.binding, BindingConstraint::Ops);
    }

    #[test]
    fn rejects_nonsense_budgets() {
        assert!(PlatformBudget::new(0.0, 0.8, 62.5, 1, 0.8, 2).is_err());
        assert!(PlatformBudget::new(1e6, 0.0, 62.5, 1, 0.8, 2).is_err());
        assert!(PlatformBudget::new(1e6, 1.5, 62.5, 1, 0.8, 2).is_err());
        assert!(PlatformBudget::new(1e6, 0.8, 62.5, 1, 0.8, 0).is_err());
    }
}
