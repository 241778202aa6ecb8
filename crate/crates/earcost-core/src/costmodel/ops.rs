//! Operation tallies and the sink interface scoring kernels book into.
//!
//! Two accounting views exist for the same run. The planner view follows
//! the cost table: every nonlinearity, ReLU included, is booked as a LUT
//! lookup and the max-selections inside the log-domain summation are not
//! booked at all. The piecewise view books ReLU and those max-selections
//! as comparisons instead, for hardware without a lookup unit.

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// Per-frame tallies of the four basic operation kinds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub additions: u64,
    pub multiplications: u64,
    pub lut_lookups: u64,
    pub comparisons: u64,
}

impl OpCount {
    pub const fn new(additions: u64, multiplications: u64, lut_lookups: u64, comparisons: u64) -> Self {
        Self {
            additions,
            multiplications,
            lut_lookups,
            comparisons,
        }
    }

    /// All four kinds weighted equally.
    pub const fn total(&self) -> u64 {
        self.additions + self.multiplications + self.lut_lookups + self.comparisons
    }
}

impl Add for OpCount {
    type Output = OpCount;
    fn add(self, rhs: OpCount) -> OpCount {
        OpCount {
            additions: self.additions + rhs.additions,
            multiplications: self.multiplications + rhs.multiplications,
            lut_lookups: self.lut_lookups + rhs.lut_lookups,
            comparisons: self.comparisons + rhs.comparisons,
        }
    }
}

impl AddAssign for OpCount {
    fn add_assign(&mut self, rhs: OpCount) {
        *self = *self + rhs;
    }
}

impl fmt::Display for OpCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "add={} mul={} lut={} cmp={} total={}",
            self.additions,
            self.multiplications,
            self.lut_lookups,
            self.comparisons,
            self.total()
        )
    }
}

/// Receives operation events from a scoring kernel.
///
/// The kernel's arithmetic is identical whatever the sink; a sink only
/// observes. [`NullSink`] compiles to nothing.
pub trait OpSink {
    fn addition(&mut self, n: u64);
    fn multiplication(&mut self, n: u64);
    /// A table-based nonlinearity (sigmoid, tanh, exp, log1p-exp).
    fn lut(&mut self, n: u64);
    /// A ReLU, physically a compare-and-select.
    fn relu(&mut self, n: u64);
    /// A max-selection (inside the stable log-domain summation).
    fn comparison(&mut self, n: u64);
}

/// Sink that ignores everything; used by the plain scoring paths.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl OpSink for NullSink {
    #[inline(always)]
    fn addition(&mut self, _: u64) {}
    #[inline(always)]
    fn multiplication(&mut self, _: u64) {}
    #[inline(always)]
    fn lut(&mut self, _: u64) {}
    #[inline(always)]
    fn relu(&mut self, _: u64) {}
    #[inline(always)]
    fn comparison(&mut self, _: u64) {}
}

/// Accumulating sink with both accounting views.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCounter {
    additions: u64,
    multiplications: u64,
    luts: u64,
    relus: u64,
    comparisons: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cost-table view: ReLU booked under LUT lookups, max-selections dropped.
    pub fn table_count(&self) -> OpCount {
        OpCount {
            additions: self.additions,
            multiplications: self.multiplications,
            lut_lookups: self.luts + self.relus,
            comparisons: 0,
        }
    }

    /// Piecewise view: ReLU and max-selections booked as comparisons.
    pub fn piecewise_count(&self) -> OpCount {
        OpCount {
            additions: self.additions,
            multiplications: self.multiplications,
            lut_lookups: self.luts,
            comparisons: self.relus + self.comparisons,
        }
    }
}

impl OpSink for OpCounter {
    #[inline]
    fn addition(&mut self, n: u64) {
        self.additions += n;
    }
    #[inline]
    fn multiplication(&mut self, n: u64) {
        self.multiplications += n;
    }
    #[inline]
    fn lut(&mut self, n: u64) {
        self.luts += n;
    }
    #[inline]
    fn relu(&mut self, n: u64) {
        self.relus += n;
    }
    #[inline]
    fn comparison(&mut self, n: u64) {
        self.comparisons += n;
    }
}
