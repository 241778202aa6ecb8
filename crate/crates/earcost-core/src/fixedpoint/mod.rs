//! Fixed-point (Q-format) inference with table-based nonlinearities.
//!
//! Values are signed Qm.n: one sign bit, `m` integer bits, `n` fractional
//! bits, stored in an `i32`. Quantization rounds to nearest and saturates
//! at the representable range. Nonlinearities are direct table lookups
//! (nearest entry, no interpolation) with clamping outside the domain.
//!
//! This module deliberately works in concrete `f64`/`i32`: the whole point
//! of the path is the integer dataflow, so the scalar abstraction stops at
//! its boundary.

pub mod engine;
pub mod format;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use engine::{
    compare_float_fixed, fixed_score, lut_size_for, FixedScore, FloatFixedReport,
    QuantizedModel, DEFAULT_LUT_SIZE,
};

/// Signed fixed-point layout: m integer bits, n fractional bits, one sign
/// bit; m + n + 1 must fit in 32 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QFormat {
    pub integer_bits: u8,
    pub fractional_bits: u8,
}

impl QFormat {
    pub fn new(integer_bits: u8, fractional_bits: u8) -> Result<Self> {
        let total = integer_bits as u32 + fractional_bits as u32 + 1;
        if total > 32 {
            return Err(Error::InvalidParameter(format!(
                "Q{integer_bits}.{fractional_bits} needs {total} bits, more than 32"
            )));
        }
        Ok(Self {
            integer_bits,
            fractional_bits,
        })
    }

    /// The default 16-bit storage format.
    pub fn q4_11() -> Self {
        Self {
            integer_bits: 4,
            fractional_bits: 11,
        }
    }

    pub fn total_bits(&self) -> u32 {
        self.integer_bits as u32 + self.fractional_bits as u32 + 1
    }

    pub fn scale(&self) -> f64 {
        (1u64 << self.fractional_bits) as f64
    }

    pub fn max_raw(&self) -> i32 {
        ((1i64 << (self.integer_bits as u32 + self.fractional_bits as u32)) - 1) as i32
    }

    pub fn min_raw(&self) -> i32 {
        (-(1i64 << (self.integer_bits as u32 + self.fractional_bits as u32))) as i32
    }

    /// Largest representable magnitude, as a real.
    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 / self.scale()
    }

    /// One least significant bit, as a real.
    pub fn resolution(&self) -> f64 {
        1.0 / self.scale()
    }
}

/// Round-to-nearest quantization with saturation.
pub fn quantize(v: f64, q: QFormat) -> i32 {
    if v.is_nan() {
        return 0;
    }
    let scaled = (v * q.scale()).round();
    scaled.clamp(q.min_raw() as f64, q.max_raw() as f64) as i32
}

/// Exact inverse of the raw representation.
pub fn dequantize(raw: i32, q: QFormat) -> f64 {
    raw as f64 / q.scale()
}

/// Functions the lookup tables can hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LutFunction {
    Sigmoid,
    Tanh,
    /// x -> exp(-x)
    ExpNeg,
    /// x -> ln(1 + exp(x))
    Log1pExp,
}

impl LutFunction {
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            LutFunction::Sigmoid => 1.0 / (1.0 + (-v).exp()),
            LutFunction::Tanh => v.tanh(),
            LutFunction::ExpNeg => (-v).exp(),
            LutFunction::Log1pExp => v.exp().ln_1p(),
        }
    }

    pub(crate) fn tag(&self) -> u8 {
        match self {
            LutFunction::Sigmoid => 0,
            LutFunction::Tanh => 1,
            LutFunction::ExpNeg => 2,
            LutFunction::Log1pExp => 3,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => LutFunction::Sigmoid,
            1 => LutFunction::Tanh,
            2 => LutFunction::ExpNeg,
            3 => LutFunction::Log1pExp,
            other => {
                return Err(Error::Format(format!("unknown lut function tag {other}")))
            }
        })
    }
}

/// Precomputed samples of a function over [lo, hi].
///
/// Entry `i` holds `f(lo + i * step)` with `step = (hi - lo) / size`;
/// evaluation picks the nearest entry and clamps outside the domain, so
/// the error is bounded by `max |f'| * step / 2` inside the grid plus the
/// function's variation past the last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut {
    function: LutFunction,
    lo: f64,
    hi: f64,
    entries: Vec<f64>,
}

/// Sample a function into a table.
pub fn lut_build(function: LutFunction, lo: f64, hi: f64, size: usize) -> Result<Lut> {
    if size < 2 {
        return Err(Error::InvalidParameter(
            "lookup table needs at least 2 entries".into(),
        ));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(
            "lookup table domain must be a finite non-empty interval".into(),
        ));
    }
    let step = (hi - lo) / size as f64;
    let entries = (0..size).map(|i| function.eval(lo + i as f64 * step)).collect();
    Ok(Lut {
        function,
        lo,
        hi,
        entries,
    })
}

/// Nearest-entry lookup with clamping.
pub fn lut_eval(lut: &Lut, v: f64) -> f64 {
    let idx = lut.index_of(v);
    lut.entries[idx]
}

impl Lut {
    pub fn function(&self) -> LutFunction {
        self.function
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.entries.len() as f64
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    fn index_of(&self, v: f64) -> usize {
        let clamped = v.clamp(self.lo, self.hi);
        let idx = ((clamped - self.lo) / self.step()).round() as usize;
        idx.min(self.entries.len() - 1)
    }
}
