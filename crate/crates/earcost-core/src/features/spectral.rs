//! Scalar spectral descriptors and the zero crossing rate.

use crate::real::Real;

/// Flatness computation floors magnitudes here so silence is well defined.
pub const FLATNESS_FLOOR: f64 = 1e-10;
/// Fraction of total magnitude the rolloff point must cover.
pub const ROLLOFF_FRACTION: f64 = 0.85;

/// Magnitude-weighted mean of bin center frequencies, in Hz.
/// Zero-energy spectra map to 0 by convention.
pub fn spectral_centroid<R: Real>(spectrum: &[R], bin_hz: R) -> R {
    let total: R = spectrum.iter().copied().sum();
    if total <= R::zero() {
        return R::zero();
    }
    let weighted = spectrum
        .iter()
        .enumerate()
        .map(|(k, &m)| R::of_usize(k) * bin_hz * m)
        .fold(R::zero(), |a, b| a + b);
    weighted / total
}

/// Geometric over arithmetic mean of the floored magnitudes, in [0, 1].
pub fn spectral_flatness<R: Real>(spectrum: &[R]) -> R {
    if spectrum.is_empty() {
        return R::one();
    }
    let floor = R::of(FLATNESS_FLOOR);
    let n = R::of_usize(spectrum.len());
    let mut log_sum = R::zero();
    let mut sum = R::zero();
    for &m in spectrum {
        let v = m.max(floor);
        log_sum += v.ln();
        sum += v;
    }
    (log_sum / n).exp() / (sum / n)
}

/// Lowest bin frequency whose cumulative magnitude reaches
/// [`ROLLOFF_FRACTION`] of the total, in Hz. Zero-energy spectra map to 0.
pub fn spectral_rolloff<R: Real>(spectrum: &[R], bin_hz: R) -> R {
    let total: R = spectrum.iter().copied().sum();
    if total <= R::zero() {
        return R::zero();
    }
    let target = R::of(ROLLOFF_FRACTION) * total;
    let mut cumulative = R::zero();
    for (k, &m) in spectrum.iter().enumerate() {
        cumulative += m;
        if cumulative >= target {
            return R::of_usize(k) * bin_hz;
        }
    }
    R::of_usize(spectrum.len() - 1) * bin_hz
}

/// Excess kurtosis of the magnitudes treated as a sample.
/// Zero-variance spectra map to 0 by convention.
pub fn spectral_kurtosis<R: Real>(spectrum: &[R]) -> R {
    if spectrum.is_empty() {
        return R::zero();
    }
    let n = R::of_usize(spectrum.len());
    let mean = spectrum.iter().copied().sum::<R>() / n;
    let mut m2 = R::zero();
    let mut m4 = R::zero();
    for &m in spectrum {
        let d = m - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if m2 <= R::of(1e-24) {
        return R::zero();
    }
    m4 / (m2 * m2) - R::of(3.0)
}

/// Fraction of consecutive sample pairs whose sign differs, where zero
/// counts as positive. Result lies in [0, 1].
pub fn zero_crossing_rate<R: Real>(window: &[R]) -> R {
    if window.len() < 2 {
        return R::zero();
    }
    let crossings = window
        .windows(2)
        .filter(|pair| (pair[0] >= R::zero()) != (pair[1] >= R::zero()))
        .count();
    R::of_usize(crossings) / R::of_usize(window.len() - 1)
}
