//! Mel filterbank and cepstral coefficients.
//!
//! Fixed recipe: 26 triangular filters between 0 and 8000 Hz placed on the
//! HTK mel scale (`mel = 2595 log10(1 + f/700)`), applied to the magnitude
//! spectrum; filter outputs are floored at 1e-10 before the natural log;
//! the first 13 coefficients of an orthonormal DCT-II are kept (including
//! coefficient 0).

use crate::real::Real;

/// Number of triangular filters.
pub const NUM_FILTERS: usize = 26;
/// Number of cepstral coefficients kept.
pub const NUM_COEFFS: usize = 13;
/// Filter outputs are floored here before taking the log.
pub const LOG_FLOOR: f64 = 1e-10;

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Precomputed triangular mel filterbank over FFT bin center frequencies.
#[derive(Debug, Clone)]
pub struct MelFilterbank<R> {
    /// `NUM_FILTERS` rows of `num_bins` weights.
    weights: Vec<Vec<R>>,
}

impl<R: Real> MelFilterbank<R> {
    /// Build the filterbank for `num_bins` spectrum bins (fft_size/2 + 1)
    /// at the given sample rate, spanning 0 Hz to Nyquist.
    pub fn new(num_bins: usize, sample_rate: f64) -> Self {
        let fft_size = (num_bins - 1) * 2;
        let f_max = sample_rate / 2.0;
        let mel_points: Vec<f64> = (0..NUM_FILTERS + 2)
            .map(|i| mel_to_hz(hz_to_mel(f_max) * i as f64 / (NUM_FILTERS + 1) as f64))
            .collect();

        let weights = (0..NUM_FILTERS)
            .map(|m| {
                let (lo, center, hi) = (mel_points[m], mel_points[m + 1], mel_points[m + 2]);
                (0..num_bins)
                    .map(|k| {
                        let f = k as f64 * sample_rate / fft_size as f64;
                        let w = if f >= lo && f <= center && center > lo {
                            (f - lo) / (center - lo)
                        } else if f > center && f <= hi && hi > center {
                            (hi - f) / (hi - center)
                        } else {
                            0.0
                        };
                        R::of(w)
                    })
                    .collect()
            })
            .collect();
        Self { weights }
    }

    /// Filter energies (weighted sums of the magnitude spectrum).
    pub fn apply(&self, spectrum: &[R]) -> Vec<R> {
        self.weights
            .iter()
            .map(|row| {
                row.iter()
                    .zip(spectrum)
                    .map(|(&w, &m)| w * m)
                    .fold(R::zero(), |a, b| a + b)
            })
            .collect()
    }

    /// Floored-log filter energies followed by the DCT, truncated to
    /// [`NUM_COEFFS`] coefficients.
    pub fn mfcc(&self, spectrum: &[R]) -> Vec<R> {
        let floor = R::of(LOG_FLOOR);
        let log_energies: Vec<R> = self
            .apply(spectrum)
            .into_iter()
            .map(|e| e.max(floor).ln())
            .collect();
        dct_ii_ortho(&log_energies, NUM_COEFFS)
    }
}

/// Orthonormal DCT-II of `x`, keeping the first `n_out` coefficients.
pub fn dct_ii_ortho<R: Real>(x: &[R], n_out: usize) -> Vec<R> {
    let n = x.len();
    let norm0 = R::of((1.0 / n as f64).sqrt());
    let norm = R::of((2.0 / n as f64).sqrt());
    (0..n_out)
        .map(|j| {
            let sum = (0..n)
                .map(|m| {
                    let angle = R::PI() * R::of_usize(j) * (R::of_usize(m) + R::of(0.5))
                        / R::of_usize(n);
                    x[m] * angle.cos()
                })
                .fold(R::zero(), |a, b| a + b);
            sum * if j == 0 { norm0 } else { norm }
        })
        .collect()
}
