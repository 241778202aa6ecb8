//! Windowing and magnitude spectra.

use crate::error::{Error, Result};
use crate::real::Real;

/// Symmetric Hann window of length `n`.
pub fn hann_window<R: Real>(n: usize) -> Vec<R> {
    if n == 1 {
        return vec![R::one()];
    }
    let denom = R::of_usize(n - 1);
    (0..n)
        .map(|i| {
            let phase = R::of(2.0) * R::PI() * R::of_usize(i) / denom;
            R::of(0.5) * (R::one() - phase.cos())
        })
        .collect()
}

/// Magnitude spectrum of a Hann-windowed frame.
///
/// Returns bins `0..=n/2` of the n-point transform, each scaled by `1/n`.
/// The frame length must be a power of two.
pub fn magnitude_spectrum<R: Real>(frame: &[R]) -> Result<Vec<R>> {
    let n = frame.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "frame length must be a nonzero power of two, got {n}"
        )));
    }
    let window = hann_window::<R>(n);
    let mut buf: Vec<(R, R)> = frame
        .iter()
        .zip(&window)
        .map(|(&s, &w)| (s * w, R::zero()))
        .collect();
    fft_in_place(&mut buf);
    let scale = R::one() / R::of_usize(n);
    Ok(buf[..=n / 2]
        .iter()
        .map(|&(re, im)| (re * re + im * im).sqrt() * scale)
        .collect())
}

/// Iterative radix-2 Cooley-Tukey FFT. `buf.len()` must be a power of two.
fn fft_in_place<R: Real>(buf: &mut [(R, R)]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());

    // bit-reversal permutation
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = (i.reverse_bits() >> (usize::BITS - bits)) & (n - 1);
        if j > i {
            buf.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let angle = -R::of(2.0) * R::PI() / R::of_usize(len);
        let (w_re, w_im) = (angle.cos(), angle.sin());
        for start in (0..n).step_by(len) {
            let mut cur = (R::one(), R::zero());
            for k in 0..len / 2 {
                let (a_re, a_im) = buf[start + k];
                let (b_re, b_im) = buf[start + k + len / 2];
                let t_re = b_re * cur.0 - b_im * cur.1;
                let t_im = b_re * cur.1 + b_im * cur.0;
                buf[start + k] = (a_re + t_re, a_im + t_im);
                buf[start + k + len / 2] = (a_re - t_re, a_im - t_im);
                cur = (cur.0 * w_re - cur.1 * w_im, cur.0 * w_im + cur.1 * w_re);
            }
        }
        len <<= 1;
    }
}
