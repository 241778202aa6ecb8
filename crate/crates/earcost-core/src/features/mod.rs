//! Per-frame acoustic features.
//!
//! 16 kHz mono audio is cut into 512-sample windows hopped by 256 samples.
//! Each window yields an 18-dimensional vector: 13 MFCCs followed by
//! spectral centroid, flatness, rolloff, kurtosis and the zero crossing
//! rate. First and second order differences can be appended (54 dims), and
//! sequences are standardized with statistics fitted on training data.

pub mod mel;
pub mod spectral;
pub mod spectrum;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::wav::{WavData, REQUIRED_SAMPLE_RATE};

pub use mel::MelFilterbank;
pub use spectral::{
    spectral_centroid, spectral_flatness, spectral_kurtosis, spectral_rolloff,
    zero_crossing_rate,
};
pub use spectrum::{hann_window, magnitude_spectrum};

/// Dimensionality of a base feature frame.
pub const BASE_DIM: usize = 18;
/// Dimensionality after appending first and second order differences.
pub const FULL_DIM: usize = 54;

/// Names of the 18 base dimensions, in order.
pub const BASE_NAMES: [&str; BASE_DIM] = [
    "mfcc_0", "mfcc_1", "mfcc_2", "mfcc_3", "mfcc_4", "mfcc_5", "mfcc_6", "mfcc_7", "mfcc_8",
    "mfcc_9", "mfcc_10", "mfcc_11", "mfcc_12", "centroid", "flatness", "rolloff", "kurtosis",
    "zcr",
];

/// Mono audio at the toolkit's required sample rate, amplitudes in [-1, 1].
#[derive(Debug, Clone)]
pub struct AudioClip<R> {
    samples: Vec<R>,
    sample_rate: u32,
}

impl<R: Real> AudioClip<R> {
    pub fn new(samples: Vec<R>, sample_rate: u32) -> Result<Self> {
        if sample_rate != REQUIRED_SAMPLE_RATE {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be {REQUIRED_SAMPLE_RATE} Hz, got {sample_rate}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InsufficientAudio("empty clip".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("audio samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn from_wav(data: &WavData) -> Result<Self> {
        Self::new(
            data.samples.iter().map(|&s| R::of(s)).collect(),
            data.sample_rate,
        )
    }

    pub fn samples(&self) -> &[R] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Clip duration in seconds.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Analysis framing: window length and hop, both in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    pub window: usize,
    pub hop: usize,
}

impl FrameSpec {
    pub fn new(window: usize, hop: usize) -> Result<Self> {
        if window == 0 || hop == 0 {
            return Err(Error::InvalidParameter(
                "window and hop must be positive".into(),
            ));
        }
        if hop > window {
            return Err(Error::InvalidParameter(format!(
                "hop ({hop}) must not exceed window ({window})"
            )));
        }
        Ok(Self { window, hop })
    }

    /// Number of complete windows in a signal of `n_samples`.
    pub fn frame_count(&self, n_samples: usize) -> usize {
        if n_samples < self.window {
            0
        } else {
            (n_samples - self.window) / self.hop + 1
        }
    }

    /// Center time of frame `t` in seconds.
    pub fn frame_center_s(&self, t: usize, sample_rate: u32) -> f64 {
        (t * self.hop + self.window / 2) as f64 / sample_rate as f64
    }
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            window: 512,
            hop: 256,
        }
    }
}

/// One 18-dimensional frame descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<R>(pub [R; BASE_DIM]);

impl<R: Real> FeatureVector<R> {
    pub fn values(&self) -> &[R] {
        &self.0
    }
}

/// Ordered frames of uniform dimensionality (18, or 54 after deltas).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence<R> {
    frames: Vec<Vec<R>>,
    dim: usize,
}

impl<R: Real> FeatureSequence<R> {
    pub fn new(frames: Vec<Vec<R>>, dim: usize) -> Result<Self> {
        if frames.iter().any(|f| f.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: frames.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(0),
            });
        }
        Ok(Self { frames, dim })
    }

    pub fn frames(&self) -> &[Vec<R>] {
        &self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Project back to the first 18 dimensions.
    pub fn base_projection(&self) -> FeatureSequence<R> {
        FeatureSequence {
            frames: self
                .frames
                .iter()
                .map(|f| f[..BASE_DIM.min(f.len())].to_vec())
                .collect(),
            dim: BASE_DIM.min(self.dim),
        }
    }

    /// Write one row per frame as CSV with a header naming each dimension.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", dimension_names(self.dim)?.join(","))?;
        for frame in &self.frames {
            let row: Vec<String> = frame.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Column names for an 18- or 54-dimensional dump.
pub fn dimension_names(dim: usize) -> Result<Vec<String>> {
    match dim {
        BASE_DIM => Ok(BASE_NAMES.iter().map(|s| s.to_string()).collect()),
        FULL_DIM => {
            let mut names: Vec<String> = BASE_NAMES.iter().map(|s| s.to_string()).collect();
            names.extend(BASE_NAMES.iter().map(|s| format!("d_{s}")));
            names.extend(BASE_NAMES.iter().map(|s| format!("dd_{s}")));
            Ok(names)
        }
        other => Err(Error::InvalidParameter(format!(
            "feature dumps support 18 or 54 dimensions, got {other}"
        ))),
    }
}

/// Cut a clip into complete analysis windows; the trailing partial window
/// is discarded.
pub fn frame_signal<'a, R: Real>(
    clip: &'a AudioClip<R>,
    spec: &FrameSpec,
) -> Result<Vec<&'a [R]>> {
    let samples = clip.samples();
    if samples.len() < spec.window {
        return Err(Error::InsufficientAudio(format!(
            "clip has {} samples, need at least {}",
            samples.len(),
            spec.window
        )));
    }
    let count = spec.frame_count(samples.len());
    Ok((0..count)
        .map(|t| &samples[t * spec.hop..t * spec.hop + spec.window])
        .collect())
}

/// Extracts 18-dimensional frames from clips.
#[derive(Debug, Clone)]
pub struct FeatureExtractor<R> {
    spec: FrameSpec,
    filterbank: MelFilterbank<R>,
    bin_hz: R,
}

impl<R: Real> FeatureExtractor<R> {
    pub fn new(spec: FrameSpec) -> Self {
        let num_bins = spec.window / 2 + 1;
        Self {
            spec,
            filterbank: MelFilterbank::new(num_bins, REQUIRED_SAMPLE_RATE as f64),
            bin_hz: R::of(REQUIRED_SAMPLE_RATE as f64 / spec.window as f64),
        }
    }

    pub fn frame_spec(&self) -> &FrameSpec {
        &self.spec
    }

    /// Features of a single analysis window.
    pub fn compute_frame(&self, window: &[R]) -> Result<FeatureVector<R>> {
        let spectrum = magnitude_spectrum(window)?;
        let coeffs = self.filterbank.mfcc(&spectrum);
        let mut values = [R::zero(); BASE_DIM];
        values[..13].copy_from_slice(&coeffs);
        values[13] = spectral_centroid(&spectrum, self.bin_hz);
        values[14] = spectral_flatness(&spectrum);
        values[15] = spectral_rolloff(&spectrum, self.bin_hz);
        values[16] = spectral_kurtosis(&spectrum);
        values[17] = zero_crossing_rate(window);
        Ok(FeatureVector(values))
    }

    /// Features for every complete window of a clip.
    pub fn extract(&self, clip: &AudioClip<R>) -> Result<FeatureSequence<R>> {
        let frames = frame_signal(clip, &self.spec)?
            .into_iter()
            .map(|w| self.compute_frame(w).map(|fv| fv.0.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        FeatureSequence::new(frames, BASE_DIM)
    }
}

impl<R: Real> Default for FeatureExtractor<R> {
    fn default() -> Self {
        Self::new(FrameSpec::default())
    }
}

/// Append first and second order differences to an 18-dimensional
/// sequence, producing 54 dimensions per frame. Differences at the
/// sequence start are zero.
pub fn append_deltas<R: Real>(seq: &FeatureSequence<R>) -> Result<FeatureSequence<R>> {
    if seq.dim() != BASE_DIM {
        return Err(Error::DimensionMismatch {
            expected: BASE_DIM,
            actual: seq.dim(),
        });
    }
    if seq.len() < 3 {
        return Err(Error::NotEnoughData {
            needed: 3,
            available: seq.len(),
        });
    }
    let frames = seq.frames();
    let n = frames.len();
    let mut deltas = vec![vec![R::zero(); BASE_DIM]; n];
    for t in 1..n {
        for d in 0..BASE_DIM {
            deltas[t][d] = frames[t][d] - frames[t - 1][d];
        }
    }
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let mut row = Vec::with_capacity(FULL_DIM);
        row.extend_from_slice(&frames[t]);
        row.extend_from_slice(&deltas[t]);
        for d in 0..BASE_DIM {
            let dd = if t == 0 {
                R::zero()
            } else {
                deltas[t][d] - deltas[t - 1][d]
            };
            row.push(dd);
        }
        out.push(row);
    }
    FeatureSequence::new(out, FULL_DIM)
}

/// Per-dimension standardization statistics fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats<R> {
    pub mean: Vec<R>,
    pub std: Vec<R>,
}

/// Dimensions whose population std falls below this are treated as
/// constant and normalized with std 1.
pub const STD_CLAMP: f64 = 1e-8;

/// Fit per-dimension mean and population standard deviation over every
/// frame of every sequence.
pub fn fit_normalization<R: Real>(train: &[&FeatureSequence<R>]) -> Result<NormalizationStats<R>> {
    let dim = train
        .first()
        .map(|s| s.dim())
        .ok_or_else(|| Error::NotEnoughData {
            needed: 1,
            available: 0,
        })?;
    let mut count = 0usize;
    let mut mean = vec![R::zero(); dim];
    for seq in train {
        if seq.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: seq.dim(),
            });
        }
        for frame in seq.frames() {
            for d in 0..dim {
                mean[d] += frame[d];
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NotEnoughData {
            needed: 1,
            available: 0,
        });
    }
    let n = R::of_usize(count);
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![R::zero(); dim];
    for seq in train {
        for frame in seq.frames() {
            for d in 0..dim {
                let diff = frame[d] - mean[d];
                var[d] += diff * diff;
            }
        }
    }
    let std = var
        .into_iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s < R::of(STD_CLAMP) {
                R::one()
            } else {
                s
            }
        })
        .collect();
    Ok(NormalizationStats { mean, std })
}

/// Standardize a sequence in place with previously fitted statistics.
pub fn apply_normalization<R: Real>(
    seq: &FeatureSequence<R>,
    stats: &NormalizationStats<R>,
) -> Result<FeatureSequence<R>> {
    if seq.dim() != stats.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: stats.mean.len(),
            actual: seq.dim(),
        });
    }
    let frames = seq
        .frames()
        .iter()
        .map(|f| {
            f.iter()
                .enumerate()
                .map(|(d, &v)| (v - stats.mean[d]) / stats.std[d])
                .collect()
        })
        .collect();
    FeatureSequence::new(frames, seq.dim())
}
