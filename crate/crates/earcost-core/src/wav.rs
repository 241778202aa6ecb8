//! Minimal RIFF/WAVE reader and writer.
//!
//! Accepts exactly the profile the toolkit consumes: 16-bit signed
//! little-endian PCM, mono, 16 kHz. Anything else is rejected with an
//! explicit error rather than silently converted. Unknown chunks (LIST,
//! fact, ...) are skipped.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Sample rate every clip in the toolkit must use.
pub const REQUIRED_SAMPLE_RATE: u32 = 16_000;

/// Decoded mono PCM: amplitudes in [-1, 1] plus the declared sample rate.
#[derive(Debug, Clone)]
pub struct WavData {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

/// Read a mono 16-bit PCM WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<WavData> {
    let bytes = fs::read(path.as_ref())?;
    parse_wav(&bytes)
}

/// Parse a mono 16-bit PCM WAV from memory.
pub fn parse_wav(bytes: &[u8]) -> Result<WavData> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::UnsupportedWav("not a RIFF/WAVE file".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start.checked_add(size).filter(|&e| e <= bytes.len());
        let Some(body_end) = body_end else {
            return Err(Error::UnsupportedWav("truncated chunk".into()));
        };
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::UnsupportedWav("fmt chunk too short".into()));
                }
                fmt = Some((
                    u16::from_le_bytes(body[0..2].try_into().unwrap()),
                    u16::from_le_bytes(body[2..4].try_into().unwrap()),
                    u32::from_le_bytes(body[4..8].try_into().unwrap()),
                    u16::from_le_bytes(body[14..16].try_into().unwrap()),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunk bodies are word-aligned
        pos = body_end + (size & 1);
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| Error::UnsupportedWav("missing fmt chunk".into()))?;
    if format != 1 {
        return Err(Error::UnsupportedWav(format!(
            "only PCM (format 1) supported, got format {format}"
        )));
    }
    if channels != 1 {
        return Err(Error::UnsupportedWav(format!(
            "only mono supported, got {channels} channels"
        )));
    }
    if bits != 16 {
        return Err(Error::UnsupportedWav(format!(
            "only 16-bit samples supported, got {bits}"
        )));
    }
    let data = data.ok_or_else(|| Error::UnsupportedWav("missing data chunk".into()))?;

    let samples = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
        .collect();
    Ok(WavData {
        samples,
        sample_rate: rate,
    })
}

/// Write a mono 16-bit PCM WAV file. Amplitudes are clamped to [-1, 1].
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    fs::write(path.as_ref(), encode_wav(samples, sample_rate))?;
    Ok(())
}

/// Encode samples into WAV bytes.
pub fn encode_wav(samples: &[f64], sample_rate: u32) -> Vec<u8> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
