//! Bundled synthetic dataset: tonal beep "alarms" against a varied
//! non-target world of filtered noise, chirps and tone clusters.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use earcost_core::error::Result;
use earcost_core::wav::write_wav;

const SAMPLE_RATE: u32 = 16_000;

/// Shape of the generated dataset.
#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub target_clips: usize,
    pub world_clips: usize,
    pub clip_seconds: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            target_clips: 16,
            world_clips: 16,
            clip_seconds: 3.0,
        }
    }
}

/// What was written where.
#[derive(Debug, Clone)]
pub struct SynthSummary {
    pub wav_files: Vec<String>,
    pub annotations_file: String,
    pub target_label: String,
}

/// Generate WAV clips plus an annotation CSV under `out_dir`,
/// deterministically from the seed.
///
/// Target clips carry beep trains: a few related tones switched on and
/// off, passed through a one-pole room filter with a faint echo, at
/// varied gain, over a low noise floor. World clips hold filtered noise,
/// frequency sweeps or steady tone clusters.
pub fn make_synthetic_dataset(
    seed: u64,
    out_dir: impl AsRef<Path>,
    config: SynthConfig,
) -> Result<SynthSummary> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples_per_clip = (config.clip_seconds * SAMPLE_RATE as f64) as usize;

    let mut wav_files = Vec::new();
    let mut annotation_rows = vec!["file,onset_s,offset_s,label".to_string()];

    for index in 0..config.target_clips {
        let name = format!("target_{index:03}.wav");
        let (samples, onset, offset) = alarm_clip(&mut rng, samples_per_clip);
        write_wav(dir.join(&name), &samples, SAMPLE_RATE)?;
        annotation_rows.push(format!("{name},{onset},{offset},alarm"));
        wav_files.push(name);
    }
    for index in 0..config.world_clips {
        let name = format!("world_{index:03}.wav");
        let samples = world_clip(&mut rng, samples_per_clip);
        write_wav(dir.join(&name), &samples, SAMPLE_RATE)?;
        wav_files.push(name);
    }

    let annotations_file = dir.join("annotations.csv");
    std::fs::write(&annotations_file, annotation_rows.join("\n") + "\n")?;
    Ok(SynthSummary {
        wav_files,
        annotations_file: annotations_file.to_string_lossy().into_owned(),
        target_label: "alarm".into(),
    })
}

fn alarm_clip(rng: &mut ChaCha8Rng, len: usize) -> (Vec<f64>, f64, f64) {
    let seconds = len as f64 / SAMPLE_RATE as f64;
    let onset = rng.gen_range(0.2..0.5);
    let offset = seconds - rng.gen_range(0.2..0.5);
    let base = rng.gen_range(900.0..1200.0);
    let partials = [
        (base, 1.0),
        (base * 1.5, rng.gen_range(0.35..0.55)),
        (base * 2.0, rng.gen_range(0.2..0.35)),
    ];
    let beep_on = rng.gen_range(0.18..0.3);
    let beep_off = rng.gen_range(0.1..0.2);
    let gain = rng.gen_range(0.35..0.8);
    let noise_floor = rng.gen_range(0.004..0.012);

    let mut dry = vec![0.0f64; len];
    for (i, sample) in dry.iter_mut().enumerate() {
        let t = i as f64 / SAMPLE_RATE as f64;
        let mut v = rng.gen_range(-1.0..1.0) * noise_floor;
        if t >= onset && t < offset {
            let phase_in_pattern = (t - onset) % (beep_on + beep_off);
            if phase_in_pattern < beep_on {
                // soft attack/release so beep edges do not click
                let edge = (phase_in_pattern / 0.01).min(1.0)
                    * ((beep_on - phase_in_pattern) / 0.01).min(1.0);
                for &(freq, amp) in &partials {
                    v += gain * amp * edge * (2.0 * std::f64::consts::PI * freq * t).sin();
                }
            }
        }
        *sample = v;
    }
    (room_filter(rng, &dry), onset, offset)
}

fn world_clip(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let kind = rng.gen_range(0..3);
    let gain = rng.gen_range(0.15..0.6);
    let mut dry = vec![0.0f64; len];
    match kind {
        // filtered noise
        0 => {
            let pole = rng.gen_range(0.5..0.95);
            let mut state = 0.0;
            for sample in dry.iter_mut() {
                state = pole * state + (1.0 - pole) * rng.gen_range(-1.0..1.0);
                *sample = gain * state * 3.0;
            }
        }
        // frequency sweep
        1 => {
            let f0 = rng.gen_range(200.0..600.0);
            let f1 = rng.gen_range(1500.0..3500.0);
            let mut phase = 0.0;
            for (i, sample) in dry.iter_mut().enumerate() {
                let progress = i as f64 / len as f64;
                let freq = f0 + (f1 - f0) * progress;
                phase += 2.0 * std::f64::consts::PI * freq / SAMPLE_RATE as f64;
                *sample = gain * phase.sin() + rng.gen_range(-1.0..1.0) * 0.01;
            }
        }
        // steady low tone cluster
        _ => {
            let tones: Vec<(f64, f64)> = (0..rng.gen_range(3..6))
                .map(|_| (rng.gen_range(120.0..650.0), rng.gen_range(0.2..0.5)))
                .collect();
            for (i, sample) in dry.iter_mut().enumerate() {
                let t = i as f64 / SAMPLE_RATE as f64;
                let mut v = rng.gen_range(-1.0..1.0) * 0.02;
                for &(freq, amp) in &tones {
                    v += gain * amp * (2.0 * std::f64::consts::PI * freq * t).sin();
                }
                *sample = v;
            }
        }
    }
    room_filter(rng, &dry)
}

/// One-pole lowpass plus a faint echo, then peak-normalized to the dry
/// signal's level.
fn room_filter(rng: &mut ChaCha8Rng, dry: &[f64]) -> Vec<f64> {
    let pole = rng.gen_range(0.05..0.2);
    let delay = rng.gen_range(700..1800usize);
    let echo = rng.gen_range(0.15..0.35);
    let mut out = vec![0.0f64; dry.len()];
    let mut state = 0.0;
    for i in 0..dry.len() {
        state = (1.0 - pole) * dry[i] + pole * state;
        out[i] = state;
        if i >= delay {
            out[i] += echo * out[i - delay];
        }
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.95 {
        let scale = 0.95 / peak;
        for v in &mut out {
            *v *= scale;
        }
    }
    out
}
