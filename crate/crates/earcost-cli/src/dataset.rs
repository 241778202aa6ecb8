//! Dataset ingestion: WAV clips, onset/offset annotations, frame labeling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use earcost_core::error::{Error, Result};
use earcost_core::features::{AudioClip, FeatureSequence, FrameSpec};
use earcost_core::wav::read_wav;

/// One annotated event: a labeled [onset, offset) span inside a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub file: String,
    pub onset_s: f64,
    pub offset_s: f64,
    pub label: String,
}

/// Parse an annotation CSV with header `file,onset_s,offset_s,label`.
/// Malformed rows fail with their line numbers; overlapping rows with the
/// same file and label are merged, each merge reported as a warning.
pub fn read_annotations(text: &str) -> Result<(Vec<Annotation>, Vec<String>)> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty annotation file".into()))?
        .1
        .trim();
    if header != "file,onset_s,offset_s,label" {
        return Err(Error::Format(format!(
            "annotation header must be \"file,onset_s,offset_s,label\", got {header:?}"
        )));
    }
    let mut annotations = Vec::new();
    let mut malformed = Vec::new();
    for (index, line) in lines {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            malformed.push(format!("line {line_no}: expected 4 fields, got {}", fields.len()));
            continue;
        }
        let onset = fields[1].trim().parse::<f64>();
        let offset = fields[2].trim().parse::<f64>();
        match (onset, offset) {
            (Ok(onset_s), Ok(offset_s)) => {
                if !(onset_s >= 0.0 && onset_s < offset_s) {
                    malformed.push(format!(
                        "line {line_no}: need 0 <= onset < offset, got {onset_s}..{offset_s}"
                    ));
                    continue;
                }
                annotations.push(Annotation {
                    file: fields[0].trim().to_string(),
                    onset_s,
                    offset_s,
                    label: fields[3].trim().to_string(),
                });
            }
            _ => malformed.push(format!("line {line_no}: onset/offset not numeric")),
        }
    }
    if !malformed.is_empty() {
        return Err(Error::Format(format!(
            "malformed annotation rows: {}",
            malformed.join("; ")
        )));
    }
    let warnings = merge_overlaps(&mut annotations);
    Ok((annotations, warnings))
}

/// Merge overlapping or touching spans that share file and label.
fn merge_overlaps(annotations: &mut Vec<Annotation>) -> Vec<String> {
    let mut warnings = Vec::new();
    let mut by_key: BTreeMap<(String, String), Vec<Annotation>> = BTreeMap::new();
    for a in annotations.drain(..) {
        by_key
            .entry((a.file.clone(), a.label.clone()))
            .or_default()
            .push(a);
    }
    let mut merged_all = Vec::new();
    for ((file, label), mut group) in by_key {
        group.sort_by(|a, b| a.onset_s.partial_cmp(&b.onset_s).unwrap());
        let mut merged: Vec<Annotation> = Vec::new();
        for a in group {
            match merged.last_mut() {
                Some(last) if a.onset_s <= last.offset_s => {
                    warnings.push(format!(
                        "merged overlapping {label:?} spans in {file}: {}..{} and {}..{}",
                        last.onset_s, last.offset_s, a.onset_s, a.offset_s
                    ));
                    last.offset_s = last.offset_s.max(a.offset_s);
                }
                _ => merged.push(a),
            }
        }
        merged_all.extend(merged);
    }
    *annotations = merged_all;
    warnings
}

/// A clip loaded from disk.
#[derive(Debug, Clone)]
pub struct LoadedClip {
    pub id: String,
    pub path: PathBuf,
    pub clip: AudioClip<f64>,
}

/// Clips plus validated annotations.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub clips: Vec<LoadedClip>,
    pub annotations: Vec<Annotation>,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn clip_index(&self, file: &str) -> Option<usize> {
        self.clips.iter().position(|c| c.id == file)
    }
}

/// Load every WAV in `dataset_dir` and the annotation CSV, checking that
/// each annotation resolves to a clip and fits inside it.
pub fn ingest(dataset_dir: impl AsRef<Path>, annotations_file: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dataset_dir.as_ref();
    let mut wavs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map_or(false, |e| e == "wav"))
        .collect();
    wavs.sort();
    if wavs.is_empty() {
        return Err(Error::NotEnoughData {
            needed: 1,
            available: 0,
        });
    }
    let mut clips = Vec::with_capacity(wavs.len());
    for path in wavs {
        let id = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::Format(format!("unreadable file name: {path:?}")))?
            .to_string();
        let data = read_wav(&path)?;
        clips.push(LoadedClip {
            id,
            clip: AudioClip::from_wav(&data)?,
            path,
        });
    }

    let text = std::fs::read_to_string(annotations_file.as_ref())?;
    let (annotations, warnings) = read_annotations(&text)?;
    let dataset = Dataset {
        clips,
        annotations,
        warnings,
    };
    for a in &dataset.annotations {
        let Some(index) = dataset.clip_index(&a.file) else {
            return Err(Error::Format(format!(
                "annotation references missing clip {:?}",
                a.file
            )));
        };
        let duration = dataset.clips[index].clip.duration_s();
        if a.offset_s > duration + 1e-9 {
            return Err(Error::Format(format!(
                "annotation {}..{} exceeds {:?} duration {duration:.3}",
                a.onset_s, a.offset_s, a.file
            )));
        }
    }
    Ok(dataset)
}

/// Feature frames with one binary label each and their provenance.
#[derive(Debug, Clone, Default)]
pub struct LabeledFrameSet {
    pub frames: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    /// (clip id, frame index) per row.
    pub provenance: Vec<(String, usize)>,
}

impl LabeledFrameSet {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn split_by_label(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut target = Vec::new();
        let mut world = Vec::new();
        for (frame, &label) in self.frames.iter().zip(&self.labels) {
            if label {
                target.push(frame.clone());
            } else {
                world.push(frame.clone());
            }
        }
        (target, world)
    }
}

/// Label each frame of a clip's features: target when the frame's window
/// center falls inside any annotation carrying the target label.
pub fn label_frames(
    clip_id: &str,
    features: &FeatureSequence<f64>,
    annotations: &[Annotation],
    target_label: &str,
    spec: &FrameSpec,
    sample_rate: u32,
) -> Vec<bool> {
    let spans: Vec<(f64, f64)> = annotations
        .iter()
        .filter(|a| a.file == clip_id && a.label == target_label)
        .map(|a| (a.onset_s, a.offset_s))
        .collect();
    (0..features.len())
        .map(|t| {
            let center = spec.frame_center_s(t, sample_rate);
            spans.iter().any(|&(on, off)| center >= on && center < off)
        })
        .collect()
}

/// Split clip indices into train and test sets, clip-wise, keeping the
/// given fraction for testing. Clips that carry target annotations and
/// clips that do not are split separately so both sides keep both kinds.
pub fn split_clips_for_test(
    dataset: &Dataset,
    target_label: &str,
    test_fraction: f64,
    rng_seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let has_target = |i: usize| {
        dataset
            .annotations
            .iter()
            .any(|a| a.label == target_label && a.file == dataset.clips[i].id)
    };
    for keep_target in [true, false] {
        let mut group: Vec<usize> = (0..dataset.clips.len())
            .filter(|&i| has_target(i) == keep_target)
            .collect();
        group.shuffle(&mut rng);
        let n_test = if test_fraction <= 0.0 || group.len() <= 1 {
            0
        } else {
            (((group.len() as f64) * test_fraction).round() as usize)
                .clamp(1, group.len() - 1)
        };
        test.extend(group.drain(..n_test));
        train.extend(group);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use earcost_core::features::{BASE_DIM, FeatureExtractor};
    use earcost_core::wav::write_wav;

    #[test]
    fn parses_and_merges_annotations() {
        let text = "file,onset_s,offset_s,label\n\
                    a.wav,0.5,1.0,alarm\n\
                    a.wav,0.9,1.4,alarm\n\
                    a.wav,2.0,2.5,alarm\n\
                    b.wav,0.1,0.4,other\n";
        let (annotations, warnings) = read_annotations(text).unwrap();
        assert_eq!(annotations.len(), 3);
        assert_eq!(warnings.len(), 1);
        let merged = annotations
            .iter()
            .find(|a| a.file == "a.wav" && a.onset_s == 0.5)
            .unwrap();
        assert_eq!(merged.offset_s, 1.4);
    }

    #[test]
    fn malformed_rows_fail_with_line_numbers() {
        let text = "file,onset_s,offset_s,label\n\
                    a.wav,0.5,1.0,alarm\n\
                    a.wav,oops,1.0,alarm\n\
                    a.wav,1.5,1.0,alarm\n";
        let err = read_annotations(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn empty_annotation_body_is_fine() {
        let (annotations, warnings) = read_annotations("file,onset_s,offset_s,label\n").unwrap();
        assert!(annotations.is_empty());
        assert!(warnings.is_empty());
    }

    #[test]
    fn center_rule_labels_expected_frames() {
        // 2 s clip; annotation over [0.5, 1.0)
        let dir = std::env::temp_dir().join(format!("earcost_ds_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let samples: Vec<f64> = (0..32_000).map(|i| (i as f64 * 0.01).sin() * 0.1).collect();
        write_wav(dir.join("c.wav"), &samples, 16_000).unwrap();
        std::fs::write(
            dir.join("ann.csv"),
            "file,onset_s,offset_s,label\nc.wav,0.5,1.0,alarm\n",
        )
        .unwrap();
        let dataset = ingest(&dir, dir.join("ann.csv")).unwrap();
        let spec = FrameSpec::default();
        let extractor = FeatureExtractor::<f64>::new(spec);
        let features = extractor.extract(&dataset.clips[0].clip).unwrap();
        let labels = label_frames("c.wav", &features, &dataset.annotations, "alarm", &spec, 16_000);

        // oracle: frame centers are (t * 256 + 256) / 16000
        let expected: Vec<bool> = (0..features.len())
            .map(|t| {
                let center = (t * 256 + 256) as f64 / 16_000.0;
                (0.5..1.0).contains(&center)
            })
            .collect();
        assert_eq!(labels, expected);
        let count = labels.iter().filter(|&&l| l).count();
        // centers hit every 16 ms; the half-open window holds 0.5 s of them
        assert!((30..=32).contains(&count), "target frames {count}");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn labeling_is_all_negative_without_annotations() {
        let frames = FeatureSequence::new(vec![vec![0.0; BASE_DIM]; 10], BASE_DIM).unwrap();
        let labels = label_frames(
            "x.wav",
            &frames,
            &[],
            "alarm",
            &FrameSpec::default(),
            16_000,
        );
        assert!(labels.iter().all(|&l| !l));
    }

    #[test]
    fn clip_split_honors_zero_and_fractional_test_shares() {
        let dir = std::env::temp_dir().join(format!("earcost_split_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let samples = vec![0.05f64; 16_000];
        let mut rows = vec!["file,onset_s,offset_s,label".to_string()];
        for i in 0..4 {
            write_wav(dir.join(format!("t{i}.wav")), &samples, 16_000).unwrap();
            rows.push(format!("t{i}.wav,0.1,0.9,alarm"));
            write_wav(dir.join(format!("w{i}.wav")), &samples, 16_000).unwrap();
        }
        std::fs::write(dir.join("ann.csv"), rows.join("\n") + "\n").unwrap();
        let dataset = ingest(&dir, dir.join("ann.csv")).unwrap();

        let (train, test) = split_clips_for_test(&dataset, "alarm", 0.0, 3);
        assert_eq!(train.len(), 8);
        assert!(test.is_empty());

        let (train, test) = split_clips_for_test(&dataset, "alarm", 0.5, 3);
        assert_eq!(train.len(), 4);
        assert_eq!(test.len(), 4);
        // both sides keep target-bearing and world clips
        for side in [&train, &test] {
            assert!(side.iter().any(|&i| dataset.clips[i].id.starts_with('t')));
            assert!(side.iter().any(|&i| dataset.clips[i].id.starts_with('w')));
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn annotation_covering_everything_labels_every_frame() {
        let frames = FeatureSequence::new(vec![vec![0.0; BASE_DIM]; 40], BASE_DIM).unwrap();
        let spec = FrameSpec::default();
        let whole = Annotation {
            file: "x.wav".into(),
            onset_s: 0.0,
            offset_s: 10.0,
            label: "alarm".into(),
        };
        let labels = label_frames("x.wav", &frames, &[whole], "alarm", &spec, 16_000);
        assert!(labels.iter().all(|&l| l));
        // a different clip id stays negative
        let labels = label_frames(
            "y.wav",
            &frames,
            &[Annotation {
                file: "x.wav".into(),
                onset_s: 0.0,
                offset_s: 10.0,
                label: "alarm".into(),
            }],
            "alarm",
            &spec,
            16_000,
        );
        assert!(labels.iter().all(|&l| !l));
    }

    #[test]
    fn labeling_is_order_independent() {
        let frames = FeatureSequence::new(vec![vec![0.0; BASE_DIM]; 60], BASE_DIM).unwrap();
        let spec = FrameSpec::default();
        let a = Annotation {
            file: "x.wav".into(),
            onset_s: 0.1,
            offset_s: 0.3,
            label: "alarm".into(),
        };
        let b = Annotation {
            file: "x.wav".into(),
            onset_s: 0.6,
            offset_s: 0.9,
            label: "alarm".into(),
        };
        let fwd = label_frames("x.wav", &frames, &[a.clone(), b.clone()], "alarm", &spec, 16_000);
        let rev = label_frames("x.wav", &frames, &[b, a], "alarm", &spec, 16_000);
        assert_eq!(fwd, rev);
        assert!(fwd.iter().any(|&l| l));
    }
}
