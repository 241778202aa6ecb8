//! End-to-end experiment: ingest, features, training with grid search,
//! test scoring, DET/EER evaluation, cost accounting and the fixed-point
//! comparison, all driven by one seed.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use earcost_core::costmodel::{
    formula_ops, instrumented_score, FrameModel, ModelDescriptor, OpCount,
};
use earcost_core::error::{Error, Result};
use earcost_core::eval::{
    eer_from_scores, equal_error_rate, export_det_csv, export_det_svg, sweep_det, ScoredFrames,
};
use earcost_core::features::{
    append_deltas, apply_normalization, fit_normalization, FeatureExtractor, FeatureSequence,
    FrameSpec, NormalizationStats,
};
use earcost_core::fixedpoint::{
    compare_float_fixed, lut_size_for, QFormat, QuantizedModel,
};
use earcost_core::fixedpoint::format::write_quantized;
use earcost_core::gmm::{em_fit, EmOptions, GmmParams, GmmScorerPair};
use earcost_core::neural::{
    dnn_forward, rnn_forward, select_dnn, select_rnn, NetworkParams,
};
use earcost_core::svm::{select_svm, svm_score, SvmModel};

use crate::config::ExperimentConfig;
use crate::dataset::{ingest, label_frames, split_clips_for_test, Dataset, LabeledFrameSet};

/// Frame pools and sequences after feature extraction, labeling,
/// normalization and the clip-wise train/test split.
pub struct PreparedData {
    pub spec: FrameSpec,
    pub stats54: NormalizationStats<f64>,
    pub stats18: NormalizationStats<f64>,
    pub train: LabeledFrameSet,
    pub test: LabeledFrameSet,
    pub train_sequences: Vec<(Vec<Vec<f64>>, Vec<bool>)>,
    pub test_sequences: Vec<(Vec<Vec<f64>>, Vec<bool>)>,
    pub train_clips: Vec<String>,
    pub test_clips: Vec<String>,
}

/// Extract 54-dimensional frames (18 base + differences), fit
/// normalization on the training clips only (or reuse previously fitted
/// statistics), and label by window center.
pub fn prepare(
    dataset: &Dataset,
    target_label: &str,
    test_fraction: f64,
    rng_seed: u64,
    stats_override: Option<(NormalizationStats<f64>, NormalizationStats<f64>)>,
) -> Result<PreparedData> {
    let spec = FrameSpec::default();
    let extractor = FeatureExtractor::<f64>::new(spec);
    let (train_idx, test_idx) = split_clips_for_test(dataset, target_label, test_fraction, rng_seed);

    let mut base: Vec<FeatureSequence<f64>> = Vec::with_capacity(dataset.clips.len());
    let mut full: Vec<FeatureSequence<f64>> = Vec::with_capacity(dataset.clips.len());
    for clip in &dataset.clips {
        let features = extractor.extract(&clip.clip)?;
        full.push(append_deltas(&features)?);
        base.push(features);
    }

    let (stats54, stats18) = match stats_override {
        Some(stats) => stats,
        None => {
            let train_full: Vec<&FeatureSequence<f64>> =
                train_idx.iter().map(|&i| &full[i]).collect();
            let train_base: Vec<&FeatureSequence<f64>> =
                train_idx.iter().map(|&i| &base[i]).collect();
            (fit_normalization(&train_full)?, fit_normalization(&train_base)?)
        }
    };

    let build_set = |indices: &[usize]| -> Result<(LabeledFrameSet, Vec<(Vec<Vec<f64>>, Vec<bool>)>)> {
        let mut set = LabeledFrameSet::default();
        let mut sequences = Vec::new();
        for &i in indices {
            let clip_id = &dataset.clips[i].id;
            let labels = label_frames(
                clip_id,
                &full[i],
                &dataset.annotations,
                target_label,
                &spec,
                dataset.clips[i].clip.sample_rate(),
            );
            let normalized54 = apply_normalization(&full[i], &stats54)?;
            for (t, frame) in normalized54.frames().iter().enumerate() {
                set.frames.push(frame.clone());
                set.labels.push(labels[t]);
                set.provenance.push((clip_id.clone(), t));
            }
            let normalized18 = apply_normalization(&base[i], &stats18)?;
            sequences.push((normalized18.frames().to_vec(), labels));
        }
        Ok((set, sequences))
    };

    let (train, train_sequences) = build_set(&train_idx)?;
    let (test, test_sequences) = build_set(&test_idx)?;
    Ok(PreparedData {
        spec,
        stats54,
        stats18,
        train,
        test,
        train_sequences,
        test_sequences,
        train_clips: train_idx.iter().map(|&i| dataset.clips[i].id.clone()).collect(),
        test_clips: test_idx.iter().map(|&i| dataset.clips[i].id.clone()).collect(),
    })
}

/// Sequence-level 80/20 split keeping sequences with and without target
/// frames on both sides (sequence lists are clip-ordered, so a plain tail
/// split could leave the validation side single-class).
pub fn split_sequences_for_validation(
    sequences: &[(Vec<Vec<f64>>, Vec<bool>)],
    rng_seed: u64,
) -> (Vec<(Vec<Vec<f64>>, Vec<bool>)>, Vec<(Vec<Vec<f64>>, Vec<bool>)>) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for with_target in [true, false] {
        let mut group: Vec<usize> = (0..sequences.len())
            .filter(|&i| sequences[i].1.iter().any(|&l| l) == with_target)
            .collect();
        group.shuffle(&mut rng);
        let n_val = (group.len() / 5).max(usize::from(group.len() > 1));
        for (rank, &i) in group.iter().enumerate() {
            if rank < n_val {
                validation.push(sequences[i].clone());
            } else {
                train.push(sequences[i].clone());
            }
        }
    }
    (train, validation)
}

/// Frame-level 80/20 split for hyperparameter selection.
fn fit_val_split(frames: &[Vec<f64>], rng_seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    let mut indices: Vec<usize> = (0..frames.len()).collect();
    indices.shuffle(&mut rng);
    let n_val = (frames.len() as f64 * 0.2).round() as usize;
    let (val_idx, fit_idx) = indices.split_at(n_val.min(frames.len()));
    (
        fit_idx.iter().map(|&i| frames[i].clone()).collect(),
        val_idx.iter().map(|&i| frames[i].clone()).collect(),
    )
}

/// One family's selected model and its evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyOutcome {
    pub family: String,
    pub hyperparameters: String,
    pub descriptor: ModelDescriptor,
    pub validation_eer: f64,
    pub test_eer: f64,
    pub eer_threshold: f64,
    pub formula_ops: OpCount,
    pub instrumented_ops: OpCount,
    pub ops_match: bool,
    pub total_ops: u64,
    pub score_file: String,
    pub det_csv: String,
    pub det_svg: String,
    pub model_file: String,
}

/// One grid cell for the EER-versus-operations scatter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub family: String,
    pub configuration: String,
    pub total_ops: u64,
    pub validation_eer: f64,
}

/// Fixed-point fidelity results for one family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointOutcome {
    pub family: String,
    pub q_format: String,
    pub max_abs_score_delta: f64,
    pub eer_float: f64,
    pub eer_fixed: f64,
    pub saturated_frames: usize,
    /// (fractional bits, max |score delta|) across the precision sweep.
    pub delta_by_fractional_bits: Vec<(u8, f64)>,
    pub model_file: String,
}

/// The whole run, also written as `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub seed: u64,
    pub target_label: String,
    pub trained: bool,
    pub train_clips: Vec<String>,
    pub test_clips: Vec<String>,
    pub train_frames: usize,
    pub test_frames: usize,
    pub families: Vec<FamilyOutcome>,
    pub scatter: Vec<ScatterPoint>,
    pub fixed_point: Vec<FixedPointOutcome>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StatsFile {
    format_version: u32,
    mean54: Vec<f64>,
    std54: Vec<f64>,
    mean18: Vec<f64>,
    std18: Vec<f64>,
}

fn write_stats(path: &Path, stats54: &NormalizationStats<f64>, stats18: &NormalizationStats<f64>) -> Result<()> {
    let file = StatsFile {
        format_version: 1,
        mean54: stats54.mean.clone(),
        std54: stats54.std.clone(),
        mean18: stats18.mean.clone(),
        std18: stats18.std.clone(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file).map_err(Error::from)?)?;
    Ok(())
}

fn read_stats(path: &Path) -> Result<(NormalizationStats<f64>, NormalizationStats<f64>)> {
    let file: StatsFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Ok((
        NormalizationStats {
            mean: file.mean54,
            std: file.std54,
        },
        NormalizationStats {
            mean: file.mean18,
            std: file.std18,
        },
    ))
}

fn write_scores(path: &Path, set: &LabeledFrameSet, scores: &[f64]) -> Result<()> {
    let mut out = String::from("clip,frame_index,score,label\n");
    for (i, score) in scores.iter().enumerate() {
        let (clip, frame) = &set.provenance[i];
        let label = if set.labels[i] { "target" } else { "non-target" };
        writeln!(out, "{clip},{frame},{score},{label}").ok();
    }
    std::fs::write(path, out)?;
    Ok(())
}

struct FamilyEvaluation {
    validation_eer: f64,
    scores: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn finish_family(
    out_dir: &Path,
    family: &str,
    hyperparameters: String,
    descriptor: ModelDescriptor,
    model: &FrameModel<'_, f64>,
    evaluation: &FamilyEvaluation,
    test: &LabeledFrameSet,
    model_file: String,
) -> Result<FamilyOutcome> {
    let sf = ScoredFrames::new(evaluation.scores.clone(), test.labels.clone())?;
    let curve = sweep_det(&sf)?;
    let eer = equal_error_rate(&curve)?;

    let score_file = format!("scores_{family}.csv");
    write_scores(&out_dir.join(&score_file), test, &evaluation.scores)?;
    let det_csv = format!("det_{family}.csv");
    export_det_csv(&curve, out_dir.join(&det_csv))?;
    let det_svg = format!("det_{family}.svg");
    export_det_svg(&curve, out_dir.join(&det_svg))?;

    let probe = &test.frames[0];
    let probe18: Vec<f64>;
    let x: &[f64] = match model {
        FrameModel::Rnn(_) => {
            probe18 = probe[..18].to_vec();
            &probe18
        }
        _ => probe,
    };
    let (_, counter) = instrumented_score(x, model)?;
    let instrumented = counter.table_count();
    let formula = formula_ops(&descriptor);

    Ok(FamilyOutcome {
        family: family.to_string(),
        hyperparameters,
        descriptor,
        validation_eer: evaluation.validation_eer,
        test_eer: eer.eer_percent,
        eer_threshold: eer.threshold,
        formula_ops: formula,
        instrumented_ops: instrumented,
        ops_match: formula == instrumented,
        total_ops: formula.total(),
        score_file,
        det_csv,
        det_svg,
        model_file,
    })
}

/// Run the full experiment described by the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    std::fs::create_dir_all(&config.output_dir)?;
    let out = config.output_dir.as_path();
    let dataset = ingest(&config.dataset_dir, &config.annotations)?;
    for warning in &dataset.warnings {
        eprintln!("warning: {warning}");
    }
    let stats_override = match &config.score_only {
        Some(dir) => Some(read_stats(&dir.join("normalization.json"))?),
        None => None,
    };
    let data = prepare(
        &dataset,
        &config.target_label,
        config.test_fraction,
        config.seed,
        stats_override,
    )?;

    let (train_target, train_world) = data.train.split_by_label();
    if train_target.is_empty() || train_world.is_empty() {
        return Err(Error::SingleClass);
    }
    let (fit_target, val_target) = fit_val_split(&train_target, config.seed ^ 0x7a67e7);
    let (fit_world, val_world) = fit_val_split(&train_world, config.seed ^ 0x0cea11);

    write_stats(&out.join("normalization.json"), &data.stats54, &data.stats18)?;

    let mut summary = ExperimentSummary {
        seed: config.seed,
        target_label: config.target_label.clone(),
        trained: config.score_only.is_none(),
        train_clips: data.train_clips.clone(),
        test_clips: data.test_clips.clone(),
        train_frames: data.train.len(),
        test_frames: data.test.len(),
        families: Vec::new(),
        scatter: Vec::new(),
        fixed_point: Vec::new(),
    };

    // ---- mixture pair ----
    let (gmm_pair, gmm_val_eer, gmm_hyper) = match &config.score_only {
        Some(dir) => {
            let target = GmmParams::<f64>::from_json(&std::fs::read_to_string(
                dir.join("gmm_target.json"),
            )?)?;
            let ubm =
                GmmParams::<f64>::from_json(&std::fs::read_to_string(dir.join("gmm_ubm.json"))?)?;
            let components = target.components();
            (
                GmmScorerPair::new(target, ubm)?,
                f64::NAN,
                format!("M={components} (pretrained)"),
            )
        }
        None => {
            let mut best: Option<(GmmScorerPair<f64>, f64, usize)> = None;
            for (index, &m) in config.gmm_grid.iter().enumerate() {
                if m == 0 || m > fit_target.len() || m > fit_world.len() {
                    continue;
                }
                let seed = config.seed.wrapping_add(index as u64);
                let target = em_fit(&fit_target, m, seed, EmOptions::default())?.params;
                let ubm = em_fit(&fit_world, m, seed ^ 0xb6, EmOptions::default())?.params;
                let pair = GmmScorerPair::new(target, ubm)?;
                let prepared = pair.prepared();
                let sf = ScoredFrames::from_pools(
                    &val_target.iter().map(|x| prepared.score(x)).collect::<Vec<_>>(),
                    &val_world.iter().map(|x| prepared.score(x)).collect::<Vec<_>>(),
                )?;
                let eer = eer_from_scores(&sf)?.eer_percent;
                summary.scatter.push(ScatterPoint {
                    family: "gmm".into(),
                    configuration: format!("M={m}"),
                    total_ops: formula_ops(&ModelDescriptor::Gmm {
                        components: m as u64,
                        dim: 54,
                    })
                    .total(),
                    validation_eer: eer,
                });
                if best.as_ref().map_or(true, |(_, e, _)| eer < *e) {
                    best = Some((pair, eer, m));
                }
            }
            let (pair, eer, m) = best.ok_or_else(|| {
                Error::InvalidParameter("no feasible mixture grid cell".into())
            })?;
            std::fs::write(out.join("gmm_target.json"), pair.target.to_json()?)?;
            std::fs::write(out.join("gmm_ubm.json"), pair.ubm.to_json()?)?;
            (pair, eer, format!("M={m}"))
        }
    };
    let gmm_prepared = gmm_pair.prepared();
    let gmm_eval = FamilyEvaluation {
        validation_eer: gmm_val_eer,
        scores: data.test.frames.iter().map(|x| gmm_prepared.score(x)).collect(),
    };
    summary.families.push(finish_family(
        out,
        "gmm",
        gmm_hyper,
        ModelDescriptor::Gmm {
            components: gmm_pair.target.components() as u64,
            dim: 54,
        },
        &FrameModel::Gmm(&gmm_prepared),
        &gmm_eval,
        &data.test,
        "gmm_target.json".to_string(),
    )?);

    // ---- svm ----
    let (svm_model, svm_val_eer, svm_hyper) = match &config.score_only {
        Some(dir) => {
            let model =
                SvmModel::<f64>::from_json(&std::fs::read_to_string(dir.join("svm.json"))?)?;
            let name = model.kernel().name();
            (model, f64::NAN, format!("{name} (pretrained)"))
        }
        None => {
            let t_grid: Vec<usize> = config
                .svm_t_grid
                .iter()
                .map(|&t| t.min(fit_target.len()).min(fit_world.len()))
                .collect();
            let selection = select_svm(
                &fit_target,
                &fit_world,
                &val_target,
                &val_world,
                &config.svm_kernels,
                &config.svm_c_grid,
                &t_grid,
                config.seed ^ 0x5f3759df,
            )?;
            for cell in &selection.grid {
                let desc = svm_descriptor(&cell.kernel, cell.support_vectors);
                summary.scatter.push(ScatterPoint {
                    family: "svm".into(),
                    configuration: format!(
                        "{} C={} T={}",
                        cell.kernel.name(),
                        cell.c,
                        cell.examples_per_class
                    ),
                    total_ops: formula_ops(&desc).total(),
                    validation_eer: cell.validation_eer,
                });
            }
            std::fs::write(out.join("svm.json"), selection.model.to_json()?)?;
            let hyper = format!(
                "{} C={} T={} sv={}",
                selection.model.kernel().name(),
                selection.c,
                selection.examples_per_class,
                selection.model.num_support_vectors()
            );
            (selection.model, selection.validation_eer, hyper)
        }
    };
    let svm_eval = FamilyEvaluation {
        validation_eer: svm_val_eer,
        scores: data
            .test
            .frames
            .iter()
            .map(|x| svm_score(x, &svm_model))
            .collect::<Result<Vec<_>>>()?,
    };
    summary.families.push(finish_family(
        out,
        "svm",
        svm_hyper,
        svm_descriptor(svm_model.kernel(), svm_model.num_support_vectors()),
        &FrameModel::Svm(&svm_model),
        &svm_eval,
        &data.test,
        "svm.json".to_string(),
    )?);

    // ---- feed-forward net ----
    let (dnn_model, dnn_val_eer, dnn_hyper) = match &config.score_only {
        Some(dir) => {
            let model = NetworkParams::<f64>::from_json(&std::fs::read_to_string(
                dir.join("dnn.json"),
            )?)?;
            let hyper = format!(
                "{} L={} H={} (pretrained)",
                model.activation().name(),
                model.layers(),
                model.hidden_width()
            );
            (model, f64::NAN, hyper)
        }
        None => {
            // all target frames, matched by an equal world draw
            let (train_x, train_y) =
                balanced_training_set(&fit_target, &fit_world, config.seed ^ 0xba1a)?;
            let selection = select_dnn(
                &train_x,
                &train_y,
                &val_target,
                &val_world,
                &config.dnn_grid,
                &config.dnn_spec,
                config.seed ^ 0xd22,
            )?;
            for cell in &selection.grid {
                let desc = dnn_descriptor_parts(cell.activation, cell.layers, cell.hidden, 54)?;
                summary.scatter.push(ScatterPoint {
                    family: "dnn".into(),
                    configuration: format!(
                        "{} L={} H={}",
                        cell.activation.name(),
                        cell.layers,
                        cell.hidden
                    ),
                    total_ops: formula_ops(&desc).total(),
                    validation_eer: cell.validation_eer,
                });
            }
            std::fs::write(out.join("dnn.json"), selection.params.to_json()?)?;
            let hyper = format!(
                "{} L={} H={}",
                selection.params.activation().name(),
                selection.params.layers(),
                selection.params.hidden_width()
            );
            (selection.params, selection.validation_eer, hyper)
        }
    };
    let dnn_eval = FamilyEvaluation {
        validation_eer: dnn_val_eer,
        scores: data
            .test
            .frames
            .iter()
            .map(|x| dnn_forward(x, &dnn_model))
            .collect::<Result<Vec<_>>>()?,
    };
    summary.families.push(finish_family(
        out,
        "dnn",
        dnn_hyper,
        dnn_descriptor_parts(
            dnn_model.activation(),
            dnn_model.layers(),
            dnn_model.hidden_width(),
            54,
        )?,
        &FrameModel::Dnn(&dnn_model),
        &dnn_eval,
        &data.test,
        "dnn.json".to_string(),
    )?);

    // ---- recurrent net (optional) ----
    if config.include_rnn {
        let rnn_model = match &config.score_only {
            Some(dir) => NetworkParams::<f64>::from_json(&std::fs::read_to_string(
                dir.join("rnn.json"),
            )?)?,
            None => {
                let (seq_train, seq_val) =
                    split_sequences_for_validation(&data.train_sequences, config.seed ^ 0x5e9);
                let selection = select_rnn(
                    &seq_train,
                    &seq_val,
                    &config.rnn_grid,
                    &config.rnn_spec,
                    config.seed ^ 0x4242,
                )?;
                std::fs::write(out.join("rnn.json"), selection.params.to_json()?)?;
                selection.params
            }
        };
        // per-frame scores over test sequences, flattened in clip order
        let mut scores = Vec::with_capacity(data.test.len());
        for (seq, _) in &data.test_sequences {
            scores.extend(rnn_forward(seq, &rnn_model)?);
        }
        let rnn_eval = FamilyEvaluation {
            validation_eer: f64::NAN,
            scores,
        };
        summary.families.push(finish_family(
            out,
            "rnn",
            format!("tanh L={} H={}", rnn_model.layers(), rnn_model.hidden_width()),
            ModelDescriptor::RnnTanh {
                layers: rnn_model.layers() as u64,
                hidden: rnn_model.hidden_width() as u64,
                dim: 18,
            },
            &FrameModel::Rnn(&rnn_model),
            &rnn_eval,
            &data.test,
            "rnn.json".to_string(),
        )?);
    }

    // ---- fixed-point comparison ----
    if config.fixed_point {
        let q = QFormat::new(7, config.fixed_fractional_bits)?;
        let mut fixed_targets: Vec<(&str, QuantizedModel, FrameModel<'_, f64>, String)> = vec![(
            "gmm",
            QuantizedModel::from_gmm(&gmm_pair, q, lut_size_for(q))?,
            FrameModel::Gmm(&gmm_prepared),
            "gmm.ecq".into(),
        )];
        fixed_targets.push((
            "dnn",
            QuantizedModel::from_dnn(&dnn_model, q, lut_size_for(q))?,
            FrameModel::Dnn(&dnn_model),
            "dnn.ecq".into(),
        ));
        if matches!(svm_model.kernel(), earcost_core::svm::KernelSpec::Linear) {
            fixed_targets.push((
                "svm",
                QuantizedModel::from_svm_linear(&svm_model, q)?,
                FrameModel::Svm(&svm_model),
                "svm.ecq".into(),
            ));
        }
        for (family, quantized, float_model, file_name) in fixed_targets {
            let report =
                compare_float_fixed(&data.test.frames, &data.test.labels, &float_model, &quantized)?;
            write_quantized(&quantized, out.join(&file_name))?;
            let mut sweep = Vec::new();
            for n in [7u8, 11, 15, 24] {
                let qn = QFormat::new(7, n)?;
                let quantized_n = match &float_model {
                    FrameModel::Gmm(_) => {
                        QuantizedModel::from_gmm(&gmm_pair, qn, lut_size_for(qn))?
                    }
                    FrameModel::Dnn(_) => {
                        QuantizedModel::from_dnn(&dnn_model, qn, lut_size_for(qn))?
                    }
                    _ => QuantizedModel::from_svm_linear(&svm_model, qn)?,
                };
                let r = compare_float_fixed(
                    &data.test.frames,
                    &data.test.labels,
                    &float_model,
                    &quantized_n,
                )?;
                sweep.push((n, r.max_abs_delta));
            }
            summary.fixed_point.push(FixedPointOutcome {
                family: family.to_string(),
                q_format: format!("Q7.{}", config.fixed_fractional_bits),
                max_abs_score_delta: report.max_abs_delta,
                eer_float: report.eer_float,
                eer_fixed: report.eer_fixed,
                saturated_frames: report.saturated_frames,
                delta_by_fractional_bits: sweep,
                model_file: file_name,
            });
        }
    }

    std::fs::write(
        out.join("summary.json"),
        serde_json::to_string_pretty(&summary).map_err(Error::from)?,
    )?;
    std::fs::write(out.join("summary.txt"), render_summary(&summary))?;
    Ok(summary)
}

fn svm_descriptor(kernel: &earcost_core::svm::KernelSpec<f64>, sv: usize) -> ModelDescriptor {
    use earcost_core::svm::KernelSpec;
    let (support_vectors, dim) = (sv as u64, 54);
    match kernel {
        KernelSpec::Linear => ModelDescriptor::SvmLinear {
            support_vectors,
            dim,
        },
        KernelSpec::Polynomial { degree } => ModelDescriptor::SvmPolynomial {
            support_vectors,
            dim,
            degree: *degree as u64,
        },
        KernelSpec::Rbf { .. } => ModelDescriptor::SvmRbf {
            support_vectors,
            dim,
        },
        KernelSpec::Sigmoid => ModelDescriptor::SvmSigmoid {
            support_vectors,
            dim,
        },
    }
}

fn dnn_descriptor_parts(
    activation: earcost_core::neural::Activation,
    layers: usize,
    hidden: usize,
    dim: u64,
) -> Result<ModelDescriptor> {
    use earcost_core::neural::Activation;
    Ok(match activation {
        Activation::Sigmoid => ModelDescriptor::DnnSigmoid {
            layers: layers as u64,
            hidden: hidden as u64,
            dim,
        },
        Activation::Relu => ModelDescriptor::DnnRelu {
            layers: layers as u64,
            hidden: hidden as u64,
            dim,
        },
        Activation::Tanh => {
            return Err(Error::InvalidParameter(
                "tanh feed-forward nets have no cost row".into(),
            ))
        }
    })
}

/// All target frames paired with an equal seeded draw of world frames.
fn balanced_training_set(
    target: &[Vec<f64>],
    world: &[Vec<f64>],
    rng_seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    if world.is_empty() || target.is_empty() {
        return Err(Error::SingleClass);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    let mut world_idx: Vec<usize> = (0..world.len()).collect();
    world_idx.shuffle(&mut rng);
    world_idx.truncate(target.len().min(world.len()));
    let mut xs = target.to_vec();
    let mut ys = vec![true; xs.len()];
    xs.extend(world_idx.iter().map(|&i| world[i].clone()));
    ys.extend(vec![false; world_idx.len()]);
    Ok((xs, ys))
}

/// Human-readable run summary with the per-family results table and the
/// EER-versus-operations scatter.
pub fn render_summary(summary: &ExperimentSummary) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "experiment seed {} | target {:?} | {} train clips / {} test clips | {} train frames / {} test frames",
        summary.seed,
        summary.target_label,
        summary.train_clips.len(),
        summary.test_clips.len(),
        summary.train_frames,
        summary.test_frames
    )
    .ok();
    writeln!(out).ok();
    writeln!(
        out,
        "{:<6} {:<28} {:>8} {:>8} {:>10} {:>6}",
        "family", "configuration", "val EER", "test EER", "#ops", "match"
    )
    .ok();
    for f in &summary.families {
        writeln!(
            out,
            "{:<6} {:<28} {:>8} {:>8.2} {:>10} {:>6}",
            f.family,
            f.hyperparameters,
            if f.validation_eer.is_nan() {
                "-".to_string()
            } else {
                format!("{:.2}", f.validation_eer)
            },
            f.test_eer,
            f.total_ops,
            if f.ops_match { "ok" } else { "DIFF" }
        )
        .ok();
    }
    if !summary.scatter.is_empty() {
        writeln!(out).ok();
        writeln!(out, "EER vs operations (validation, all grid cells):").ok();
        for point in &summary.scatter {
            writeln!(
                out,
                "  {:<6} {:<24} ops={:<9} eer={:.2}",
                point.family, point.configuration, point.total_ops, point.validation_eer
            )
            .ok();
        }
    }
    for fx in &summary.fixed_point {
        writeln!(out).ok();
        writeln!(
            out,
            "fixed point {} {}: max|dscore|={:.3e} eer float={:.2} fixed={:.2} saturated={} sweep={:?}",
            fx.family,
            fx.q_format,
            fx.max_abs_score_delta,
            fx.eer_float,
            fx.eer_fixed,
            fx.saturated_frames,
            fx.delta_by_fractional_bits
        )
        .ok();
    }
    out
}

/// Re-read a summary file.
pub fn read_summary(path: &Path) -> Result<ExperimentSummary> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

