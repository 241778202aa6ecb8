//! Acoustic event detection toolkit: features, training, scoring,
//! DET/EER evaluation, per-frame cost modeling and budget planning.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use earcost_cli::config::{parse_kernel, ExperimentConfig};
use earcost_cli::dataset::ingest;
use earcost_cli::experiment::{prepare, render_summary, run_experiment, split_sequences_for_validation};
use earcost_cli::synth::{make_synthetic_dataset, SynthConfig};
use earcost_core::costmodel::{
    default_verification_sweep, formula_ops, max_model_size, ops_budget_per_frame, verify_costs,
    ModelDescriptor, PlatformBudget, SizingShape,
};
use earcost_core::error::Error;
use earcost_core::eval::{export_det_csv, export_det_svg, sweep_det, ScoredFrames};
use earcost_core::features::{append_deltas, FeatureExtractor};
use earcost_core::gmm::{em_fit, EmOptions, GmmParams, GmmScorerPair};
use earcost_core::neural::{
    train_dnn, train_rnn, Activation, DnnArch, NetworkParams, RnnArch, TrainSpecDnn, TrainSpecRnn,
};
use earcost_core::svm::{smo_train, downsample_training, SmoConfig, SvmModel};
use earcost_core::wav::read_wav;

#[derive(Parser)]
#[command(
    name = "earcost",
    about = "Acoustic event detection under computational cost constraints",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Directory of 16 kHz mono WAV clips
    #[arg(long)]
    dataset: PathBuf,
    /// Annotation CSV (file,onset_s,offset_s,label)
    #[arg(long)]
    annotations: PathBuf,
    /// Target event label
    #[arg(long)]
    label: String,
}

#[derive(Subcommand)]
enum Command {
    /// Extract per-frame features from one WAV into CSV
    Extract {
        /// Input WAV (16 kHz mono PCM)
        #[arg(long)]
        input: PathBuf,
        /// Output CSV path
        #[arg(long)]
        output: PathBuf,
        /// Append first and second order differences (54 dims)
        #[arg(long)]
        deltas: bool,
    },
    /// Generate the bundled synthetic dataset
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 16)]
        target_clips: usize,
        #[arg(long, default_value_t = 16)]
        world_clips: usize,
        #[arg(long, default_value_t = 3.0)]
        clip_seconds: f64,
    },
    /// Train a mixture pair (target model and background model)
    TrainGmm {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        components: usize,
        /// Output directory for gmm_target.json / gmm_ubm.json
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train a kernel SVM on a downsampled balanced set
    TrainSvm {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        seed: u64,
        /// Kernel: linear, poly:N, rbf:GAMMA, sigmoid
        #[arg(long, default_value = "linear")]
        kernel: String,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Examples per class
        #[arg(long, default_value_t = 500)]
        t: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train a feed-forward net
    TrainDnn {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[arg(long, default_value_t = 16)]
        hidden: usize,
        /// sigmoid or relu
        #[arg(long, default_value = "sigmoid")]
        activation: String,
        #[arg(long, default_value_t = 60)]
        max_epochs: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train a recurrent net on 18-dimensional sequences
    TrainRnn {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        layers: usize,
        #[arg(long, default_value_t = 16)]
        hidden: usize,
        #[arg(long, default_value_t = 20)]
        max_epochs: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score a dataset with previously trained models
    Score {
        #[command(flatten)]
        data: DataArgs,
        /// Directory holding the trained models and normalization stats
        #[arg(long)]
        model_dir: PathBuf,
        /// gmm, svm, dnn or rnn
        #[arg(long)]
        family: String,
        /// Output scores CSV
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// DET curve (CSV and optional SVG) from a scores file
    Det {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_svg: Option<PathBuf>,
    },
    /// Equal error rate from a scores file
    Eer {
        #[arg(long)]
        scores: PathBuf,
    },
    /// Per-frame operation counts (one family or the whole table)
    Cost {
        /// gmm, svm-linear, svm-poly, svm-rbf, svm-sigmoid, dnn-sigmoid,
        /// dnn-relu, rnn-tanh; omit for the verification sweep table
        #[arg(long)]
        family: Option<String>,
        #[arg(long, default_value_t = 54)]
        dim: u64,
        #[arg(long)]
        components: Option<u64>,
        #[arg(long)]
        support_vectors: Option<u64>,
        #[arg(long)]
        degree: Option<u64>,
        #[arg(long)]
        layers: Option<u64>,
        #[arg(long)]
        hidden: Option<u64>,
        /// Emit CSV instead of the aligned table
        #[arg(long)]
        csv: bool,
    },
    /// Platform budget: operations per frame and the largest model that fits
    Budget {
        #[arg(long, default_value_t = 80e6)]
        clock_hz: f64,
        /// Fraction of cycles available to the detector
        #[arg(long, default_value_t = 0.8)]
        load: f64,
        #[arg(long, default_value_t = 62.5)]
        frame_rate: f64,
        #[arg(long, default_value_t = 256_000)]
        memory_bytes: u64,
        #[arg(long, default_value_t = 0.8)]
        memory_fraction: f64,
        #[arg(long, default_value_t = 2)]
        bytes_per_param: u32,
        /// gmm, svm-linear, svm-poly, svm-rbf, svm-sigmoid, dnn, rnn, knn
        #[arg(long, default_value = "knn")]
        shape: String,
        #[arg(long, default_value_t = 40)]
        dim: u64,
        #[arg(long, default_value_t = 2)]
        layers: u64,
        #[arg(long, default_value_t = 3)]
        degree: u64,
    },
    /// Full experiment: train, score, evaluate, cost report
    Run {
        /// Config file; flags below override it
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Score with models from this directory instead of training
        #[arg(long)]
        score_only_from: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_category(&err))
        }
    }
}

/// Nonzero exit codes by failure category.
fn exit_category(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 3,
        Error::UnsupportedWav(_) | Error::Format(_) | Error::Json(_) => 4,
        Error::InsufficientAudio(_)
        | Error::NotEnoughData { .. }
        | Error::SingleClass
        | Error::DimensionMismatch { .. } => 5,
        Error::NonFinite(_) => 6,
        Error::InvalidParameter(_) => 2,
    }
}

fn dispatch(command: Command) -> earcost_core::Result<()> {
    match command {
        Command::Extract {
            input,
            output,
            deltas,
        } => {
            let clip = earcost_core::features::AudioClip::from_wav(&read_wav(&input)?)?;
            let extractor = FeatureExtractor::<f64>::default();
            let mut features = extractor.extract(&clip)?;
            if deltas {
                features = append_deltas(&features)?;
            }
            features.write_csv_file(&output)?;
            println!("{} frames x {} dims -> {}", features.len(), features.dim(), output.display());
            Ok(())
        }
        Command::Synth {
            seed,
            out_dir,
            target_clips,
            world_clips,
            clip_seconds,
        } => {
            let summary = make_synthetic_dataset(
                seed,
                &out_dir,
                SynthConfig {
                    target_clips,
                    world_clips,
                    clip_seconds,
                },
            )?;
            println!(
                "{} clips + {} -> {}",
                summary.wav_files.len(),
                summary.annotations_file,
                out_dir.display()
            );
            Ok(())
        }
        Command::TrainGmm {
            data,
            seed,
            components,
            out_dir,
        } => {
            let pools = load_pools(&data, seed)?;
            std::fs::create_dir_all(&out_dir)?;
            let target = em_fit(&pools.target, components, seed, EmOptions::default())?.params;
            let ubm = em_fit(&pools.world, components, seed ^ 0xb6, EmOptions::default())?.params;
            let pair = GmmScorerPair::new(target, ubm)?;
            std::fs::write(out_dir.join("gmm_target.json"), pair.target.to_json()?)?;
            std::fs::write(out_dir.join("gmm_ubm.json"), pair.ubm.to_json()?)?;
            pools.write_stats(&out_dir)?;
            println!("trained M={components} mixture pair -> {}", out_dir.display());
            Ok(())
        }
        Command::TrainSvm {
            data,
            seed,
            kernel,
            c,
            t,
            out_dir,
        } => {
            let pools = load_pools(&data, seed)?;
            std::fs::create_dir_all(&out_dir)?;
            let t = t.min(pools.target.len()).min(pools.world.len());
            let (examples, labels) = downsample_training(&pools.target, &pools.world, t, seed)?;
            let trained = smo_train(
                &examples,
                &labels,
                SmoConfig {
                    c,
                    ..SmoConfig::default()
                },
                parse_kernel(&kernel)?,
            )?;
            if !trained.converged {
                eprintln!("warning: solver hit the pass budget before stationarity");
            }
            std::fs::write(out_dir.join("svm.json"), trained.model.to_json()?)?;
            pools.write_stats(&out_dir)?;
            println!(
                "trained {} svm with {} support vectors -> {}",
                kernel,
                trained.model.num_support_vectors(),
                out_dir.display()
            );
            Ok(())
        }
        Command::TrainDnn {
            data,
            seed,
            layers,
            hidden,
            activation,
            max_epochs,
            out_dir,
        } => {
            let pools = load_pools(&data, seed)?;
            std::fs::create_dir_all(&out_dir)?;
            let activation = match activation.as_str() {
                "sigmoid" => Activation::Sigmoid,
                "relu" => Activation::Relu,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown activation {other:?}"
                    )))
                }
            };
            let trained = train_dnn(
                &pools.train_x,
                &pools.train_y,
                &pools.val_x,
                &pools.val_y,
                DnnArch {
                    layers,
                    hidden,
                    activation,
                },
                &TrainSpecDnn {
                    max_epochs,
                    ..TrainSpecDnn::default()
                },
                seed,
            )?;
            std::fs::write(out_dir.join("dnn.json"), trained.params.to_json()?)?;
            pools.write_stats(&out_dir)?;
            println!(
                "trained dnn {} L={layers} H={hidden} ({} epochs, best val cost {:.4}) -> {}",
                activation.name(),
                trained.epochs_run,
                trained.best_validation_cost,
                out_dir.display()
            );
            Ok(())
        }
        Command::TrainRnn {
            data,
            seed,
            layers,
            hidden,
            max_epochs,
            out_dir,
        } => {
            let pools = load_pools(&data, seed)?;
            std::fs::create_dir_all(&out_dir)?;
            let (seq_train, seq_val) = split_sequences_for_validation(&pools.sequences, seed ^ 0x5e9);
            let trained = train_rnn(
                &seq_train,
                &seq_val,
                RnnArch { layers, hidden },
                &TrainSpecRnn {
                    max_epochs,
                    initial_lr: 0.02,
                    lr_decay_iterations: 2000,
                    ..TrainSpecRnn::default()
                },
                seed,
            )?;
            std::fs::write(out_dir.join("rnn.json"), trained.params.to_json()?)?;
            pools.write_stats(&out_dir)?;
            println!(
                "trained rnn L={layers} H={hidden} ({} epochs) -> {}",
                trained.epochs_run,
                out_dir.display()
            );
            Ok(())
        }
        Command::Score {
            data,
            model_dir,
            family,
            output,
            seed,
        } => score_command(&data, &model_dir, &family, &output, seed),
        Command::Det {
            scores,
            out_csv,
            out_svg,
        } => {
            let sf = read_scores(&scores)?;
            let curve = sweep_det(&sf)?;
            export_det_csv(&curve, &out_csv)?;
            if let Some(svg) = out_svg {
                export_det_svg(&curve, &svg)?;
            }
            println!("{} operating points -> {}", curve.points().len(), out_csv.display());
            Ok(())
        }
        Command::Eer { scores } => {
            let sf = read_scores(&scores)?;
            let eer = earcost_core::eval::eer_from_scores(&sf)?;
            println!("EER {:.4}% at threshold {}", eer.eer_percent, eer.threshold);
            Ok(())
        }
        Command::Cost {
            family,
            dim,
            components,
            support_vectors,
            degree,
            layers,
            hidden,
            csv,
        } => cost_command(family, dim, components, support_vectors, degree, layers, hidden, csv),
        Command::Budget {
            clock_hz,
            load,
            frame_rate,
            memory_bytes,
            memory_fraction,
            bytes_per_param,
            shape,
            dim,
            layers,
            degree,
        } => {
            let budget = PlatformBudget::new(
                clock_hz,
                load,
                frame_rate,
                memory_bytes,
                memory_fraction,
                bytes_per_param,
            )?;
            let shape = match shape.as_str() {
                "gmm" => SizingShape::Gmm { dim },
                "svm-linear" => SizingShape::SvmLinear { dim },
                "svm-poly" => SizingShape::SvmPolynomial { dim, degree },
                "svm-rbf" => SizingShape::SvmRbf { dim },
                "svm-sigmoid" => SizingShape::SvmSigmoid { dim },
                "dnn" => SizingShape::Dnn { layers, dim },
                "rnn" => SizingShape::Rnn { layers, dim },
                "knn" => SizingShape::NearestNeighbour { dim },
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown sizing shape {other:?}"
                    )))
                }
            };
            let per_frame = ops_budget_per_frame(&budget);
            let outcome = max_model_size(&budget, &shape);
            println!("operations per frame: {per_frame}");
            println!("model memory bytes:   {}", budget.model_memory_bytes());
            println!(
                "largest {shape:?}: size {} ({:?}-bound, {} ops, {} parameter bytes)",
                outcome.size, outcome.binding, outcome.ops_at_size, outcome.param_bytes_at_size
            );
            Ok(())
        }
        Command::Run {
            config,
            seed,
            dataset,
            annotations,
            label,
            out_dir,
            score_only_from,
        } => {
            let mut experiment = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(seed) = seed {
                experiment.seed = seed;
            }
            if let Some(dataset) = dataset {
                experiment.dataset_dir = dataset;
            }
            if let Some(annotations) = annotations {
                experiment.annotations = annotations;
            }
            if let Some(label) = label {
                experiment.target_label = label;
            }
            if let Some(out_dir) = out_dir {
                experiment.output_dir = out_dir;
            }
            if let Some(from) = score_only_from {
                experiment.score_only = Some(from);
            }
            let summary = run_experiment(&experiment)?;
            print!("{}", render_summary(&summary));
            Ok(())
        }
    }
}

/// Shared ingestion for the train-* commands: frames, pools, sequences,
/// normalization statistics.
struct Pools {
    target: Vec<Vec<f64>>,
    world: Vec<Vec<f64>>,
    train_x: Vec<Vec<f64>>,
    train_y: Vec<bool>,
    val_x: Vec<Vec<f64>>,
    val_y: Vec<bool>,
    sequences: Vec<(Vec<Vec<f64>>, Vec<bool>)>,
    stats_json: String,
}

impl Pools {
    fn write_stats(&self, out_dir: &std::path::Path) -> earcost_core::Result<()> {
        std::fs::write(out_dir.join("normalization.json"), &self.stats_json)?;
        Ok(())
    }
}

fn load_pools(data: &DataArgs, seed: u64) -> earcost_core::Result<Pools> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let dataset = ingest(&data.dataset, &data.annotations)?;
    // train-* commands fit on everything; held-out evaluation is the
    // `run` subcommand's job
    let prepared = prepare(&dataset, &data.label, 0.0, seed, None)?;
    let (target, world) = prepared.train.split_by_label();
    if target.is_empty() || world.is_empty() {
        return Err(Error::SingleClass);
    }
    let mut train_x: Vec<Vec<f64>> = target.clone();
    train_x.extend(world.iter().cloned());
    let mut train_y = vec![true; target.len()];
    train_y.extend(vec![false; world.len()]);
    // simple 80/20 shuffle for early stopping
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xa111));
    let n_val = (train_x.len() / 5).max(1);
    let val_idx = &order[..n_val];
    let fit_idx = &order[n_val..];
    let stats_json = {
        #[derive(serde::Serialize)]
        struct StatsFile<'a> {
            format_version: u32,
            mean54: &'a [f64],
            std54: &'a [f64],
            mean18: &'a [f64],
            std18: &'a [f64],
        }
        serde_json::to_string_pretty(&StatsFile {
            format_version: 1,
            mean54: &prepared.stats54.mean,
            std54: &prepared.stats54.std,
            mean18: &prepared.stats18.mean,
            std18: &prepared.stats18.std,
        })
        .map_err(Error::from)?
    };
    Ok(Pools {
        target,
        world,
        val_x: val_idx.iter().map(|&i| train_x[i].clone()).collect(),
        val_y: val_idx.iter().map(|&i| train_y[i]).collect(),
        train_x: fit_idx.iter().map(|&i| train_x[i].clone()).collect(),
        train_y: fit_idx.iter().map(|&i| train_y[i]).collect(),
        sequences: prepared.train_sequences,
        stats_json,
    })
}

fn score_command(
    data: &DataArgs,
    model_dir: &PathBuf,
    family: &str,
    output: &PathBuf,
    seed: u64,
) -> earcost_core::Result<()> {
    let dataset = ingest(&data.dataset, &data.annotations)?;
    let stats = {
        #[derive(serde::Deserialize)]
        struct StatsFile {
            mean54: Vec<f64>,
            std54: Vec<f64>,
            mean18: Vec<f64>,
            std18: Vec<f64>,
        }
        let file: StatsFile = serde_json::from_str(&std::fs::read_to_string(
            model_dir.join("normalization.json"),
        )?)?;
        (
            earcost_core::features::NormalizationStats {
                mean: file.mean54,
                std: file.std54,
            },
            earcost_core::features::NormalizationStats {
                mean: file.mean18,
                std: file.std18,
            },
        )
    };
    let prepared = prepare(&dataset, &data.label, 0.0, seed, Some(stats))?;
    let set = &prepared.train;

    let scores: Vec<f64> = match family {
        "gmm" => {
            let target = GmmParams::<f64>::from_json(&std::fs::read_to_string(
                model_dir.join("gmm_target.json"),
            )?)?;
            let ubm = GmmParams::<f64>::from_json(&std::fs::read_to_string(
                model_dir.join("gmm_ubm.json"),
            )?)?;
            let prepared_pair = GmmScorerPair::new(target, ubm)?.prepared();
            set.frames.iter().map(|x| prepared_pair.score(x)).collect()
        }
        "svm" => {
            let model =
                SvmModel::<f64>::from_json(&std::fs::read_to_string(model_dir.join("svm.json"))?)?;
            set.frames
                .iter()
                .map(|x| earcost_core::svm::svm_score(x, &model))
                .collect::<earcost_core::Result<Vec<_>>>()?
        }
        "dnn" => {
            let model = NetworkParams::<f64>::from_json(&std::fs::read_to_string(
                model_dir.join("dnn.json"),
            )?)?;
            set.frames
                .iter()
                .map(|x| earcost_core::neural::dnn_forward(x, &model))
                .collect::<earcost_core::Result<Vec<_>>>()?
        }
        "rnn" => {
            let model = NetworkParams::<f64>::from_json(&std::fs::read_to_string(
                model_dir.join("rnn.json"),
            )?)?;
            let mut scores = Vec::new();
            for (seq, _) in &prepared.train_sequences {
                scores.extend(earcost_core::neural::rnn_forward(seq, &model)?);
            }
            scores
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown family {other:?} (expected gmm, svm, dnn or rnn)"
            )))
        }
    };

    let mut out = String::from("clip,frame_index,score,label\n");
    for (i, score) in scores.iter().enumerate() {
        let (clip, frame) = &set.provenance[i];
        let label = if set.labels[i] { "target" } else { "non-target" };
        out.push_str(&format!("{clip},{frame},{score},{label}\n"));
    }
    std::fs::write(output, out)?;
    println!("{} scored frames -> {}", scores.len(), output.display());
    Ok(())
}

/// Parse a scores CSV back into scored frames.
fn read_scores(path: &PathBuf) -> earcost_core::Result<ScoredFrames<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty scores file".into()))?;
    if header != "clip,frame_index,score,label" {
        return Err(Error::Format(format!("unexpected scores header {header:?}")));
    }
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (index, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!(
                "scores line {}: expected 4 fields",
                index + 2
            )));
        }
        scores.push(fields[2].parse::<f64>().map_err(|e| {
            Error::Format(format!("scores line {}: {e}", index + 2))
        })?);
        labels.push(fields[3] == "target");
    }
    ScoredFrames::new(scores, labels)
}

#[allow(clippy::too_many_arguments)]
fn cost_command(
    family: Option<String>,
    dim: u64,
    components: Option<u64>,
    support_vectors: Option<u64>,
    degree: Option<u64>,
    layers: Option<u64>,
    hidden: Option<u64>,
    csv: bool,
) -> earcost_core::Result<()> {
    let descriptors: Vec<ModelDescriptor> = match family.as_deref() {
        None => default_verification_sweep(),
        Some(name) => {
            let missing = |what: &str| {
                Error::InvalidParameter(format!("family {name:?} needs --{what}"))
            };
            vec![match name {
                "gmm" => ModelDescriptor::Gmm {
                    components: components.ok_or_else(|| missing("components"))?,
                    dim,
                },
                "svm-linear" => ModelDescriptor::SvmLinear {
                    support_vectors: support_vectors.ok_or_else(|| missing("support-vectors"))?,
                    dim,
                },
                "svm-poly" => ModelDescriptor::SvmPolynomial {
                    support_vectors: support_vectors.ok_or_else(|| missing("support-vectors"))?,
                    dim,
                    degree: degree.ok_or_else(|| missing("degree"))?,
                },
                "svm-rbf" => ModelDescriptor::SvmRbf {
                    support_vectors: support_vectors.ok_or_else(|| missing("support-vectors"))?,
                    dim,
                },
                "svm-sigmoid" => ModelDescriptor::SvmSigmoid {
                    support_vectors: support_vectors.ok_or_else(|| missing("support-vectors"))?,
                    dim,
                },
                "dnn-sigmoid" => ModelDescriptor::DnnSigmoid {
                    layers: layers.ok_or_else(|| missing("layers"))?,
                    hidden: hidden.ok_or_else(|| missing("hidden"))?,
                    dim,
                },
                "dnn-relu" => ModelDescriptor::DnnRelu {
                    layers: layers.ok_or_else(|| missing("layers"))?,
                    hidden: hidden.ok_or_else(|| missing("hidden"))?,
                    dim,
                },
                "rnn-tanh" => ModelDescriptor::RnnTanh {
                    layers: layers.ok_or_else(|| missing("layers"))?,
                    hidden: hidden.ok_or_else(|| missing("hidden"))?,
                    dim,
                },
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown family {other:?}"
                    )))
                }
            }]
        }
    };

    if csv {
        println!("family,size,dim,additions,multiplications,lut_lookups,comparisons,total");
        for desc in &descriptors {
            let ops = formula_ops(desc);
            println!(
                "{},{},{},{},{},{},{},{}",
                desc.family_name(),
                desc.size_parameter(),
                desc.dim(),
                ops.additions,
                ops.multiplications,
                ops.lut_lookups,
                ops.comparisons,
                ops.total()
            );
        }
    } else if descriptors.len() == 1 {
        let desc = &descriptors[0];
        let ops = formula_ops(desc);
        println!("{} (size {}, dim {}): {}", desc.family_name(), desc.size_parameter(), desc.dim(), ops);
    } else {
        // whole table: verify instrumented inference along the way
        let report = verify_costs::<f64>(&descriptors, 1)?;
        print!("{report}");
        if !report.all_match() {
            return Err(Error::InvalidParameter(
                "instrumented counts diverged from the formulas".into(),
            ));
        }
    }
    Ok(())
}
