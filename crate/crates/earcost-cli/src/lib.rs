//! Dataset handling and experiment orchestration for the `earcost`
//! command-line tool.

pub mod config;
pub mod dataset;
pub mod experiment;
pub mod synth;

pub use config::{ConfigFile, ExperimentConfig};
pub use dataset::{ingest, label_frames, read_annotations, Annotation, Dataset, LabeledFrameSet};
pub use experiment::{run_experiment, ExperimentSummary};
pub use synth::{make_synthetic_dataset, SynthConfig};
