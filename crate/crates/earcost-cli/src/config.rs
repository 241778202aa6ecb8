//! Experiment configuration: a small sectioned key-value file format with
//! command-line overrides layered on top.

use std::collections::BTreeMap;
use std::path::PathBuf;

use earcost_core::error::{Error, Result};
use earcost_core::neural::{Activation, DnnArch, RnnArch, TrainSpecDnn, TrainSpecRnn};
use earcost_core::svm::KernelSpec;

/// Parsed `[section] key = value` document. `#` and `;` start comments.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<(String, String), String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(Error::Format(format!(
                        "config line {}: unterminated section header",
                        index + 1
                    )));
                }
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Format(format!(
                    "config line {}: expected key = value",
                    index + 1
                )));
            };
            values.insert(
                (section.clone(), key.trim().to_string()),
                value.trim().to_string(),
            );
        }
        Ok(Self { values })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Format(format!("config [{section}] {key}: cannot parse {raw:?}"))
            }),
        }
    }

    fn list<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|item| {
                    item.trim().parse::<T>().map_err(|_| {
                        Error::Format(format!(
                            "config [{section}] {key}: cannot parse element {item:?}"
                        ))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

/// Kernel grid entry syntax: `linear`, `poly:N`, `rbf:GAMMA` or `sigmoid`.
pub fn parse_kernel(text: &str) -> Result<KernelSpec<f64>> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (text.trim(), None),
    };
    match (name, arg) {
        ("linear", None) => Ok(KernelSpec::Linear),
        ("sigmoid", None) => Ok(KernelSpec::Sigmoid),
        ("poly", Some(d)) => Ok(KernelSpec::Polynomial {
            degree: d
                .parse()
                .map_err(|_| Error::Format(format!("bad polynomial degree {d:?}")))?,
        }),
        ("rbf", Some(g)) => Ok(KernelSpec::Rbf {
            gamma: g
                .parse()
                .map_err(|_| Error::Format(format!("bad rbf gamma {g:?}")))?,
        }),
        _ => Err(Error::Format(format!(
            "unknown kernel {text:?} (expected linear, poly:<d>, rbf:<gamma>, sigmoid)"
        ))),
    }
}

fn parse_activation(text: &str) -> Result<Activation> {
    match text {
        "sigmoid" => Ok(Activation::Sigmoid),
        "relu" => Ok(Activation::Relu),
        other => Err(Error::Format(format!(
            "unknown activation {other:?} (expected sigmoid or relu)"
        ))),
    }
}

/// Everything `run` needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset_dir: PathBuf,
    pub annotations: PathBuf,
    pub target_label: String,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub test_fraction: f64,

    pub gmm_grid: Vec<usize>,
    pub svm_kernels: Vec<KernelSpec<f64>>,
    pub svm_c_grid: Vec<f64>,
    pub svm_t_grid: Vec<usize>,
    pub dnn_grid: Vec<DnnArch>,
    pub dnn_spec: TrainSpecDnn,
    pub include_rnn: bool,
    pub rnn_grid: Vec<RnnArch>,
    pub rnn_spec: TrainSpecRnn,

    pub fixed_point: bool,
    pub fixed_fractional_bits: u8,

    /// Load models from a previous output directory instead of training.
    pub score_only: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset_dir: PathBuf::from("data"),
            annotations: PathBuf::from("data/annotations.csv"),
            target_label: "alarm".into(),
            output_dir: PathBuf::from("out"),
            seed: 1,
            test_fraction: 0.4,
            gmm_grid: vec![2, 4, 8],
            svm_kernels: vec![KernelSpec::Linear, KernelSpec::Rbf { gamma: 0.01 }],
            svm_c_grid: vec![1.0],
            svm_t_grid: vec![500],
            dnn_grid: vec![
                DnnArch {
                    layers: 2,
                    hidden: 16,
                    activation: Activation::Sigmoid,
                },
                DnnArch {
                    layers: 2,
                    hidden: 16,
                    activation: Activation::Relu,
                },
            ],
            dnn_spec: TrainSpecDnn {
                max_epochs: 60,
                ..TrainSpecDnn::default()
            },
            include_rnn: false,
            rnn_grid: vec![RnnArch {
                layers: 1,
                hidden: 16,
            }],
            rnn_spec: TrainSpecRnn {
                initial_lr: 0.02,
                lr_decay_iterations: 2000,
                max_epochs: 20,
                ..TrainSpecRnn::default()
            },
            fixed_point: true,
            fixed_fractional_bits: 24,
            score_only: None,
        }
    }
}

impl ExperimentConfig {
    /// Apply a parsed config file over the defaults.
    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        let mut config = Self::default();
        if let Some(v) = file.get("dataset", "dir") {
            config.dataset_dir = PathBuf::from(v);
        }
        if let Some(v) = file.get("dataset", "annotations") {
            config.annotations = PathBuf::from(v);
        }
        if let Some(v) = file.get("dataset", "target_label") {
            config.target_label = v.to_string();
        }
        if let Some(v) = file.get("experiment", "output_dir") {
            config.output_dir = PathBuf::from(v);
        }
        if let Some(v) = file.parsed::<u64>("experiment", "seed")? {
            config.seed = v;
        }
        if let Some(v) = file.parsed::<f64>("experiment", "test_fraction")? {
            config.test_fraction = v;
        }
        if let Some(v) = file.list::<usize>("gmm", "m_grid")? {
            config.gmm_grid = v;
        }
        if let Some(raw) = file.get("svm", "kernels") {
            config.svm_kernels = raw
                .split(',')
                .map(|k| parse_kernel(k.trim()))
                .collect::<Result<Vec<_>>>()?;
        }
        if let Some(v) = file.list::<f64>("svm", "c_grid")? {
            config.svm_c_grid = v;
        }
        if let Some(v) = file.list::<usize>("svm", "t_grid")? {
            config.svm_t_grid = v;
        }
        if let (Some(layers), Some(hidden)) = (
            file.list::<usize>("dnn", "layers_grid")?,
            file.list::<usize>("dnn", "hidden_grid")?,
        ) {
            let activations = match file.get("dnn", "activations") {
                Some(raw) => raw
                    .split(',')
                    .map(|a| parse_activation(a.trim()))
                    .collect::<Result<Vec<_>>>()?,
                None => vec![Activation::Sigmoid, Activation::Relu],
            };
            config.dnn_grid = layers
                .iter()
                .flat_map(|&l| {
                    let activations = activations.clone();
                    hidden.iter().flat_map(move |&h| {
                        activations.clone().into_iter().map(move |activation| DnnArch {
                            layers: l,
                            hidden: h,
                            activation,
                        })
                    })
                })
                .collect();
        }
        if let Some(v) = file.parsed::<usize>("dnn", "max_epochs")? {
            config.dnn_spec.max_epochs = v;
        }
        if let Some(v) = file.parsed::<bool>("rnn", "enabled")? {
            config.include_rnn = v;
        }
        if let (Some(layers), Some(hidden)) = (
            file.list::<usize>("rnn", "layers_grid")?,
            file.list::<usize>("rnn", "hidden_grid")?,
        ) {
            config.rnn_grid = layers
                .iter()
                .flat_map(|&l| hidden.iter().map(move |&h| RnnArch { layers: l, hidden: h }))
                .collect();
        }
        if let Some(v) = file.parsed::<usize>("rnn", "max_epochs")? {
            config.rnn_spec.max_epochs = v;
        }
        if let Some(v) = file.parsed::<bool>("fixedpoint", "enabled")? {
            config.fixed_point = v;
        }
        if let Some(v) = file.parsed::<u8>("fixedpoint", "fractional_bits")? {
            config.fixed_fractional_bits = v;
        }
        if let Some(v) = file.get("experiment", "score_only_from") {
            config.score_only = Some(PathBuf::from(v));
        }
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_file(&ConfigFile::parse(&text)?)
    }
}
