use std::str::FromStr;

use wavehar_core::signal_io::{split_train_test, Dataset, SplitSpec};
use wavehar_nn::{train, Architecture, History, Network, Preset, Shape, TrainConfig};

use crate::error::{HarnessError, Result};
use crate::eval::{evaluate, EvalReport};
use crate::pipeline::{dataset_samples, input_shape, PipelineConfig};

/// Network topology independent of the input shape and class count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelConfig {
    /// `[conv(f,k,k,1) relu pool(2,2)]* [dense(u) relu]* dense(K) softmax`
    Cnn {
        filters: Vec<usize>,
        kernel: usize,
        hidden: Vec<usize>,
    },
    /// Layer list in architecture grammar, without the `in(...)` prefix.
    Layers(String),
}

impl ModelConfig {
    pub fn preset(p: Preset) -> Self {
        ModelConfig::Cnn {
            filters: p.filters().to_vec(),
            kernel: 5,
            hidden: vec![1000],
        }
    }

    pub fn build(&self, input: Shape, n_classes: usize) -> Result<Architecture> {
        let arch = match self {
            ModelConfig::Cnn { filters, kernel, hidden } => Architecture::cnn(input, filters, *kernel, hidden, n_classes),
            ModelConfig::Layers(s) => format!("in({},{},{}) {s}", input.c, input.h, input.w).parse()?,
        };
        let k = arch.n_classes()?;
        if k != n_classes {
            return Err(HarnessError::Config(format!(
                "architecture has {k} outputs but the dataset has {n_classes} classes"
            )));
        }
        Ok(arch)
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::preset(Preset::PaperInitial)
    }
}

/// `paper-initial`, `paper-best`, or a layer list such as
/// `conv(8,3,3,1) relu pool(2,2) dense(4) softmax`.
impl FromStr for ModelConfig {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<Preset>() {
            Ok(p) => Ok(Self::preset(p)),
            Err(_) if s.contains('(') || s.contains("relu") => Ok(Self::Layers(s.trim().to_string())),
            Err(e) => Err(e.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub pipeline: PipelineConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub train_fraction: f64,
    /// Sliding-crop stride for training images (requires a crop).
    pub augment_stride: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            train_fraction: 0.8,
            augment_stride: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub network: Network<f32>,
    pub history: History,
    pub eval: EvalReport,
    pub n_train: usize,
    pub n_test: usize,
}

/// Transforms both splits, builds the network with weights seeded by `seed`,
/// trains with shuffling seeded by `seed + 1` and evaluates on `test`.
pub fn run_experiment(train_ds: &Dataset, test_ds: &Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentOutcome> {
    if train_ds.is_empty() || test_ds.is_empty() {
        return Err(wavehar_nn::NnError::EmptyDataset.into());
    }
    let window = train_ds.samples()[0].window_len();
    let input = input_shape(&cfg.pipeline, window)?;
    let arch = cfg.model.build(input, train_ds.n_classes())?;
    let train_samples = dataset_samples(train_ds, &cfg.pipeline, cfg.augment_stride)?;
    let test_samples = dataset_samples(test_ds, &cfg.pipeline, None)?;
    let mut network = Network::<f32>::new(arch, seed)?;
    let tc = TrainConfig {
        seed: seed.wrapping_add(1),
        ..cfg.train
    };
    let history = train(&mut network, &train_samples, &test_samples, &tc)?;
    let eval = evaluate(&network, &test_samples)?;
    Ok(ExperimentOutcome {
        network,
        history,
        eval,
        n_train: train_samples.len(),
        n_test: test_samples.len(),
    })
}

/// Splits `ds` with `split_seed`, then runs [`run_experiment`].
pub fn run_on_dataset(ds: &Dataset, cfg: &ExperimentConfig, split_seed: u64, seed: u64) -> Result<ExperimentOutcome> {
    let (tr, te) = split_train_test(
        ds,
        SplitSpec {
            train_fraction: cfg.train_fraction,
            seed: split_seed,
        },
    )?;
    run_experiment(&tr, &te, cfg, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{synthetic_dataset, SyntheticSpec};
    use wavehar_nn::OptimizerKind;

    #[test]
    fn model_config_parsing() {
        assert_eq!("paper-best".parse::<ModelConfig>().unwrap(), ModelConfig::preset(Preset::PaperBest));
        assert!(matches!("dense(3) softmax".parse::<ModelConfig>().unwrap(), ModelConfig::Layers(_)));
        assert!("paper-huge".parse::<ModelConfig>().is_err());
        let m = ModelConfig::Layers("dense(3) softmax".into());
        assert!(m.build(Shape::new(1, 2, 2), 4).is_err());
    }

    /// Sine versus linear chirp scalograms, 200 train / 50 test.
    #[test]
    fn sine_vs_chirp_reaches_95_percent() {
        let tr = synthetic_dataset(&SyntheticSpec::two_class(100, 1)).unwrap();
        let te = synthetic_dataset(&SyntheticSpec::two_class(25, 2)).unwrap();
        let cfg = ExperimentConfig {
            pipeline: PipelineConfig {
                axes: vec![wavehar_core::Axis::X],
                image_size: Some((16, 32)),
                ..Default::default()
            },
            model: "conv(4,3,3,1) relu pool(2,2) dense(2) softmax".parse().unwrap(),
            train: TrainConfig {
                epochs: 20,
                batch_size: 10,
                optimizer: OptimizerKind::adam(0.005),
                seed: 0,
            },
            ..Default::default()
        };
        let out = run_experiment(&tr, &te, &cfg, 3).unwrap();
        assert_eq!((out.n_train, out.n_test), (200, 50));
        assert_eq!(out.history.epochs.len(), 20);
        assert!(out.eval.metrics.accuracy >= 0.95, "{:?}", out.eval.metrics);
    }
}
