//! Glue between the signal pipeline and the classifier: dataset-to-tensor
//! conversion, training runs, evaluation reports, ablation sweeps,
//! synthetic data and the spectrum-versus-scalogram demo.

pub mod demo;
mod error;
pub mod eval;
pub mod experiment;
pub mod pipeline;
pub mod sweep;
pub mod synthetic;

pub use error::{HarnessError, Result};
pub use eval::{evaluate, EvalReport};
pub use experiment::{run_experiment, run_on_dataset, ExperimentConfig, ExperimentOutcome, ModelConfig};
pub use pipeline::PipelineConfig;
pub use sweep::{point_seed, run_sweep, SweepDimension, SweepReport, SweepSpec};
pub use synthetic::{synthetic_dataset, SynthClass, SyntheticSpec};
pub use wavehar_nn::metrics::{Confusion, Metrics};
