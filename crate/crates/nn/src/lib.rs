//! A minimal convolutional network written from scratch.
//!
//! Layers (convolution, max pooling, dense, ReLU, softmax and residual
//! blocks) are described by an [`Architecture`] string such as
//! `in(3,32,32) conv(16,5,5,1) relu pool(2,2) dense(10) softmax`, built into a
//! [`Network`] with He-uniform weights, trained with mini-batch SGD or Adam
//! under categorical cross-entropy, and saved to `SHNN` checkpoints.
//!
//! Everything is generic over [`Scalar`] so gradient checks can run in `f64`
//! while training runs in `f32`.

mod checkpoint;
mod error;
mod layers;
pub mod metrics;
mod network;
mod optim;
mod scalar;
mod spec;
mod tensor;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use error::{NnError, Result};
pub use metrics::{Confusion, Metrics};
pub use network::{cross_entropy, gradient_check, Network};
pub use optim::{Optimizer, OptimizerKind};
pub use scalar::Scalar;
pub use spec::{Architecture, LayerSpec, Preset};
pub use tensor::{Shape, Tensor};
pub use train::{evaluate, train, EpochRecord, History, Sample, TrainConfig};
