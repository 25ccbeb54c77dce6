//! Core signal-processing pieces of the wavehar pipeline.
//!
//! Multi-axis accelerometer windows are loaded by [`signal_io`], turned into
//! time-scale coefficient maps by [`transform`] using the mother wavelets in
//! [`wavelet`], and rendered into stacked grayscale image tensors by
//! [`image`], ready for the classifier in `wavehar-nn`.

pub mod image;
pub mod signal_io;
pub mod transform;
pub mod wavelet;

pub use image::{CropSpec, ImagePlane, ImageTensor, Normalization, Provenance};
pub use signal_io::{Axis, Dataset, MultiAxisSample, Schema, Signal, SplitSpec};
pub use transform::{Boundary, CwtStrategy, RawTensor, ScaleGrid, Scalogram, Spectrogram};
pub use wavelet::{EvalGrid, MotherWavelet};
