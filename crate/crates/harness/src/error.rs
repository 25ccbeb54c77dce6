use thiserror::Error;
use wavehar_core::image::ImageError;
use wavehar_core::signal_io::SignalError;
use wavehar_core::transform::TransformError;
use wavehar_core::wavelet::WaveletError;
use wavehar_nn::NnError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("sweep has no values")]
    EmptySweep,
    #[error("unknown sweep dimension `{0}`")]
    UnknownDimension(String),
    #[error("invalid {dimension} value `{value}`: {reason}")]
    InvalidValue {
        dimension: String,
        value: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sweep point `{value}`: {source}")]
    Point {
        value: String,
        #[source]
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// True for failures caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            HarnessError::Nn(NnError::Diverged { .. }) => true,
            HarnessError::Point { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
