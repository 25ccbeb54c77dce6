//! Time-frequency transforms: continuous wavelet transform (direct and
//! FFT-accelerated), STFT, DFT magnitude, Fourier series and projections onto
//! generalized orthogonal bases.

mod cwt;
mod fourier;
mod raw;

pub use cwt::{cwt, cwt_batch, cwt_complex, cwt_with_boundary, Boundary, CwtStrategy};
pub use fourier::{
    dft_magnitude, fourier_series_coeffs, generalized_fourier_coeffs, reconstruct, stft,
    FourierSeries, Spectrogram, Window,
};
pub use raw::{RawTensor, RAW_MAGIC, RAW_VERSION};

use thiserror::Error;

use crate::wavelet::{MotherWavelet, WaveletError};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("invalid scale grid: {0}")]
    InvalidScale(String),
    #[error("signal of length {0} is too short (need at least 2 samples)")]
    SignalTooShort(usize),
    #[error("scale {scale} exceeds transform length {limit}")]
    ScaleTooLarge { scale: f64, limit: usize },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("basis functions {0} and {1} are not orthogonal")]
    BasisNotOrthogonal(usize, usize),
    #[error("basis function {0} is identically zero")]
    ZeroBasisFunction(usize),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error("raw tensor: {0}")]
    RawFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = TransformError> = std::result::Result<T, E>;

/// Geometric scale progression `a_j = a0 · 2^(j·dj)`, in samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    a0: f64,
    dj: f64,
    scales: Vec<f64>,
}

pub const DEFAULT_A0: f64 = 2.0;
pub const DEFAULT_DJ: f64 = 0.25;
pub const DEFAULT_N_SCALES: usize = 64;

impl ScaleGrid {
    pub fn new(a0: f64, dj: f64, n_scales: usize) -> Result<Self> {
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(TransformError::InvalidScale(format!("a0 must be positive, got {a0}")));
        }
        if !(dj.is_finite() && dj > 0.0) {
            return Err(TransformError::InvalidScale(format!("dj must be positive, got {dj}")));
        }
        if n_scales == 0 {
            return Err(TransformError::InvalidScale("n_scales must be at least 1".into()));
        }
        let scales = (0..n_scales)
            .map(|j| a0 * 2f64.powf(j as f64 * dj))
            .collect();
        Ok(Self { a0, dj, scales })
    }

    /// `n_scales` scales from `a0` up to exactly `a_max`.
    pub fn spanning(a0: f64, a_max: f64, n_scales: usize) -> Result<Self> {
        if n_scales < 2 {
            return Self::new(a0, DEFAULT_DJ, n_scales);
        }
        if !(a_max > a0) {
            return Err(TransformError::InvalidScale(format!(
                "largest scale {a_max} must exceed a0 = {a0}"
            )));
        }
        Self::new(a0, (a_max / a0).log2() / (n_scales - 1) as f64, n_scales)
    }

    /// Default grid for a window of `n` samples: 64 scales from 2 samples up
    /// to `n/2`.
    pub fn default_for_len(n: usize) -> Result<Self> {
        let a_max = (n as f64 / 2.0).max(2.0 * DEFAULT_A0);
        Self::spanning(DEFAULT_A0, a_max, DEFAULT_N_SCALES)
    }

    /// Largest `n_scales` such that `a0·2^((n-1)·dj) <= a_max`.
    pub fn count_up_to(a0: f64, dj: f64, a_max: f64) -> usize {
        if a_max < a0 {
            return 0;
        }
        ((a_max / a0).log2() / dj + 1e-9).floor() as usize + 1
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn dj(&self) -> f64 {
        self.dj
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Equivalent Fourier frequency (Hz) of each scale for the given wavelet.
    pub fn frequencies_hz(&self, wavelet: &MotherWavelet, sample_rate_hz: f64) -> Vec<f64> {
        self.scales
            .iter()
            .map(|&a| sample_rate_hz / wavelet.fourier_period(a))
            .collect()
    }
}

/// `n_scales × n_times` matrix of CWT coefficients, row-major by scale.
///
/// Holds the signed real coefficient for real wavelets and the modulus for
/// complex ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    coefficients: Vec<f64>,
    n_times: usize,
    grid: ScaleGrid,
    sample_rate_hz: f64,
    wavelet: MotherWavelet,
}

impl Scalogram {
    pub fn new(
        coefficients: Vec<f64>,
        n_times: usize,
        grid: ScaleGrid,
        sample_rate_hz: f64,
        wavelet: MotherWavelet,
    ) -> Result<Self> {
        if coefficients.len() != grid.len() * n_times {
            return Err(TransformError::LengthMismatch {
                expected: grid.len() * n_times,
                found: coefficients.len(),
            });
        }
        Ok(Self {
            coefficients,
            n_times,
            grid,
            sample_rate_hz,
            wavelet,
        })
    }

    pub fn n_scales(&self) -> usize {
        self.grid.len()
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.coefficients[j * self.n_times..(j + 1) * self.n_times]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coefficients.chunks_exact(self.n_times)
    }

    pub fn get(&self, scale: usize, time: usize) -> f64 {
        self.coefficients[scale * self.n_times + time]
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn wavelet(&self) -> &MotherWavelet {
        &self.wavelet
    }

    /// Mean of squared coefficients in each scale row.
    pub fn row_energy(&self) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64)
            .collect()
    }
}

/// Cosine of the angle between two equal-length vectors (0 if either is zero).
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Euclidean distance between two equal-length vectors.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
