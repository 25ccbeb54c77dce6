//! Signals to network inputs: CWT per (axis, wavelet), grayscale mapping,
//! channel stacking, optional resize, band cutting and cropping.

use rayon::prelude::*;
use wavehar_core::image::{self, CropSpec, ImageTensor, Normalization, Provenance};
use wavehar_core::signal_io::{magnitude, Axis, Dataset, MultiAxisSample, Signal, SignalError};
use wavehar_core::transform::{cwt, CwtStrategy, ScaleGrid, DEFAULT_A0, DEFAULT_N_SCALES};
use wavehar_core::wavelet::MotherWavelet;
use wavehar_nn::{Sample, Shape, Tensor};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub axes: Vec<Axis>,
    /// One channel per (axis, wavelet), axis-major.
    pub wavelets: Vec<MotherWavelet>,
    pub n_scales: usize,
    /// Smallest scale in samples; the largest is half the window.
    pub a0: f64,
    pub strategy: CwtStrategy,
    /// `None` picks the wavelet's default mapping.
    pub normalization: Option<Normalization>,
    /// Bilinear resize target `(height, width)`.
    pub image_size: Option<(usize, usize)>,
    /// Horizontal scale bands stacked as extra channels (1 = off).
    pub bands: usize,
    pub crop: Option<CropSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            axes: vec![Axis::X, Axis::Y, Axis::Z],
            wavelets: vec![MotherWavelet::mexican_hat()],
            n_scales: DEFAULT_N_SCALES,
            a0: DEFAULT_A0,
            strategy: CwtStrategy::Fft,
            normalization: None,
            image_size: None,
            bands: 1,
            crop: None,
        }
    }
}

impl PipelineConfig {
    pub fn grid(&self, window_len: usize) -> Result<ScaleGrid> {
        let a_max = (window_len as f64 / 2.0).max(2.0 * self.a0);
        Ok(ScaleGrid::spanning(self.a0, a_max, self.n_scales)?)
    }

    pub fn n_channels(&self) -> usize {
        self.axes.len() * self.wavelets.len() * self.bands
    }

    /// `x:mexh;y:mexh;...` channel description.
    pub fn channel_tags(&self) -> String {
        self.provenance().iter().map(|p| format!("{}:{}", p.axis, p.wavelet)).collect::<Vec<_>>().join(";")
    }

    fn provenance(&self) -> Vec<Provenance> {
        let mut out = Vec::new();
        for a in &self.axes {
            for w in &self.wavelets {
                out.push(Provenance::new(a.tag(), w.short_name()));
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(HarnessError::Config("no axes selected".into()));
        }
        if self.wavelets.is_empty() {
            return Err(HarnessError::Config("no wavelets selected".into()));
        }
        if self.bands == 0 {
            return Err(HarnessError::Config("bands must be at least 1".into()));
        }
        Ok(())
    }
}

fn axis_signal(sample: &MultiAxisSample, axis: Axis) -> Result<Signal> {
    match sample.axis(axis) {
        Some(s) => Ok(s.clone()),
        None if axis == Axis::Magnitude => Ok(magnitude(sample)?),
        None => Err(SignalError::MissingAxis {
            id: sample.id().to_string(),
            axis,
        }
        .into()),
    }
}

/// Full-size grayscale scalogram stack of one sample (before resize, bands
/// or crop), labelled with the sample's class.
pub fn scalogram_image(sample: &MultiAxisSample, cfg: &PipelineConfig) -> Result<ImageTensor> {
    cfg.validate()?;
    let grid = cfg.grid(sample.window_len())?;
    let mut planes = Vec::with_capacity(cfg.axes.len() * cfg.wavelets.len());
    for &axis in &cfg.axes {
        let signal = axis_signal(sample, axis)?;
        for w in &cfg.wavelets {
            let sc = cwt(&signal, w, &grid, cfg.strategy)?;
            let mode = cfg.normalization.unwrap_or_else(|| Normalization::default_for(w));
            let plane = image::to_grayscale(&sc, mode);
            let prov = Provenance::new(axis.tag(), plane.provenance().wavelet.clone());
            planes.push(plane.with_provenance(prov));
        }
    }
    Ok(image::stack_channels(planes)?.with_label(Some(sample.label())))
}

/// Applies resize and band cutting.
pub fn shape_image(img: &ImageTensor, cfg: &PipelineConfig) -> Result<ImageTensor> {
    let img = match cfg.image_size {
        Some((h, w)) => image::resize(img, h, w)?,
        None => img.clone(),
    };
    if cfg.bands <= 1 {
        return Ok(img);
    }
    let label = img.label();
    let planes = image::split_bands(&img, cfg.bands)?
        .into_iter()
        .enumerate()
        .flat_map(|(b, band)| {
            band.channels()
                .iter()
                .map(|p| {
                    let prov = p.provenance();
                    p.clone().with_provenance(Provenance::new(format!("{}#{b}", prov.axis), prov.wavelet.clone()))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(image::stack_channels(planes)?.with_label(label))
}

/// Crops for one image: the configured crop (centered unless `augment` gives
/// a stride), or the whole image when no crop is configured.
pub fn crops(img: &ImageTensor, cfg: &PipelineConfig, augment: Option<usize>) -> Result<Vec<ImageTensor>> {
    match cfg.crop {
        None => Ok(vec![img.clone()]),
        Some(spec) => {
            let spec = CropSpec {
                width: spec.width.min(img.width()),
                stride: augment.unwrap_or(spec.stride),
            };
            Ok(image::sliding_crops(img, spec)?)
        }
    }
}

pub fn to_sample(img: &ImageTensor) -> Result<Sample> {
    let shape = Shape::new(img.n_channels(), img.height(), img.width());
    let label = img
        .label()
        .ok_or_else(|| HarnessError::Config("image has no label".into()))?;
    Ok(Sample {
        input: Tensor::new(shape, img.to_vec())?,
        label,
    })
}

/// Every sample of `ds` through the pipeline, in dataset order. With
/// `augment = Some(stride)` each image yields all sliding crops.
pub fn dataset_samples(ds: &Dataset, cfg: &PipelineConfig, augment: Option<usize>) -> Result<Vec<Sample>> {
    let per_sample: Vec<Vec<Sample>> = ds
        .samples()
        .par_iter()
        .map(|s| {
            let img = shape_image(&scalogram_image(s, cfg)?, cfg)?;
            crops(&img, cfg, augment)?.iter().map(to_sample).collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_sample.into_iter().flatten().collect())
}

/// Input shape the pipeline produces for windows of `window_len` samples.
pub fn input_shape(cfg: &PipelineConfig, window_len: usize) -> Result<Shape> {
    cfg.validate()?;
    let (mut h, mut w) = cfg.image_size.unwrap_or((cfg.n_scales, window_len));
    if cfg.bands > 1 {
        if h % cfg.bands != 0 {
            return Err(HarnessError::Config(format!(
                "image height {h} is not divisible into {} bands",
                cfg.bands
            )));
        }
        h /= cfg.bands;
    }
    if let Some(c) = cfg.crop {
        w = c.width.min(w);
    }
    Ok(Shape::new(cfg.n_channels(), h, w))
}
