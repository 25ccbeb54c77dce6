//! One-dimensional ablation sweeps over an [`ExperimentConfig`].

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use wavehar_core::signal_io::{parse_axis_set, split_train_test, Dataset, SplitSpec};
use wavehar_core::wavelet::MotherWavelet;
use wavehar_nn::EpochRecord;

use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, ExperimentConfig, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepDimension {
    /// `x`, `y`, `z`, `mag`, `xyz`, `xyzm`
    Axes,
    /// Number of conv + pool stages.
    ConvLayers,
    /// Conv filter counts, `32/128/128` or a single count for every stage.
    Neurons,
    /// Number of hidden dense layers.
    DenseLayers,
    /// Number of horizontal scale bands stacked as channels.
    CutImages,
    /// One wavelet selector.
    Wavelet,
    /// `+`-joined wavelet selectors, e.g. `mexh+paul:4`.
    WaveletCombo,
    BatchSize,
    /// `HxW` or `N` for a square image.
    ImageSize,
    /// DOG order.
    DogOrder,
    /// `+`-joined DOG orders, e.g. `1+2`.
    DogCombo,
}

impl SweepDimension {
    pub const ALL: [SweepDimension; 11] = [
        Self::Axes,
        Self::ConvLayers,
        Self::Neurons,
        Self::DenseLayers,
        Self::CutImages,
        Self::Wavelet,
        Self::WaveletCombo,
        Self::BatchSize,
        Self::ImageSize,
        Self::DogOrder,
        Self::DogCombo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Axes => "axes",
            Self::ConvLayers => "conv_layers",
            Self::Neurons => "neurons",
            Self::DenseLayers => "dense_layers",
            Self::CutImages => "cut_images",
            Self::Wavelet => "wavelet",
            Self::WaveletCombo => "wavelet_combo",
            Self::BatchSize => "batch_size",
            Self::ImageSize => "image_size",
            Self::DogOrder => "dog_order",
            Self::DogCombo => "dog_combo",
        }
    }

    /// `base` with this dimension set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: &str) -> Result<ExperimentConfig> {
        let bad = |reason: String| HarnessError::InvalidValue {
            dimension: self.name().into(),
            value: value.into(),
            reason,
        };
        let count = |v: &str| -> Result<usize> {
            v.trim()
                .parse::<usize>()
                .map_err(|_| bad("expected a non-negative integer".into()))
        };
        let mut cfg = base.clone();
        match self {
            Self::Axes => cfg.pipeline.axes = parse_axis_set(value).map_err(bad)?,
            Self::ConvLayers | Self::Neurons | Self::DenseLayers => {
                let ModelConfig::Cnn { filters, hidden, .. } = &mut cfg.model else {
                    return Err(bad("requires a preset or conv/dense model, not a layer list".into()));
                };
                match self {
                    Self::ConvLayers => {
                        let n = count(value)?;
                        let last = *filters.last().unwrap_or(&16);
                        filters.resize(n, last);
                    }
                    Self::Neurons => {
                        let parts = value.split('/').map(count).collect::<Result<Vec<_>>>()?;
                        if parts.contains(&0) {
                            return Err(bad("filter counts must be positive".into()));
                        }
                        *filters = if parts.len() == 1 {
                            vec![parts[0]; filters.len()]
                        } else {
                            parts
                        };
                    }
                    _ => {
                        let n = count(value)?;
                        let width = *hidden.first().unwrap_or(&1000);
                        *hidden = vec![width; n];
                    }
                }
            }
            Self::CutImages => {
                let n = count(value)?;
                if n == 0 {
                    return Err(bad("need at least one band".into()));
                }
                cfg.pipeline.bands = n;
            }
            Self::Wavelet => cfg.pipeline.wavelets = vec![value.trim().parse().map_err(|e| bad(format!("{e}")))?],
            Self::WaveletCombo => {
                cfg.pipeline.wavelets = value
                    .split('+')
                    .map(|w| w.trim().parse::<MotherWavelet>().map_err(|e| bad(format!("{e}"))))
                    .collect::<Result<_>>()?
            }
            Self::BatchSize => {
                let n = count(value)?;
                if n == 0 {
                    return Err(bad("batch size must be positive".into()));
                }
                cfg.train.batch_size = n;
            }
            Self::ImageSize => {
                let (h, w) = match value.split_once('x') {
                    Some((h, w)) => (count(h)?, count(w)?),
                    None => {
                        let n = count(value)?;
                        (n, n)
                    }
                };
                if h == 0 || w == 0 {
                    return Err(bad("image size must be positive".into()));
                }
                cfg.pipeline.image_size = Some((h, w));
            }
            Self::DogOrder | Self::DogCombo => {
                cfg.pipeline.wavelets = value
                    .split('+')
                    .map(|m| {
                        let m = count(m)? as u32;
                        MotherWavelet::dog(m).map_err(|e| bad(format!("{e}")))
                    })
                    .collect::<Result<_>>()?;
                if self == Self::DogOrder && cfg.pipeline.wavelets.len() != 1 {
                    return Err(bad("use dog_combo for several orders".into()));
                }
            }
        }
        Ok(cfg)
    }
}

impl fmt::Display for SweepDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepDimension {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| HarnessError::UnknownDimension(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub dimension: SweepDimension,
    pub values: Vec<String>,
    pub base: ExperimentConfig,
    pub master_seed: u64,
}

/// 64-bit FNV-1a of the master seed (little-endian) followed by the value.
pub fn point_seed(master_seed: u64, value: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in master_seed.to_le_bytes().iter().chain(value.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub history: Vec<EpochRecord>,
}

impl SweepRow {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.history.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub dimension: SweepDimension,
    pub rows: Vec<SweepRow>,
}

pub const REPORT_HEADER: &str = "sweep_value,epoch,train_loss,test_loss,accuracy,precision,recall";

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for row in &self.rows {
            for e in &row.history {
                writeln!(
                    out,
                    "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    csv_field(&row.value),
                    e.epoch,
                    e.train_loss,
                    e.test_loss,
                    e.accuracy,
                    e.precision,
                    e.recall
                )
                .unwrap();
            }
        }
        out
    }

    /// Index of the row whose final epoch has the highest accuracy (first
    /// wins ties).
    pub fn best(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in self.rows.iter().enumerate() {
            if let Some(e) = r.last() {
                if best.map_or(true, |(_, a)| e.accuracy > a) {
                    best = Some((i, e.accuracy));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "sweep: {}", self.dimension).unwrap();
        writeln!(out, "precision and recall are macro averages (unweighted mean over classes)").unwrap();
        writeln!(out).unwrap();
        writeln!(
            out,
            "  {:<16} {:>6} {:>10} {:>10} {:>10} {:>10}",
            "value", "epochs", "test_loss", "accuracy", "precision", "recall"
        )
        .unwrap();
        let best = self.best();
        for (i, r) in self.rows.iter().enumerate() {
            let mark = if Some(i) == best { '*' } else { ' ' };
            match r.last() {
                Some(e) => writeln!(
                    out,
                    "{mark} {:<16} {:>6} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                    r.value, e.epoch, e.test_loss, e.accuracy, e.precision, e.recall
                )
                .unwrap(),
                None => writeln!(out, "{mark} {:<16} {:>6}", r.value, 0).unwrap(),
            }
        }
        if let Some(i) = best {
            writeln!(out, "\nbest: {} = {}", self.dimension, self.rows[i].value).unwrap();
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Trains one model per sweep value on a fixed split of `ds` (split seeded
/// by the master seed). Points run on up to `jobs` threads; rows keep the
/// order of `spec.values`.
pub fn run_sweep(spec: &SweepSpec, ds: &Dataset, jobs: usize) -> Result<SweepReport> {
    if spec.values.is_empty() {
        return Err(HarnessError::EmptySweep);
    }
    let configs = spec
        .values
        .iter()
        .map(|v| spec.dimension.apply(&spec.base, v))
        .collect::<Result<Vec<_>>>()?;
    let (train_ds, test_ds) = split_train_test(
        ds,
        SplitSpec {
            train_fraction: spec.base.train_fraction,
            seed: spec.master_seed,
        },
    )?;
    let run = || -> Result<Vec<SweepRow>> {
        spec.values
            .par_iter()
            .zip(configs.par_iter())
            .map(|(value, cfg)| {
                log::info!("sweep {} = {value}", spec.dimension);
                run_experiment(&train_ds, &test_ds, cfg, point_seed(spec.master_seed, value))
                    .map(|o| SweepRow {
                        value: value.clone(),
                        history: o.history.epochs,
                    })
                    .map_err(|e| HarnessError::Point {
                        value: value.clone(),
                        source: Box::new(e),
                    })
            })
            .collect()
    };
    let rows = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?
        .install(run)?;
    Ok(SweepReport {
        dimension: spec.dimension,
        rows,
    })
}
