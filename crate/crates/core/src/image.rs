//! Scalogram imaging: grayscale normalization, channel stacking, cropping,
//! band splitting, bilinear resizing and PNG / raw serialization.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::transform::{RawTensor, Scalogram, TransformError};
use crate::wavelet::MotherWavelet;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("crop width {crop} exceeds image width {width}")]
    CropTooWide { crop: usize, width: usize },
    #[error("height {height} not divisible into {n_bands} bands")]
    NotDivisible { height: usize, n_bands: usize },
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: png: {reason}")]
    Png { path: PathBuf, reason: String },
    #[error(transparent)]
    Raw(#[from] TransformError),
}

pub type Result<T, E = ImageError> = std::result::Result<T, E>;

/// Where a channel came from: sensor axis and wavelet.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub axis: String,
    pub wavelet: String,
}

impl Provenance {
    pub fn new(axis: impl Into<String>, wavelet: impl Into<String>) -> Self {
        Self {
            axis: axis.into(),
            wavelet: wavelet.into(),
        }
    }
}

/// One grayscale channel, pixels in `[0, 1]`, row-major `height × width`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    height: usize,
    width: usize,
    pixels: Vec<f32>,
    provenance: Provenance,
}

impl ImagePlane {
    pub fn new(height: usize, width: usize, pixels: Vec<f32>, provenance: Provenance) -> Result<Self> {
        if height == 0 || width == 0 || pixels.len() != height * width {
            return Err(ImageError::InvalidSize(format!(
                "{} pixels for a {height}x{width} plane",
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ImageError::InvalidSize(format!("pixel {p} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            pixels,
            provenance,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.pixels[row * self.width + col]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    fn columns(&self, offset: usize, width: usize) -> ImagePlane {
        let pixels = (0..self.height)
            .flat_map(|r| {
                let start = r * self.width + offset;
                self.pixels[start..start + width].iter().copied()
            })
            .collect();
        ImagePlane {
            height: self.height,
            width,
            pixels,
            provenance: self.provenance.clone(),
        }
    }

    fn rows(&self, offset: usize, height: usize) -> ImagePlane {
        ImagePlane {
            height,
            width: self.width,
            pixels: self.pixels[offset * self.width..(offset + height) * self.width].to_vec(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Coefficient-to-gray mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `[min, max] → [0, 1]`.
    MinMax,
    /// `[−M, M] → [0, 1]` with `M = max|c|`, so zero maps to 0.5.
    AbsMax,
}

impl Normalization {
    /// AbsMax for signed (real-wavelet) coefficients, MinMax for moduli.
    pub fn default_for(w: &MotherWavelet) -> Self {
        if w.is_real() {
            Normalization::AbsMax
        } else {
            Normalization::MinMax
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "minmax" => Ok(Self::MinMax),
            "absmax" => Ok(Self::AbsMax),
            other => Err(format!("unknown normalization `{other}` (minmax|absmax)")),
        }
    }
}

/// Maps coefficients to `[0, 1]`. A constant input maps to all 0.5 in
/// either mode.
pub fn normalize(values: &[f64], mode: Normalization) -> Vec<f32> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (offset, span) = match mode {
        Normalization::MinMax => (lo, hi - lo),
        Normalization::AbsMax => {
            let m = lo.abs().max(hi.abs());
            (-m, 2.0 * m)
        }
    };
    if !(span > 0.0) || lo == hi {
        return vec![0.5; values.len()];
    }
    values
        .iter()
        .map(|&v| (((v - offset) / span) as f32).clamp(0.0, 1.0))
        .collect()
}

/// Scalogram → grayscale plane (scale rows top to bottom, time left to right).
pub fn to_grayscale(sc: &Scalogram, mode: Normalization) -> ImagePlane {
    ImagePlane {
        height: sc.n_scales(),
        width: sc.n_times(),
        pixels: normalize(sc.coefficients(), mode),
        provenance: Provenance::new("", sc.wavelet().short_name()),
    }
}

/// Multi-channel image with an optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    channels: Vec<ImagePlane>,
    label: Option<usize>,
}

impl ImageTensor {
    pub fn channels(&self) -> &[ImagePlane] {
        &self.channels
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn height(&self) -> usize {
        self.channels[0].height
    }

    pub fn width(&self) -> usize {
        self.channels[0].width
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn with_label(mut self, label: Option<usize>) -> Self {
        self.label = label;
        self
    }

    /// All pixels in (channel, row, column) order.
    pub fn to_vec(&self) -> Vec<f32> {
        self.channels.iter().flat_map(|c| c.pixels.iter().copied()).collect()
    }

    pub fn to_raw(&self) -> RawTensor {
        RawTensor::new(self.n_channels(), self.height(), self.width(), self.to_vec())
            .expect("tensor dimensions are consistent")
    }

    /// Rebuilds a tensor from a raw block. The format carries no provenance,
    /// so channels are tagged `c0`, `c1`, ... unless `provenance` is given.
    pub fn from_raw(raw: &RawTensor, provenance: Option<&[Provenance]>) -> Result<Self> {
        if let Some(p) = provenance {
            if p.len() != raw.n_channels {
                return Err(ImageError::DimensionMismatch(format!(
                    "{} provenance entries for {} channels",
                    p.len(),
                    raw.n_channels
                )));
            }
        }
        let planes = (0..raw.n_channels)
            .map(|c| {
                let prov = provenance
                    .map(|p| p[c].clone())
                    .unwrap_or_else(|| Provenance::new(format!("c{c}"), ""));
                ImagePlane::new(raw.n_scales, raw.n_times, raw.channel(c).to_vec(), prov)
            })
            .collect::<Result<Vec<_>>>()?;
        stack_channels(planes)
    }
}

/// Stacks planes of equal size as channels, in input order.
pub fn stack_channels(planes: Vec<ImagePlane>) -> Result<ImageTensor> {
    let first = planes
        .first()
        .ok_or_else(|| ImageError::DimensionMismatch("no planes to stack".into()))?;
    let (h, w) = (first.height, first.width);
    if let Some(p) = planes.iter().find(|p| (p.height, p.width) != (h, w)) {
        return Err(ImageError::DimensionMismatch(format!(
            "plane {}x{} differs from {h}x{w}",
            p.height, p.width
        )));
    }
    Ok(ImageTensor {
        channels: planes,
        label: None,
    })
}

/// Horizontal crop geometry. `stride == 0` means a single centered crop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropSpec {
    pub width: usize,
    pub stride: usize,
}

impl CropSpec {
    /// Column offsets of the crops for an image of the given width.
    pub fn offsets(&self, image_width: usize) -> Result<Vec<usize>> {
        if self.width == 0 {
            return Err(ImageError::InvalidSize("crop width must be at least 1".into()));
        }
        if self.width > image_width {
            return Err(ImageError::CropTooWide {
                crop: self.width,
                width: image_width,
            });
        }
        let slack = image_width - self.width;
        Ok(if self.stride == 0 {
            vec![slack / 2]
        } else {
            (0..=slack).step_by(self.stride).collect()
        })
    }
}

/// Fixed-width column windows of `img`; each crop inherits the label.
pub fn sliding_crops(img: &ImageTensor, spec: CropSpec) -> Result<Vec<ImageTensor>> {
    Ok(spec
        .offsets(img.width())?
        .into_iter()
        .map(|off| ImageTensor {
            channels: img.channels.iter().map(|c| c.columns(off, spec.width)).collect(),
            label: img.label,
        })
        .collect())
}

/// Cuts the image into `n_bands` horizontal scale bands, top to bottom.
pub fn split_bands(img: &ImageTensor, n_bands: usize) -> Result<Vec<ImageTensor>> {
    let h = img.height();
    if n_bands == 0 || h % n_bands != 0 {
        return Err(ImageError::NotDivisible { height: h, n_bands });
    }
    let band = h / n_bands;
    Ok((0..n_bands)
        .map(|b| ImageTensor {
            channels: img.channels.iter().map(|c| c.rows(b * band, band)).collect(),
            label: img.label,
        })
        .collect())
}

/// Source coordinate and interpolation weight for half-pixel-centered
/// bilinear sampling.
fn sample_axis(dst: usize, src_len: usize, dst_len: usize) -> (usize, usize, f64) {
    let scale = src_len as f64 / dst_len as f64;
    let pos = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_len - 1) as f64);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(src_len - 1);
    (lo, hi, pos - lo as f64)
}

/// Bilinear resize of every channel (half-pixel centers, edge clamped).
pub fn resize(img: &ImageTensor, new_h: usize, new_w: usize) -> Result<ImageTensor> {
    if new_h == 0 || new_w == 0 {
        return Err(ImageError::InvalidSize(format!("target {new_h}x{new_w}")));
    }
    let (h, w) = (img.height(), img.width());
    let rows: Vec<_> = (0..new_h).map(|r| sample_axis(r, h, new_h)).collect();
    let cols: Vec<_> = (0..new_w).map(|c| sample_axis(c, w, new_w)).collect();
    let channels = img
        .channels
        .iter()
        .map(|plane| {
            let px = |r: usize, c: usize| plane.pixels[r * w + c] as f64;
            let mut pixels = Vec::with_capacity(new_h * new_w);
            for &(r0, r1, fy) in &rows {
                for &(c0, c1, fx) in &cols {
                    let top = px(r0, c0) * (1.0 - fx) + px(r0, c1) * fx;
                    let bottom = px(r1, c0) * (1.0 - fx) + px(r1, c1) * fx;
                    pixels.push(((top * (1.0 - fy) + bottom * fy) as f32).clamp(0.0, 1.0));
                }
            }
            ImagePlane {
                height: new_h,
                width: new_w,
                pixels,
                provenance: plane.provenance.clone(),
            }
        })
        .collect();
    Ok(ImageTensor {
        channels,
        label: img.label,
    })
}

/// 8-bit quantization with round-half-up: `⌊255·v + 0.5⌋`.
pub fn quantize(v: f32) -> u8 {
    (255.0 * v as f64 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// File name for one channel: `<id>_<axis>_<wavelet>.png`.
pub fn png_file_name(id: &str, p: &Provenance) -> String {
    format!("{id}_{}_{}.png", p.axis, p.wavelet)
}

/// Writes one 8-bit grayscale PNG per channel into `dir`.
pub fn export_png(img: &ImageTensor, dir: &Path, id: &str) -> Result<Vec<PathBuf>> {
    img.channels
        .iter()
        .map(|plane| {
            let path = dir.join(png_file_name(id, &plane.provenance));
            let bytes: Vec<u8> = plane.pixels.iter().map(|&v| quantize(v)).collect();
            write_gray_png(&path, plane.width, plane.height, &bytes)?;
            Ok(path)
        })
        .collect()
}

/// Writes raw 8-bit grayscale bytes (row-major) as a PNG file.
pub fn write_gray_png(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    let io = |source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    };
    let png_err = |e: png::EncodingError| ImageError::Png {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let file = fs::File::create(path).map_err(io)?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(bytes).map_err(png_err)?;
    writer.finish().map_err(png_err)
}

/// Reads an 8-bit grayscale PNG back into a plane (`pixel / 255`).
pub fn import_png(path: &Path, provenance: Provenance) -> Result<ImagePlane> {
    let png_err = |reason: String| ImageError::Png {
        path: path.to_path_buf(),
        reason,
    };
    let file = fs::File::open(path).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let decoder = png::Decoder::new(std::io::BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| png_err(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| png_err("image too large".into()))?];
    let info = reader.next_frame(&mut buf).map_err(|e| png_err(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(png_err("expected 8-bit grayscale".into()));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let pixels = buf[..w * h].iter().map(|&b| b as f32 / 255.0).collect();
    ImagePlane::new(h, w, pixels, provenance)
}

pub fn export_raw(img: &ImageTensor, path: &Path) -> Result<()> {
    Ok(img.to_raw().save(path)?)
}

pub fn import_raw(path: &Path) -> Result<ImageTensor> {
    ImageTensor::from_raw(&RawTensor::load(path)?, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::ScaleGrid;
    use proptest::prelude::*;

    fn plane(h: usize, w: usize, f: impl Fn(usize, usize) -> f32) -> ImagePlane {
        let pixels = (0..h * w).map(|i| f(i / w, i % w)).collect();
        ImagePlane::new(h, w, pixels, Provenance::new("x", "mexh")).unwrap()
    }

    fn scalogram(values: Vec<f64>, h: usize, w: usize) -> Scalogram {
        let grid = ScaleGrid::new(2.0, 1.0, h).unwrap();
        Scalogram::new(values, w, grid, 50.0, MotherWavelet::mexican_hat()).unwrap()
    }

    #[test]
    fn grayscale_examples() {
        let sc = scalogram(vec![0.0, 1.0, 2.0, 4.0], 2, 2);
        assert_eq!(to_grayscale(&sc, Normalization::MinMax).pixels(), &[0.0, 0.25, 0.5, 1.0]);
        let sc = scalogram(vec![3.0; 4], 2, 2);
        assert_eq!(to_grayscale(&sc, Normalization::MinMax).pixels(), &[0.5; 4]);
        assert_eq!(to_grayscale(&sc, Normalization::AbsMax).pixels(), &[0.5; 4]);
        let sc = scalogram(vec![0.0; 4], 2, 2);
        assert_eq!(to_grayscale(&sc, Normalization::AbsMax).pixels(), &[0.5; 4]);
        let sc = scalogram(vec![-2.0, 0.0, 1.0, 2.0], 2, 2);
        assert_eq!(to_grayscale(&sc, Normalization::AbsMax).pixels(), &[0.0, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn default_normalization_per_family() {
        assert_eq!(Normalization::default_for(&MotherWavelet::mexican_hat()), Normalization::AbsMax);
        assert_eq!(Normalization::default_for(&MotherWavelet::paul(4).unwrap()), Normalization::MinMax);
    }

    #[test]
    fn stacking() {
        let axes = ["x", "y", "z"];
        let planes: Vec<_> = axes
            .iter()
            .map(|a| plane(64, 151, |_, _| 0.0).with_provenance(Provenance::new(*a, "mexh")))
            .collect();
        let t = stack_channels(planes).unwrap();
        assert_eq!(t.n_channels(), 3);
        assert_eq!(t.channels()[2].provenance().axis, "z");

        let mut six = Vec::new();
        for w in ["mexh", "paul4"] {
            for a in axes {
                six.push(plane(64, 151, |_, _| 0.0).with_provenance(Provenance::new(a, w)));
            }
        }
        assert_eq!(stack_channels(six).unwrap().n_channels(), 6);

        let bad = vec![plane(64, 151, |_, _| 0.0), plane(64, 150, |_, _| 0.0)];
        assert!(matches!(stack_channels(bad), Err(ImageError::DimensionMismatch(_))));
        assert!(stack_channels(vec![]).is_err());
    }

    #[test]
    fn crop_examples() {
        let img = stack_channels(vec![plane(2, 10, |r, c| (r * 10 + c) as f32 / 20.0)])
            .unwrap()
            .with_label(Some(3));
        let crops = sliding_crops(&img, CropSpec { width: 6, stride: 2 }).unwrap();
        assert_eq!(crops.len(), 3);
        assert_eq!(CropSpec { width: 6, stride: 2 }.offsets(10).unwrap(), [0, 2, 4]);
        assert!(crops.iter().all(|c| c.label() == Some(3) && c.width() == 6));
        let centered = sliding_crops(&img, CropSpec { width: 6, stride: 0 }).unwrap();
        assert_eq!(centered.len(), 1);
        assert_eq!(centered[0].channels()[0].get(0, 0), img.channels()[0].get(0, 2));
        assert!(matches!(
            sliding_crops(&img, CropSpec { width: 11, stride: 1 }),
            Err(ImageError::CropTooWide { crop: 11, width: 10 })
        ));
    }

    #[test]
    fn band_examples() {
        let img = stack_channels(vec![plane(64, 151, |r, _| r as f32 / 63.0)]).unwrap();
        let bands = split_bands(&img, 2).unwrap();
        assert_eq!(bands.len(), 2);
        assert!(bands.iter().all(|b| b.height() == 32 && b.width() == 151));
        assert_eq!(bands[1].channels()[0].get(0, 0), img.channels()[0].get(32, 0));
        assert_eq!(split_bands(&img, 1).unwrap()[0], img);
        assert!(matches!(split_bands(&img, 3), Err(ImageError::NotDivisible { .. })));
    }

    #[test]
    fn resize_examples() {
        let img = stack_channels(vec![plane(5, 7, |r, c| ((r * 7 + c) % 11) as f32 / 10.0)]).unwrap();
        assert_eq!(resize(&img, 5, 7).unwrap(), img);
        let checker = stack_channels(vec![plane(2, 2, |r, c| ((r + c) % 2) as f32)]).unwrap();
        assert_eq!(resize(&checker, 1, 1).unwrap().channels()[0].pixels(), &[0.5]);
        let flat = stack_channels(vec![plane(4, 6, |_, _| 0.3)]).unwrap();
        let back = resize(&resize(&flat, 13, 17).unwrap(), 4, 6).unwrap();
        assert!(back.channels()[0].pixels().iter().all(|&p| (p - 0.3).abs() < 1e-6));
        assert!(resize(&flat, 0, 3).is_err());
    }

    #[test]
    fn quantization_rule() {
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let half = stack_channels(vec![plane(3, 4, |_, _| 0.5)]).unwrap();
        let paths = export_png(&half, dir.path(), "w1").unwrap();
        assert_eq!(paths[0].file_name().unwrap(), "w1_x_mexh.png");
        let back = import_png(&paths[0], Provenance::default()).unwrap();
        assert!(back.pixels().iter().all(|&p| p == 128.0 / 255.0));

        let img = stack_channels(vec![
            plane(9, 13, |r, c| ((r * 13 + c) as f32 / 116.0).min(1.0)),
            plane(9, 13, |r, c| (r as f32 / 8.0) * (c as f32 / 12.0)).with_provenance(Provenance::new("y", "paul4")),
        ])
        .unwrap();
        let paths = export_png(&img, dir.path(), "s").unwrap();
        for (p, plane) in paths.iter().zip(img.channels()) {
            let back = import_png(p, plane.provenance().clone()).unwrap();
            for (a, b) in back.pixels().iter().zip(plane.pixels()) {
                assert!((a - b).abs() <= 1.0 / 255.0);
            }
        }
    }

    #[test]
    fn unwritable_directory() {
        let img = stack_channels(vec![plane(2, 2, |_, _| 0.1)]).unwrap();
        let err = export_png(&img, Path::new("/nonexistent/dir/for/test"), "a").unwrap_err();
        assert!(matches!(err, ImageError::Io { .. }));
    }

    #[test]
    fn raw_round_trip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let img = stack_channels(vec![
            plane(4, 5, |r, c| (r as f32 * 0.1 + c as f32 * 0.037).min(1.0)),
            plane(4, 5, |r, c| ((r ^ c) as f32) / 7.0),
        ])
        .unwrap();
        let path = dir.path().join("t.cwts");
        export_raw(&img, &path).unwrap();
        let back = import_raw(&path).unwrap();
        assert_eq!(back.to_vec(), img.to_vec());
        assert_eq!((back.n_channels(), back.height(), back.width()), (2, 4, 5));
    }

    proptest! {
        #[test]
        fn grayscale_is_monotone(values in prop::collection::vec(-100f64..100.0, 2..60), absmax: bool) {
            let mode = if absmax { Normalization::AbsMax } else { Normalization::MinMax };
            let px = normalize(&values, mode);
            for i in 0..values.len() {
                prop_assert!((0.0..=1.0).contains(&px[i]));
                for j in 0..values.len() {
                    if values[i] < values[j] {
                        prop_assert!(px[i] <= px[j]);
                    }
                }
            }
        }

        #[test]
        fn crops_are_exact_column_copies(w in 1usize..40, h in 1usize..5, cw in 1usize..40, stride in 0usize..9) {
            prop_assume!(cw <= w);
            let img = stack_channels(vec![plane(h, w, |r, c| ((r * 31 + c * 7) % 17) as f32 / 16.0)]).unwrap();
            let spec = CropSpec { width: cw, stride };
            let offsets = spec.offsets(w).unwrap();
            let crops = sliding_crops(&img, spec).unwrap();
            let expected = if stride == 0 { 1 } else { (w - cw) / stride + 1 };
            prop_assert_eq!(crops.len(), expected);
            for (crop, off) in crops.iter().zip(offsets) {
                for r in 0..h {
                    for c in 0..cw {
                        prop_assert_eq!(crop.channels()[0].get(r, c), img.channels()[0].get(r, off + c));
                    }
                }
            }
        }
    }
}
