//! Three test signals whose magnitude spectra are nearly alike while their
//! scalograms are not.
//!
//! * A: `sin 2x` on the first half of `[0, 4π)`, `sin 10x` on the second
//! * B: the same two pieces in the opposite order
//! * C: `sin 2x + sin 10x` throughout

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use wavehar_core::image::{normalize, quantize, to_grayscale, write_gray_png, Normalization};
use wavehar_core::signal_io::Signal;
use wavehar_core::transform::{cosine_similarity, cwt, dft_magnitude, l2_distance, CwtStrategy, ScaleGrid, Scalogram};
use wavehar_core::wavelet::MotherWavelet;

use crate::error::Result;

pub const DEMO_LEN: usize = 512;
const PLOT_HEIGHT: usize = 128;

/// `(name, signal)` for A, B and C, sampled at `len/(4π)` samples per unit.
pub fn demo_signals(len: usize) -> Result<Vec<(&'static str, Signal)>> {
    let dx = 4.0 * PI / len as f64;
    let rate = 1.0 / dx;
    let half = len / 2;
    let gen = |f: &dyn Fn(usize, f64) -> f64| Signal::new((0..len).map(|i| f(i, i as f64 * dx)).collect(), rate);
    Ok(vec![
        ("a", gen(&|i, x| if i < half { (2.0 * x).sin() } else { (10.0 * x).sin() })?),
        ("b", gen(&|i, x| if i < half { (10.0 * x).sin() } else { (2.0 * x).sin() })?),
        ("c", gen(&|_, x| (2.0 * x).sin() + (10.0 * x).sin())?),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairStats {
    pub first: &'static str,
    pub second: &'static str,
    /// Cosine similarity of the one-sided DFT magnitudes.
    pub spectral_cosine: f64,
    /// L² distance between the scalograms.
    pub scalogram_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub wavelet: MotherWavelet,
    pub pairs: Vec<PairStats>,
    /// Largest distance between a signal's scalogram and the time-reversed
    /// scalogram of its time-reversed copy.
    pub self_distance: f64,
    /// Largest distance between two independent computations of the same
    /// scalogram.
    pub recompute_distance: f64,
    /// Norm of the scalogram of A.
    pub norm_a: f64,
}

impl DemoReport {
    pub fn pair(&self, first: &str, second: &str) -> &PairStats {
        self.pairs
            .iter()
            .find(|p| p.first == first && p.second == second)
            .expect("known pair")
    }

    /// Scalogram distance of A and B over the self distance floor. The floor
    /// is clamped to machine precision relative to `norm_a`.
    pub fn separation_ratio(&self) -> f64 {
        let floor = self.self_distance.max(self.norm_a * f64::EPSILON);
        self.pair("a", "b").scalogram_distance / floor
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "scalogram wavelet: {}", self.wavelet).unwrap();
        writeln!(out, "{:<6} {:>16} {:>20}", "pair", "spectral_cosine", "scalogram_distance").unwrap();
        for p in &self.pairs {
            writeln!(
                out,
                "{:<6} {:>16.6} {:>20.6}",
                format!("{}-{}", p.first, p.second),
                p.spectral_cosine,
                p.scalogram_distance
            )
            .unwrap();
        }
        writeln!(out, "self distance (time reversal): {:.3e}", self.self_distance).unwrap();
        writeln!(out, "self distance (recomputation): {:.3e}", self.recompute_distance).unwrap();
        writeln!(
            out,
            "relative a-b scalogram distance: {:.6}",
            self.pair("a", "b").scalogram_distance / self.norm_a
        )
        .unwrap();
        writeln!(out, "a-b distance / self distance floor: {:.3e}", self.separation_ratio()).unwrap();
        out
    }
}

fn reversed(s: &Signal) -> Result<Signal> {
    Ok(Signal::new(s.samples().iter().rev().copied().collect(), s.sample_rate_hz())?)
}

fn reverse_rows(sc: &Scalogram) -> Vec<f64> {
    sc.rows().flat_map(|r| r.iter().rev().copied()).collect()
}

/// Spectra, scalograms and their pairwise comparisons.
pub fn run_demo(wavelet: &MotherWavelet, len: usize) -> Result<(DemoReport, Vec<(&'static str, Signal, Scalogram)>)> {
    let grid = ScaleGrid::default_for_len(len)?;
    let signals = demo_signals(len)?;
    let mut computed = Vec::new();
    let mut self_distance = 0.0f64;
    let mut recompute_distance = 0.0f64;
    for (name, s) in signals {
        let sc = cwt(&s, wavelet, &grid, CwtStrategy::Fft)?;
        let again = cwt(&s, wavelet, &grid, CwtStrategy::Fft)?;
        recompute_distance = recompute_distance.max(l2_distance(sc.coefficients(), again.coefficients()));
        let rev = cwt(&reversed(&s)?, wavelet, &grid, CwtStrategy::Fft)?;
        self_distance = self_distance.max(l2_distance(sc.coefficients(), &reverse_rows(&rev)));
        computed.push((name, s, sc));
    }
    let spectra: Vec<Vec<f64>> = computed.iter().map(|(_, s, _)| dft_magnitude(s)).collect();
    let mut pairs = Vec::new();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        pairs.push(PairStats {
            first: computed[i].0,
            second: computed[j].0,
            spectral_cosine: cosine_similarity(&spectra[i], &spectra[j]),
            scalogram_distance: l2_distance(computed[i].2.coefficients(), computed[j].2.coefficients()),
        });
    }
    let norm_a = computed[0].2.coefficients().iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((
        DemoReport {
            wavelet: *wavelet,
            pairs,
            self_distance,
            recompute_distance,
            norm_a,
        },
        computed,
    ))
}

fn plot_waveform(values: &[f64]) -> Vec<u8> {
    let w = values.len();
    let mut px = vec![255u8; w * PLOT_HEIGHT];
    let rows: Vec<usize> = normalize(values, Normalization::MinMax)
        .into_iter()
        .map(|v| ((1.0 - v) * (PLOT_HEIGHT - 1) as f32).round() as usize)
        .collect();
    for x in 0..w {
        let next = rows[(x + 1).min(w - 1)];
        let (lo, hi) = (rows[x].min(next), rows[x].max(next));
        for r in lo..=hi {
            px[r * w + x] = 0;
        }
    }
    px
}

fn plot_bars(values: &[f64]) -> Vec<u8> {
    let w = values.len();
    let max = values.iter().copied().fold(0.0, f64::max);
    let mut px = vec![255u8; w * PLOT_HEIGHT];
    for (x, &v) in values.iter().enumerate() {
        let h = if max > 0.0 {
            ((v / max) * (PLOT_HEIGHT - 1) as f64).round() as usize
        } else {
            0
        };
        for r in PLOT_HEIGHT - 1 - h..PLOT_HEIGHT {
            px[r * w + x] = 0;
        }
    }
    px
}

/// Runs the demo and writes `<name>_{waveform,spectrum,scalogram}.png` for
/// each signal into `dir`.
pub fn write_demo(dir: &Path, wavelet: &MotherWavelet) -> Result<(DemoReport, Vec<PathBuf>)> {
    std::fs::create_dir_all(dir)?;
    let (report, computed) = run_demo(wavelet, DEMO_LEN)?;
    let mut files = Vec::new();
    for (name, s, sc) in &computed {
        let wave = dir.join(format!("{name}_waveform.png"));
        write_gray_png(&wave, s.len(), PLOT_HEIGHT, &plot_waveform(s.samples()))?;
        let spec = dft_magnitude(s);
        let spectrum = dir.join(format!("{name}_spectrum.png"));
        write_gray_png(&spectrum, spec.len(), PLOT_HEIGHT, &plot_bars(&spec))?;
        let plane = to_grayscale(sc, Normalization::default_for(wavelet));
        let bytes: Vec<u8> = plane.pixels().iter().map(|&v| quantize(v)).collect();
        let scal = dir.join(format!("{name}_scalogram.png"));
        write_gray_png(&scal, plane.width(), plane.height(), &bytes)?;
        files.extend([wave, spectrum, scal]);
    }
    Ok((report, files))
}
