use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{Result, TransformError};
use crate::signal_io::Signal;

/// Analysis window for [`stft`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// Periodic Hann, `0.5 − 0.5·cos(2πn/L)`.
    #[default]
    Hann,
    Rect,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// STFT magnitudes, `n_freqs × n_hops`, row-major by frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    magnitudes: Vec<f64>,
    n_freqs: usize,
    n_hops: usize,
    window_len: usize,
    hop: usize,
    sample_rate_hz: f64,
}

impl Spectrogram {
    pub fn n_freqs(&self) -> usize {
        self.n_freqs
    }

    pub fn n_hops(&self) -> usize {
        self.n_hops
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn get(&self, freq: usize, hop: usize) -> f64 {
        self.magnitudes[freq * self.n_hops + hop]
    }

    pub fn column(&self, hop: usize) -> Vec<f64> {
        (0..self.n_freqs).map(|k| self.get(k, hop)).collect()
    }

    /// Frequency (Hz) of bin `k`.
    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate_hz / self.window_len as f64
    }

    /// Time (s) of the center of hop `h`.
    pub fn hop_center_s(&self, h: usize) -> f64 {
        (h * self.hop) as f64 / self.sample_rate_hz + self.window_len as f64 / (2.0 * self.sample_rate_hz)
    }
}

fn fft_in_place(buf: &mut [Complex64]) {
    FftPlanner::<f64>::new().plan_fft_forward(buf.len()).process(buf);
}

/// Short-time Fourier transform magnitudes with frames starting at
/// `0, hop, 2·hop, …` while they fit inside the signal.
pub fn stft(s: &Signal, window_len: usize, hop: usize, window: Window) -> Result<Spectrogram> {
    let x = s.samples();
    if hop == 0 || hop > window_len || window_len > x.len() {
        return Err(TransformError::InvalidWindow(format!(
            "need 0 < hop ({hop}) <= window_len ({window_len}) <= signal length ({})",
            x.len()
        )));
    }
    let n_freqs = window_len / 2 + 1;
    let n_hops = (x.len() - window_len) / hop + 1;
    let taper = window.coefficients(window_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window_len);
    let mut magnitudes = vec![0.0; n_freqs * n_hops];
    let mut buf = vec![Complex64::new(0.0, 0.0); window_len];
    for h in 0..n_hops {
        let frame = &x[h * hop..h * hop + window_len];
        for ((b, &v), &w) in buf.iter_mut().zip(frame).zip(&taper) {
            *b = Complex64::new(v * w, 0.0);
        }
        fft.process(&mut buf);
        for k in 0..n_freqs {
            magnitudes[k * n_hops + h] = buf[k].norm();
        }
    }
    Ok(Spectrogram {
        magnitudes,
        n_freqs,
        n_hops,
        window_len,
        hop,
        sample_rate_hz: s.sample_rate_hz(),
    })
}

/// `|DFT(s)|` for bins `0..=N/2`.
pub fn dft_magnitude(s: &Signal) -> Vec<f64> {
    let mut buf: Vec<Complex64> = s.samples().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf);
    buf.truncate(s.len() / 2 + 1);
    buf.into_iter().map(|c| c.norm()).collect()
}

/// Coefficients of `a0/2 + Σ aₙcos(nt) + bₙsin(nt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    pub a0: f64,
    /// `a[n-1]` is aₙ.
    pub a: Vec<f64>,
    /// `b[n-1]` is bₙ.
    pub b: Vec<f64>,
}

/// Trapezoidal Fourier-series coefficients of samples taken on a uniform
/// grid spanning `[−π, π]` inclusive.
pub fn fourier_series_coeffs(s: &Signal, n_max: usize) -> FourierSeries {
    let x = s.samples();
    let n = x.len();
    let ts: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        (0..n).map(|i| -PI + 2.0 * PI * i as f64 / (n - 1) as f64).collect()
    };
    let h = if n == 1 { 2.0 * PI } else { 2.0 * PI / (n - 1) as f64 };
    let integrate = |f: &dyn Fn(f64) -> f64| -> f64 {
        let sum: f64 = x
            .iter()
            .zip(&ts)
            .enumerate()
            .map(|(i, (&v, &t))| {
                let w = if n > 1 && (i == 0 || i == n - 1) { 0.5 } else { 1.0 };
                w * v * f(t)
            })
            .sum();
        sum * h / PI
    };
    FourierSeries {
        a0: integrate(&|_| 1.0),
        a: (1..=n_max).map(|k| integrate(&|t| (k as f64 * t).cos())).collect(),
        b: (1..=n_max).map(|k| integrate(&|t| (k as f64 * t).sin())).collect(),
    }
}

fn trapezoid_dot(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    u.iter()
        .zip(v)
        .enumerate()
        .map(|(i, (a, b))| {
            let w = if n > 1 && (i == 0 || i == n - 1) { 0.5 } else { 1.0 };
            w * a * b
        })
        .sum()
}

/// Projection coefficients `Cₙ = ⟨S, φₙ⟩ / ⟨φₙ, φₙ⟩` onto a pairwise
/// orthogonal basis, with trapezoidal inner products on the sample grid.
///
/// Orthogonality is checked as `|⟨φₖ, φₙ⟩| <= 1e-6·‖φₖ‖·‖φₙ‖`.
pub fn generalized_fourier_coeffs(s: &Signal, basis: &[Signal]) -> Result<Vec<f64>> {
    let n = s.len();
    for phi in basis {
        if phi.len() != n {
            return Err(TransformError::LengthMismatch {
                expected: n,
                found: phi.len(),
            });
        }
    }
    let norms: Vec<f64> = basis.iter().map(|p| trapezoid_dot(p.samples(), p.samples())).collect();
    if let Some(i) = norms.iter().position(|&v| v == 0.0) {
        return Err(TransformError::ZeroBasisFunction(i));
    }
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            let dot = trapezoid_dot(basis[i].samples(), basis[j].samples());
            if dot.abs() > 1e-6 * (norms[i] * norms[j]).sqrt() {
                return Err(TransformError::BasisNotOrthogonal(i, j));
            }
        }
    }
    Ok(basis
        .iter()
        .zip(&norms)
        .map(|(phi, nsq)| trapezoid_dot(s.samples(), phi.samples()) / nsq)
        .collect())
}

/// `Σ Cₙ φₙ`.
pub fn reconstruct(coeffs: &[f64], basis: &[Signal]) -> Vec<f64> {
    let n = basis.first().map_or(0, Signal::len);
    let mut out = vec![0.0; n];
    for (c, phi) in coeffs.iter().zip(basis) {
        for (o, v) in out.iter_mut().zip(phi.samples()) {
            *o += c * v;
        }
    }
    out
}
