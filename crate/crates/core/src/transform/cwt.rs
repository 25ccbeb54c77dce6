use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::{Result, ScaleGrid, Scalogram, TransformError};
use crate::signal_io::Signal;
use crate::wavelet::MotherWavelet;

/// How the translation integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CwtStrategy {
    /// One dot product per (scale, translation). O(n_scales · N²).
    Direct,
    /// Circular convolution through a zero-padded FFT. O(n_scales · P log P).
    #[default]
    Fft,
}

/// Treatment of samples outside the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Signal is zero outside `[0, N)`. The FFT path pads to the next power
    /// of two `>= 2N`, so no wrap-around reaches the output.
    #[default]
    Zero,
    /// Signal is periodic with period `N`; coefficients are exactly
    /// covariant under circular shifts.
    Periodic,
}

/// CWT with zero boundary; see [`cwt_with_boundary`].
pub fn cwt(s: &Signal, w: &MotherWavelet, g: &ScaleGrid, strategy: CwtStrategy) -> Result<Scalogram> {
    cwt_with_boundary(s, w, g, strategy, Boundary::Zero)
}

/// Continuous wavelet transform of `s`:
///
/// `W(a, b) = (1/√a) Σₜ S(t) · conj(ψ((t − b)/a))`
///
/// for every scale `a` of the grid (in samples) and every integer
/// translation `b = 0..N`. The daughter wavelet is sampled at integer
/// offsets, identically for both strategies.
pub fn cwt_with_boundary(
    s: &Signal,
    w: &MotherWavelet,
    g: &ScaleGrid,
    strategy: CwtStrategy,
    boundary: Boundary,
) -> Result<Scalogram> {
    let coeffs = cwt_complex(s.samples(), w, g, strategy, boundary)?;
    let real = w.is_real();
    let values = coeffs
        .into_iter()
        .map(|c| if real { c.re } else { c.norm() })
        .collect();
    Scalogram::new(values, s.len(), g.clone(), s.sample_rate_hz(), *w)
}

/// Applies [`cwt`] to many signals in parallel. Output order matches input.
pub fn cwt_batch(
    signals: &[Signal],
    w: &MotherWavelet,
    g: &ScaleGrid,
    strategy: CwtStrategy,
) -> Result<Vec<Scalogram>> {
    signals.par_iter().map(|s| cwt(s, w, g, strategy)).collect()
}

/// Complex coefficients, row-major `n_scales × N`.
pub fn cwt_complex(
    x: &[f64],
    w: &MotherWavelet,
    g: &ScaleGrid,
    strategy: CwtStrategy,
    boundary: Boundary,
) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n < 2 {
        return Err(TransformError::SignalTooShort(n));
    }
    w.try_evaluate(0.0)?;
    let limit = match boundary {
        Boundary::Zero => padded_len(n),
        Boundary::Periodic => n,
    };
    if let Some(&scale) = g.scales().iter().find(|&&a| a > limit as f64) {
        return Err(TransformError::ScaleTooLarge { scale, limit });
    }
    Ok(match strategy {
        CwtStrategy::Direct => direct(x, w, g, boundary),
        CwtStrategy::Fft => via_fft(x, w, g, boundary),
    })
}

/// FFT length for the zero-boundary path.
pub(crate) fn padded_len(n: usize) -> usize {
    (2 * n).next_power_of_two()
}

/// `conj(ψ(k/a))/√a`: the correlation kernel at integer offset `k`.
fn kernel(w: &MotherWavelet, a: f64, k: i64) -> Complex64 {
    w.evaluate(k as f64 / a).conj() / a.sqrt()
}

/// Offset represented by residue `m` modulo `n`, centered on zero.
fn centered(m: usize, n: usize) -> i64 {
    if 2 * m <= n {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

fn direct(x: &[f64], w: &MotherWavelet, g: &ScaleGrid, boundary: Boundary) -> Vec<Complex64> {
    let n = x.len();
    let mut out = Vec::with_capacity(g.len() * n);
    for &a in g.scales() {
        match boundary {
            Boundary::Zero => {
                // taps[k + n - 1] holds offset k ∈ [-(n-1), n-1]
                let taps: Vec<Complex64> = (-(n as i64 - 1)..n as i64).map(|k| kernel(w, a, k)).collect();
                for b in 0..n {
                    let acc: Complex64 = x
                        .iter()
                        .enumerate()
                        .map(|(t, &v)| taps[t + n - 1 - b] * v)
                        .sum();
                    out.push(acc);
                }
            }
            Boundary::Periodic => {
                let taps: Vec<Complex64> = (0..n).map(|m| kernel(w, a, centered(m, n))).collect();
                for b in 0..n {
                    let acc: Complex64 = x
                        .iter()
                        .enumerate()
                        .map(|(t, &v)| taps[(t + n - b) % n] * v)
                        .sum();
                    out.push(acc);
                }
            }
        }
    }
    out
}

fn via_fft(x: &[f64], w: &MotherWavelet, g: &ScaleGrid, boundary: Boundary) -> Vec<Complex64> {
    let n = x.len();
    let len = match boundary {
        Boundary::Zero => padded_len(n),
        Boundary::Periodic => n,
    };
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);

    let mut spectrum: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectrum.resize(len, Complex64::new(0.0, 0.0));
    forward.process(&mut spectrum);

    let scale = 1.0 / len as f64;
    let mut out = Vec::with_capacity(g.len() * n);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for &a in g.scales() {
        // W = x ⊛ u with u(m) = kernel(-m), laid out circularly.
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        match boundary {
            Boundary::Zero => {
                for m in -(n as i64 - 1)..n as i64 {
                    buf[m.rem_euclid(len as i64) as usize] = kernel(w, a, -m);
                }
            }
            Boundary::Periodic => {
                for (m, slot) in buf.iter_mut().enumerate() {
                    *slot = kernel(w, a, centered((len - m) % len, len));
                }
            }
        }
        forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&spectrum) {
            *b *= s;
        }
        inverse.process(&mut buf);
        out.extend(buf[..n].iter().map(|c| c * scale));
    }
    out
}
