//! Mother wavelets and numerical checks of their admissibility.
//!
//! All families are L²-normalized to unit norm and follow the usual
//! Torrence–Compo closed forms:
//!
//! * `DOG(m)`: `ψ(t) = (-1)^(m+1) / sqrt(Γ(m + 1/2)) · dᵐ/dtᵐ exp(-t²/2)`,
//!   which equals `-Heₘ(t)·exp(-t²/2) / sqrt(Γ(m + 1/2))` with `Heₘ` the
//!   probabilists' Hermite polynomial. `DOG(2)` is the Mexican hat.
//! * `Morlet(ω₀)`: `ψ(t) = π^(-1/4) · exp(iω₀t) · exp(-t²/2)` (no admissibility
//!   correction term, so its mean is small but not zero).
//! * `Paul(m)`: `ψ(t) = 2ᵐ iᵐ m! / sqrt(π (2m)!) · (1 - it)^-(m+1)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveletError {
    #[error("invalid wavelet parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid evaluation grid: {0}")]
    InvalidGrid(String),
    #[error("grid [{t_min}, {t_max}] too narrow: |psi| at the edge is {edge:e} (limit {limit:e})")]
    GridTooNarrow {
        t_min: f64,
        t_max: f64,
        edge: f64,
        limit: f64,
    },
    #[error("cannot parse wavelet selector `{0}` (expected dog:<m>, mexh, morlet[:<w0>] or paul[:<m>])")]
    Selector(String),
}

pub const DEFAULT_MORLET_OMEGA0: f64 = 6.0;
pub const DEFAULT_PAUL_ORDER: u32 = 4;

/// A mother wavelet family with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotherWavelet {
    Dog { order: u32 },
    Morlet { omega0: f64 },
    Paul { order: u32 },
}

impl MotherWavelet {
    pub fn dog(order: u32) -> Result<Self, WaveletError> {
        if order == 0 {
            return Err(WaveletError::InvalidParameter("DOG order must be >= 1".into()));
        }
        Ok(Self::Dog { order })
    }

    pub fn mexican_hat() -> Self {
        Self::Dog { order: 2 }
    }

    pub fn morlet(omega0: f64) -> Result<Self, WaveletError> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(WaveletError::InvalidParameter(format!(
                "Morlet omega0 must be positive, got {omega0}"
            )));
        }
        Ok(Self::Morlet { omega0 })
    }

    pub fn paul(order: u32) -> Result<Self, WaveletError> {
        if order == 0 {
            return Err(WaveletError::InvalidParameter("Paul order must be >= 1".into()));
        }
        Ok(Self::Paul { order })
    }

    fn validate(&self) -> Result<(), WaveletError> {
        match *self {
            Self::Dog { order } => Self::dog(order).map(drop),
            Self::Morlet { omega0 } => Self::morlet(omega0).map(drop),
            Self::Paul { order } => Self::paul(order).map(drop),
        }
    }

    /// Real-valued families store signed coefficients in a scalogram.
    pub fn is_real(&self) -> bool {
        matches!(self, Self::Dog { .. })
    }

    /// ψ(t). Panics only for a parameter that the constructors reject; use
    /// [`MotherWavelet::try_evaluate`] for unchecked values.
    pub fn evaluate(&self, t: f64) -> Complex64 {
        self.try_evaluate(t).expect("invalid wavelet parameter")
    }

    pub fn try_evaluate(&self, t: f64) -> Result<Complex64, WaveletError> {
        self.validate()?;
        Ok(match *self {
            Self::Dog { order } => Complex64::new(dog_value(order, t), 0.0),
            Self::Morlet { omega0 } => {
                let env = PI.powf(-0.25) * (-0.5 * t * t).exp();
                Complex64::from_polar(env, omega0 * t)
            }
            Self::Paul { order } => {
                let m = order as i32;
                let norm = paul_norm(order);
                let phase = Complex64::i().powi(m);
                phase * norm * Complex64::new(1.0, -t).powi(-(m + 1))
            }
        })
    }

    /// Equivalent Fourier period (in the same unit as the scale) of the
    /// wavelet at scale `a`.
    pub fn fourier_period(&self, scale: f64) -> f64 {
        match *self {
            Self::Dog { order } => 2.0 * PI * scale / (order as f64 + 0.5).sqrt(),
            Self::Morlet { omega0 } => 4.0 * PI * scale / (omega0 + (2.0 + omega0 * omega0).sqrt()),
            Self::Paul { order } => 4.0 * PI * scale / (2.0 * order as f64 + 1.0),
        }
    }

    /// Half-width of the standard evaluation grid.
    pub fn support_radius(&self) -> f64 {
        match self {
            Self::Paul { .. } => 20.0,
            _ => 8.0,
        }
    }

    /// The standard grid used for admissibility checks.
    pub fn standard_grid(&self) -> EvalGrid {
        match self {
            Self::Paul { .. } => EvalGrid::new(-20.0, 20.0, 8192),
            _ => EvalGrid::new(-8.0, 8.0, 4096),
        }
        .expect("standard grid is valid")
    }

    /// Largest |ψ| tolerated at the edge of an evaluation grid. Paul decays
    /// only polynomially, so its limit is looser than the Gaussian families.
    pub fn decay_tolerance(&self) -> f64 {
        match self {
            Self::Paul { .. } => 1e-6,
            _ => 1e-9,
        }
    }

    /// Tolerance on |∫ψ| for the admissibility check.
    pub fn mean_tolerance(&self) -> f64 {
        match self {
            Self::Morlet { .. } => 1e-4,
            _ => 1e-6,
        }
    }

    /// Short name used in file names and reports (`mexh`, `dog3`, ...).
    pub fn short_name(&self) -> String {
        match *self {
            Self::Dog { order: 2 } => "mexh".into(),
            Self::Dog { order } => format!("dog{order}"),
            Self::Morlet { .. } => "morlet".into(),
            Self::Paul { order } => format!("paul{order}"),
        }
    }
}

impl fmt::Display for MotherWavelet {
    /// Canonical selector string; parses back to the same wavelet.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Dog { order: 2 } => write!(f, "mexh"),
            Self::Dog { order } => write!(f, "dog:{order}"),
            Self::Morlet { omega0 } => write!(f, "morlet:{omega0}"),
            Self::Paul { order } => write!(f, "paul:{order}"),
        }
    }
}

impl FromStr for MotherWavelet {
    type Err = WaveletError;

    /// Grammar: `dog:<m>`, `mexh`, `morlet[:<ω₀>]`, `paul[:<m>]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let sel = s.trim().to_ascii_lowercase();
        let bad = || WaveletError::Selector(s.to_string());
        let (name, arg) = match sel.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (sel.as_str(), None),
        };
        let int = |a: &str| a.parse::<u32>().map_err(|_| bad());
        match (name, arg) {
            ("mexh", None) => Ok(Self::mexican_hat()),
            ("dog", Some(a)) => Self::dog(int(a)?),
            ("morlet", None) => Self::morlet(DEFAULT_MORLET_OMEGA0),
            ("morlet", Some(a)) => Self::morlet(a.parse().map_err(|_| bad())?),
            ("paul", None) => Self::paul(DEFAULT_PAUL_ORDER),
            ("paul", Some(a)) => Self::paul(int(a)?),
            _ => Err(bad()),
        }
    }
}

/// Γ(m + 1/2) via Γ(1/2) = √π and Γ(k + 1/2) = (k − 1/2)·Γ(k − 1/2).
fn gamma_half_integer(m: u32) -> f64 {
    (1..=m).fold(PI.sqrt(), |g, k| g * (k as f64 - 0.5))
}

/// Probabilists' Hermite polynomial Heₙ(t).
fn hermite_he(n: u32, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = t * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn dog_value(order: u32, t: f64) -> f64 {
    -hermite_he(order, t) * (-0.5 * t * t).exp() / gamma_half_integer(order).sqrt()
}

fn paul_norm(order: u32) -> f64 {
    let m = order as i32;
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    2f64.powi(m) * fact(order) / (PI * fact(2 * order)).sqrt()
}

/// Uniform grid for numerical integration over `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalGrid {
    t_min: f64,
    t_max: f64,
    n_points: usize,
}

impl EvalGrid {
    pub fn new(t_min: f64, t_max: f64, n_points: usize) -> Result<Self, WaveletError> {
        if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
            return Err(WaveletError::InvalidGrid(format!("need t_min < t_max, got [{t_min}, {t_max}]")));
        }
        if n_points < 2 {
            return Err(WaveletError::InvalidGrid("need at least 2 points".into()));
        }
        Ok(Self {
            t_min,
            t_max,
            n_points,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn step(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        (0..self.n_points).map(move |i| {
            if i + 1 == self.n_points {
                self.t_max
            } else {
                self.t_min + i as f64 * h
            }
        })
    }

    /// Trapezoidal rule for `f` sampled on this grid.
    pub fn trapezoid<F>(&self, f: F) -> Complex64
    where
        F: Fn(f64) -> Complex64,
    {
        let last = self.n_points - 1;
        let sum: Complex64 = self
            .points()
            .enumerate()
            .map(|(i, t)| {
                let w = if i == 0 || i == last { 0.5 } else { 1.0 };
                f(t) * w
            })
            .sum();
        sum * self.step()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    /// ∫ψ(t)dt.
    pub mean: Complex64,
    /// ∫|ψ(t)|²dt.
    pub norm_sq: f64,
    pub decay_ok: bool,
}

impl AdmissibilityReport {
    /// Zero mean and unit norm within the wavelet's tolerances.
    pub fn is_admissible(&self, w: &MotherWavelet) -> bool {
        self.decay_ok && self.mean.norm() < w.mean_tolerance() && (self.norm_sq - 1.0).abs() < 1e-3
    }
}

fn check_decay(w: &MotherWavelet, g: &EvalGrid) -> Result<(), WaveletError> {
    w.validate()?;
    let edge = w.evaluate(g.t_min).norm().max(w.evaluate(g.t_max).norm());
    let limit = w.decay_tolerance();
    if edge >= limit {
        return Err(WaveletError::GridTooNarrow {
            t_min: g.t_min,
            t_max: g.t_max,
            edge,
            limit,
        });
    }
    Ok(())
}

/// Trapezoidal estimates of ∫ψ and ∫|ψ|² on `g`.
pub fn admissibility_report(w: &MotherWavelet, g: &EvalGrid) -> Result<AdmissibilityReport, WaveletError> {
    check_decay(w, g)?;
    let mean = g.trapezoid(|t| w.evaluate(t));
    let norm_sq = g.trapezoid(|t| Complex64::new(w.evaluate(t).norm_sqr(), 0.0)).re;
    Ok(AdmissibilityReport {
        mean,
        norm_sq,
        decay_ok: true,
    })
}

/// `|∫ tᵏ ψ(t) dt|` for `k = 0..=up_to`.
pub fn vanishing_moments(w: &MotherWavelet, up_to: u32, g: &EvalGrid) -> Result<Vec<f64>, WaveletError> {
    check_decay(w, g)?;
    let values: Vec<(f64, Complex64)> = g.points().map(|t| (t, w.evaluate(t))).collect();
    let last = values.len() - 1;
    let h = g.step();
    Ok((0..=up_to as i32)
        .map(|k| {
            let s: Complex64 = values
                .iter()
                .enumerate()
                .map(|(i, &(t, v))| {
                    let wgt = if i == 0 || i == last { 0.5 } else { 1.0 };
                    v * (wgt * t.powi(k))
                })
                .sum();
            (s * h).norm()
        })
        .collect())
}

/// Number of leading moments that vanish numerically: moment k counts as
/// zero when it is below `1e-6·spanᵏ`.
pub fn count_vanishing_moments(moments: &[f64], g: &EvalGrid) -> usize {
    let span = g.t_max - g.t_min;
    moments
        .iter()
        .enumerate()
        .take_while(|&(k, &m)| m < 1e-6 * span.powi(k as i32))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shipped() -> Vec<MotherWavelet> {
        let mut v: Vec<_> = (1..=5).map(|m| MotherWavelet::dog(m).unwrap()).collect();
        v.push(MotherWavelet::morlet(6.0).unwrap());
        v.extend((4..=6).map(|m| MotherWavelet::paul(m).unwrap()));
        v
    }

    // Independent oracle: normalize the raw shape numerically with a fine
    // Simpson rule and read off its value.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn mexican_hat_values() {
        let w = MotherWavelet::mexican_hat();
        assert!(w.evaluate(1.0).norm() < 1e-15);
        assert!(w.evaluate(-1.0).norm() < 1e-15);
        let shape = |t: f64| (1.0 - t * t) * (-0.5 * t * t).exp();
        let norm = simpson(|t| shape(t).powi(2), -12.0, 12.0, 20_000).sqrt();
        let at_zero = w.evaluate(0.0);
        assert!((at_zero.re - 1.0 / norm).abs() < 1e-9);
        assert!((at_zero.re - 2.0 / (3f64.sqrt() * PI.powf(0.25))).abs() < 1e-12);
        assert!((at_zero.re - 0.86733).abs() < 1e-5);
        assert_eq!(at_zero.im, 0.0);
    }

    #[test]
    fn morlet_value_at_zero() {
        let w = MotherWavelet::morlet(6.0).unwrap();
        let norm = simpson(|t| (-t * t).exp(), -12.0, 12.0, 20_000).sqrt();
        let v = w.evaluate(0.0);
        assert!((v.re - 1.0 / norm).abs() < 1e-9);
        assert!((v.re - 0.75113).abs() < 1e-5);
    }

    #[test]
    fn invalid_parameters() {
        assert!(MotherWavelet::dog(0).is_err());
        assert!(MotherWavelet::paul(0).is_err());
        assert!(MotherWavelet::morlet(0.0).is_err());
        assert!(MotherWavelet::morlet(f64::NAN).is_err());
        assert!(MotherWavelet::Dog { order: 0 }.try_evaluate(0.0).is_err());
    }

    #[test]
    fn selector_grammar() {
        let cases = [
            ("mexh", MotherWavelet::Dog { order: 2 }),
            ("dog:2", MotherWavelet::Dog { order: 2 }),
            ("dog:5", MotherWavelet::Dog { order: 5 }),
            ("morlet", MotherWavelet::Morlet { omega0: 6.0 }),
            ("morlet:5.5", MotherWavelet::Morlet { omega0: 5.5 }),
            ("paul", MotherWavelet::Paul { order: 4 }),
            ("paul:2", MotherWavelet::Paul { order: 2 }),
        ];
        for (s, w) in cases {
            let parsed: MotherWavelet = s.parse().unwrap();
            assert_eq!(parsed, w, "{s}");
            assert_eq!(parsed.to_string().parse::<MotherWavelet>().unwrap(), w);
        }
        for bad in ["", "dog", "dog:0", "haar", "paul:x", "mexh:2", "morlet:-1"] {
            assert!(bad.parse::<MotherWavelet>().is_err(), "{bad}");
        }
    }

    #[test]
    fn admissibility_examples() {
        let mh = MotherWavelet::mexican_hat();
        let g = EvalGrid::new(-8.0, 8.0, 4096).unwrap();
        let r = admissibility_report(&mh, &g).unwrap();
        assert!(r.mean.norm() < 1e-8);
        assert!((r.norm_sq - 1.0).abs() < 1e-3);
        let paul = MotherWavelet::paul(4).unwrap();
        let r = admissibility_report(&paul, &EvalGrid::new(-20.0, 20.0, 8192).unwrap()).unwrap();
        assert!(r.mean.norm() < 1e-6, "{}", r.mean.norm());
    }

    #[test]
    fn every_shipped_wavelet_is_admissible() {
        for w in shipped() {
            let r = admissibility_report(&w, &w.standard_grid()).unwrap();
            assert!(r.is_admissible(&w), "{w}: {r:?}");
        }
    }

    #[test]
    fn narrow_grid_rejected() {
        let g = EvalGrid::new(-2.0, 2.0, 100).unwrap();
        let w = MotherWavelet::mexican_hat();
        assert!(matches!(admissibility_report(&w, &g), Err(WaveletError::GridTooNarrow { .. })));
        assert!(matches!(vanishing_moments(&w, 2, &g), Err(WaveletError::GridTooNarrow { .. })));
        assert!(EvalGrid::new(1.0, 1.0, 10).is_err());
        assert!(EvalGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn dog_vanishing_moment_counts() {
        for m in 1..=5u32 {
            let w = MotherWavelet::dog(m).unwrap();
            let g = w.standard_grid();
            let moments = vanishing_moments(&w, m, &g).unwrap();
            assert_eq!(count_vanishing_moments(&moments, &g), m as usize, "DOG({m}): {moments:?}");
            for k in 0..m as usize {
                assert!(moments[k] < 1e-6, "DOG({m}) moment {k} = {}", moments[k]);
            }
            // ∫tᵐ Heₘ(t) e^{-t²/2} dt = m!·√(2π), so |moment m| = m!√(2π)/√Γ(m+½);
            // the ±8 truncation costs ~1e-8 relative at m = 5.
            let fact: f64 = (1..=m).map(f64::from).product();
            let want = fact * (2.0 * PI).sqrt() / gamma_half_integer(m).sqrt();
            assert!((moments[m as usize] - want).abs() < 1e-6 * want, "DOG({m}): {} vs {want}", moments[m as usize]);
            assert!(moments[m as usize] > 1e-3);
        }
    }

    #[test]
    fn dog_parity() {
        for m in 1..=5u32 {
            let w = MotherWavelet::dog(m).unwrap();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..50 {
                let t = i as f64 * 0.17;
                let (a, b) = (w.evaluate(-t).re, w.evaluate(t).re);
                assert!((a - sign * b).abs() < 1e-14, "DOG({m}) t={t}");
            }
        }
    }

    #[test]
    fn evaluation_is_continuous() {
        let h = 1e-6;
        for w in shipped() {
            for i in 0..200 {
                let t = -10.0 + i as f64 * 0.1;
                let d = (w.evaluate(t + h) - w.evaluate(t)).norm();
                assert!(d <= 20.0 * h, "{w} t={t} jump {d}");
            }
        }
    }

    #[test]
    fn gamma_and_hermite() {
        assert!((gamma_half_integer(0) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half_integer(2) - 0.75 * PI.sqrt()).abs() < 1e-14);
        assert_eq!(hermite_he(3, 2.0), 2.0); // t³ - 3t
        assert_eq!(hermite_he(4, 1.0), -2.0); // t⁴ - 6t² + 3
    }

    #[test]
    fn mexican_hat_fourier_period() {
        let w = MotherWavelet::mexican_hat();
        assert!((w.fourier_period(1.0) - 2.0 * PI / 2.5f64.sqrt()).abs() < 1e-12);
    }
}
