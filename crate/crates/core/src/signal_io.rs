//! Labeled multi-axis signal windows: loading, validation, splitting and
//! scalar features.
//!
//! The on-disk format is a CSV file with header `id,label,axis,s0,...,s{L-1}`
//! where every row carries one axis (`x`, `y`, `z` or `mag`) of one window,
//! plus a sidecar `<file>.meta` with `key=value` lines for `sample_rate_hz`,
//! `window_len` and `class_names` (semicolon separated).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default window length (samples) when no metadata says otherwise.
pub const DEFAULT_WINDOW_LEN: usize = 151;
/// Default sampling rate in Hz.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 50.0;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed row: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: expected {expected} samples, found {found}")]
    InconsistentLength {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unknown axis tag `{tag}`")]
    UnknownAxis { line: usize, tag: String },
    #[error("line {line}: label {label} out of range for {n_classes} classes")]
    LabelOutOfRange {
        line: usize,
        label: usize,
        n_classes: usize,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("sample `{id}` is missing axis `{axis}`")]
    MissingAxis { id: String, axis: Axis },
    #[error("sample `{id}` has axis `{axis}` more than once")]
    DuplicateAxis { id: String, axis: Axis },
    #[error("sample `{id}` has rows with different labels")]
    LabelConflict { id: String },
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("sample `{id}`: {reason}")]
    InconsistentSample { id: String, reason: String },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("train fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("signal has zero total energy")]
    ZeroEnergy,
    #[error("cannot split {len} samples into {n_frames} frames")]
    InvalidFrames { len: usize, n_frames: usize },
    #[error("metadata: {0}")]
    Metadata(String),
}

pub type Result<T, E = SignalError> = std::result::Result<T, E>;

/// One fixed-length, finite, real-valued window of one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(SignalError::InvalidSignal("no samples".into()));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(SignalError::InvalidSignal(format!(
                "sample rate {sample_rate_hz} is not positive"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::InvalidSignal(format!(
                "sample {i} is not finite"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Sensor axis tag. `Magnitude` is the Euclidean norm of the three axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
    Magnitude,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::X, Axis::Y, Axis::Z, Axis::Magnitude];

    pub fn tag(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::Magnitude => "mag",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            "mag" | "m" | "magnitude" => Ok(Axis::Magnitude),
            other => Err(format!("unknown axis `{other}`")),
        }
    }
}

/// Parses an axis-set shorthand such as `xyz`, `xyzm`, `z`, `mag` or `x,y`.
pub fn parse_axis_set(s: &str) -> std::result::Result<Vec<Axis>, String> {
    let s = s.trim();
    if s.contains(',') {
        return s.split(',').map(|t| t.trim().parse()).collect();
    }
    if let Ok(axis) = s.parse() {
        return Ok(vec![axis]);
    }
    s.chars().map(|c| c.to_string().parse()).collect()
}

/// One labeled window with up to four axes.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiAxisSample {
    id: String,
    label: usize,
    axes: BTreeMap<Axis, Signal>,
}

impl MultiAxisSample {
    pub fn new(id: impl Into<String>, label: usize, axes: BTreeMap<Axis, Signal>) -> Result<Self> {
        let id = id.into();
        let mut shape = None;
        for (axis, sig) in &axes {
            let this = (sig.len(), sig.sample_rate_hz());
            match shape {
                None => shape = Some(this),
                Some(s) if s != this => {
                    return Err(SignalError::InconsistentSample {
                        id,
                        reason: format!("axis {axis} has length/rate {this:?}, expected {s:?}"),
                    })
                }
                _ => {}
            }
        }
        if let Some(mag) = axes.get(&Axis::Magnitude) {
            if mag.samples().iter().any(|&v| v < 0.0) {
                return Err(SignalError::InconsistentSample {
                    id,
                    reason: "negative magnitude".into(),
                });
            }
        }
        Ok(Self { id, label, axes })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn axes(&self) -> &BTreeMap<Axis, Signal> {
        &self.axes
    }

    pub fn axis(&self, axis: Axis) -> Option<&Signal> {
        self.axes.get(&axis)
    }

    /// True when all of x, y and z are present.
    pub fn is_complete(&self) -> bool {
        [Axis::X, Axis::Y, Axis::Z]
            .iter()
            .all(|a| self.axes.contains_key(a))
    }

    pub fn window_len(&self) -> usize {
        self.axes.values().next().map_or(0, Signal::len)
    }
}

/// Pointwise `sqrt(x² + y² + z²)`.
pub fn magnitude(sample: &MultiAxisSample) -> Result<Signal> {
    let get = |axis| {
        sample.axis(axis).ok_or_else(|| SignalError::MissingAxis {
            id: sample.id.clone(),
            axis,
        })
    };
    let (x, y, z) = (get(Axis::X)?, get(Axis::Y)?, get(Axis::Z)?);
    let samples = x
        .samples()
        .iter()
        .zip(y.samples())
        .zip(z.samples())
        .map(|((a, b), c)| (a * a + b * b + c * c).sqrt())
        .collect();
    Signal::new(samples, x.sample_rate_hz())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<MultiAxisSample>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(samples: Vec<MultiAxisSample>, class_names: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for s in &samples {
            if s.label >= class_names.len() {
                return Err(SignalError::LabelOutOfRange {
                    line: 0,
                    label: s.label,
                    n_classes: class_names.len(),
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(SignalError::DuplicateId(s.id.clone()));
            }
        }
        Ok(Self {
            samples,
            class_names,
        })
    }

    pub fn samples(&self) -> &[MultiAxisSample] {
        &self.samples
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of samples per class label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// Geometry and class list of a signals file, normally read from its sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub window_len: usize,
    pub sample_rate_hz: f64,
    pub class_names: Vec<String>,
}

impl Schema {
    pub fn new(window_len: usize, sample_rate_hz: f64, class_names: Vec<String>) -> Self {
        Self {
            window_len,
            sample_rate_hz,
            class_names,
        }
    }

    /// Reads a `key=value` metadata file. Blank lines and `#` comments are
    /// ignored; unknown keys are rejected.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| SignalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut window_len = DEFAULT_WINDOW_LEN;
        let mut sample_rate_hz = DEFAULT_SAMPLE_RATE_HZ;
        let mut class_names = None;
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SignalError::Metadata(format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| SignalError::Metadata(format!("{key}: {what} `{value}`"));
            match key {
                "sample_rate_hz" => {
                    sample_rate_hz = value.parse().map_err(|_| bad("not a number"))?;
                    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
                        return Err(bad("must be positive"));
                    }
                }
                "window_len" => {
                    window_len = value.parse().map_err(|_| bad("not an integer"))?;
                    if window_len == 0 {
                        return Err(bad("must be positive"));
                    }
                }
                "class_names" => {
                    class_names = Some(
                        value
                            .split(';')
                            .map(|s| s.trim().to_string())
                            .collect::<Vec<_>>(),
                    )
                }
                _ => return Err(SignalError::Metadata(format!("unknown key `{key}`"))),
            }
        }
        let class_names = class_names
            .filter(|c| !c.is_empty() && c.iter().all(|n| !n.is_empty()))
            .ok_or_else(|| SignalError::Metadata("class_names missing or empty".into()))?;
        Ok(Self {
            window_len,
            sample_rate_hz,
            class_names,
        })
    }

    pub fn render(&self) -> String {
        format!(
            "sample_rate_hz={}\nwindow_len={}\nclass_names={}\n",
            self.sample_rate_hz,
            self.window_len,
            self.class_names.join(";")
        )
    }
}

/// Path of the metadata sidecar for a signals file: `<path>.meta`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Loads a signals CSV together with its `.meta` sidecar.
pub fn load_dataset(path: &Path, strict: bool) -> Result<Dataset> {
    let schema = Schema::read(&sidecar_path(path))?;
    load_dataset_with_schema(path, &schema, strict)
}

pub fn load_dataset_with_schema(path: &Path, schema: &Schema, strict: bool) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|source| SignalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(BufReader::new(file), schema, strict).map_err(|e| match e {
        SignalError::Io { source, .. } => SignalError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Parses the CSV window format from any reader.
///
/// In strict mode every sample must carry x, y and z; in lenient mode
/// incomplete samples are kept and can be found via
/// [`MultiAxisSample::is_complete`]. A missing `mag` row is recomputed from
/// the three axes whenever they are all present.
pub fn parse_dataset<R: BufRead>(reader: R, schema: &Schema, strict: bool) -> Result<Dataset> {
    let io_err = |source| SignalError::Io {
        path: PathBuf::new(),
        source,
    };
    let mut lines = reader.lines().enumerate();
    let n_samples = loop {
        match lines.next() {
            None => return Err(SignalError::EmptyDataset),
            Some((_, l)) => {
                let l = l.map_err(io_err)?;
                if l.trim().is_empty() {
                    continue;
                }
                break parse_header(&l)?;
            }
        }
    };

    // id -> (label, first line, axes); order of first appearance is kept.
    let mut order: Vec<String> = Vec::new();
    let mut rows: BTreeMap<String, (usize, usize, BTreeMap<Axis, Signal>)> = BTreeMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(io_err)?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let malformed = |reason: &str| SignalError::Malformed {
            line: lineno,
            reason: reason.to_string(),
        };
        let id = fields.next().map(str::trim).filter(|s| !s.is_empty());
        let id = id.ok_or_else(|| malformed("missing id"))?;
        let label: usize = fields
            .next()
            .ok_or_else(|| malformed("missing label"))?
            .trim()
            .parse()
            .map_err(|_| malformed("label is not a non-negative integer"))?;
        let tag = fields.next().ok_or_else(|| malformed("missing axis"))?.trim();
        let axis: Axis = tag.parse().map_err(|_| SignalError::UnknownAxis {
            line: lineno,
            tag: tag.to_string(),
        })?;
        let values = fields
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| malformed(&format!("`{}` is not a finite number", f.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != n_samples {
            return Err(SignalError::InconsistentLength {
                line: lineno,
                expected: n_samples,
                found: values.len(),
            });
        }
        if label >= schema.class_names.len() {
            return Err(SignalError::LabelOutOfRange {
                line: lineno,
                label,
                n_classes: schema.class_names.len(),
            });
        }
        let signal = Signal::new(values, schema.sample_rate_hz)?;
        let entry = rows.entry(id.to_string()).or_insert_with(|| {
            order.push(id.to_string());
            (label, lineno, BTreeMap::new())
        });
        if entry.0 != label {
            return Err(SignalError::LabelConflict { id: id.to_string() });
        }
        if entry.2.insert(axis, signal).is_some() {
            return Err(SignalError::DuplicateAxis {
                id: id.to_string(),
                axis,
            });
        }
    }
    if order.is_empty() {
        return Err(SignalError::EmptyDataset);
    }
    if n_samples != schema.window_len {
        return Err(SignalError::InconsistentLength {
            line: 1,
            expected: schema.window_len,
            found: n_samples,
        });
    }

    let mut samples = Vec::with_capacity(order.len());
    for id in order {
        let (label, _, axes) = rows.remove(&id).expect("id recorded in order");
        let mut sample = MultiAxisSample::new(id, label, axes)?;
        if !sample.is_complete() {
            if strict {
                let axis = [Axis::X, Axis::Y, Axis::Z]
                    .into_iter()
                    .find(|a| !sample.axes.contains_key(a))
                    .expect("incomplete sample lacks an axis");
                return Err(SignalError::MissingAxis {
                    id: sample.id,
                    axis,
                });
            }
        } else if !sample.axes.contains_key(&Axis::Magnitude) {
            let mag = magnitude(&sample)?;
            sample.axes.insert(Axis::Magnitude, mag);
        }
        samples.push(sample);
    }
    Dataset::new(samples, schema.class_names.clone())
}

fn parse_header(line: &str) -> Result<usize> {
    let fields: Vec<&str> = line.trim_end_matches('\r').split(',').map(str::trim).collect();
    let malformed = |reason: String| SignalError::Malformed { line: 1, reason };
    if fields.len() < 4 || fields[..3] != ["id", "label", "axis"] {
        return Err(malformed("header must start with `id,label,axis,s0`".into()));
    }
    for (i, f) in fields[3..].iter().enumerate() {
        if *f != format!("s{i}") {
            return Err(malformed(format!("expected header column `s{i}`, found `{f}`")));
        }
    }
    Ok(fields.len() - 3)
}

/// Writes `ds` as a signals CSV at `path` plus its `.meta` sidecar.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let first = ds.samples.first().ok_or(SignalError::EmptyDataset)?;
    let window_len = first.window_len();
    let sample_rate_hz = first
        .axes
        .values()
        .next()
        .map_or(DEFAULT_SAMPLE_RATE_HZ, Signal::sample_rate_hz);
    let io = |source| SignalError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    let header: Vec<String> = (0..window_len).map(|i| format!("s{i}")).collect();
    writeln!(out, "id,label,axis,{}", header.join(",")).map_err(io)?;
    for s in &ds.samples {
        for (axis, sig) in &s.axes {
            write!(out, "{},{},{}", s.id, s.label, axis).map_err(io)?;
            for v in sig.samples() {
                write!(out, ",{v}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
    }
    out.flush().map_err(io)?;
    let schema = Schema::new(window_len, sample_rate_hz, ds.class_names.clone());
    let meta = sidecar_path(path);
    fs::write(&meta, schema.render()).map_err(|source| SignalError::Io { path: meta, source })
}

/// Train fraction and shuffle seed for [`split_train_test`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// Shuffles `0..n` with a Fisher–Yates pass driven by ChaCha8
/// (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`), then takes the first
/// `⌊fraction·n⌋` indices as train and the remainder as test.
pub fn split_indices(n: usize, spec: SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(SignalError::InvalidFraction(f));
    }
    if n == 0 {
        return Err(SignalError::EmptyDataset);
    }
    let n_train = train_size(n, f);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    idx.shuffle(&mut rng);
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

/// Dataset split by [`split_indices`].
pub fn split_train_test(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.len(), spec)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// `⌊fraction·n⌋`, tolerant of representation error such as `0.29·100`.
pub fn train_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) + 1e-9).floor().min(n as f64) as usize
}

/// Σ|sₜ|².
pub fn energy(s: &Signal) -> f64 {
    s.samples().iter().map(|v| v * v).sum()
}

/// Shannon entropy of the per-frame energy distribution.
///
/// The window is cut into `n_frames` frames of `len / n_frames` samples; the
/// trailing remainder goes into the last frame.
pub fn energy_entropy(s: &Signal, n_frames: usize) -> Result<f64> {
    let len = s.len();
    if n_frames == 0 || n_frames > len {
        return Err(SignalError::InvalidFrames { len, n_frames });
    }
    let total = energy(s);
    if total == 0.0 {
        return Err(SignalError::ZeroEnergy);
    }
    let frame = len / n_frames;
    let x = s.samples();
    let entropy = (0..n_frames)
        .map(|k| {
            let end = if k + 1 == n_frames { len } else { (k + 1) * frame };
            let e: f64 = x[k * frame..end].iter().map(|v| v * v).sum();
            let p = e / total;
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        })
        .sum();
    Ok(entropy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(v: &[f64]) -> Signal {
        Signal::new(v.to_vec(), 50.0).unwrap()
    }

    fn xyz(x: &[f64], y: &[f64], z: &[f64]) -> MultiAxisSample {
        let axes = BTreeMap::from([(Axis::X, sig(x)), (Axis::Y, sig(y)), (Axis::Z, sig(z))]);
        MultiAxisSample::new("s", 0, axes).unwrap()
    }

    fn schema(len: usize) -> Schema {
        Schema::new(len, 50.0, vec!["a".into(), "b".into()])
    }

    #[test]
    fn signal_rejects_bad_input() {
        assert!(Signal::new(vec![], 50.0).is_err());
        assert!(Signal::new(vec![1.0, f64::NAN], 50.0).is_err());
        assert!(Signal::new(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn magnitude_examples() {
        assert_eq!(magnitude(&xyz(&[3.0], &[4.0], &[0.0])).unwrap().samples(), &[5.0]);
        assert_eq!(
            magnitude(&xyz(&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0])).unwrap().samples(),
            &[0.0, 0.0]
        );
        assert_eq!(
            magnitude(&xyz(&[1.0, 2.0], &[2.0, 3.0], &[2.0, 6.0])).unwrap().samples(),
            &[3.0, 7.0]
        );
    }

    #[test]
    fn magnitude_needs_all_axes() {
        let axes = BTreeMap::from([(Axis::X, sig(&[1.0])), (Axis::Y, sig(&[1.0]))]);
        let s = MultiAxisSample::new("s", 0, axes).unwrap();
        assert!(matches!(
            magnitude(&s),
            Err(SignalError::MissingAxis { axis: Axis::Z, .. })
        ));
    }

    #[test]
    fn lenient_load_keeps_partial_sample() {
        let csv = "id,label,axis,s0,s1\nw1,1,x,1.0,2.0\nw1,1,y,0.5,-0.5\n";
        let ds = parse_dataset(csv.as_bytes(), &schema(2), false).unwrap();
        assert_eq!(ds.len(), 1);
        let s = &ds.samples()[0];
        assert_eq!(s.axes().len(), 2);
        assert_eq!(s.label(), 1);
        assert!(!s.is_complete());
        assert!(matches!(
            parse_dataset(csv.as_bytes(), &schema(2), true),
            Err(SignalError::MissingAxis { axis: Axis::Z, .. })
        ));
    }

    #[test]
    fn magnitude_filled_in_when_absent() {
        let csv = "id,label,axis,s0\nw,0,x,3\nw,0,y,4\nw,0,z,0\n";
        let ds = parse_dataset(csv.as_bytes(), &schema(1), true).unwrap();
        assert_eq!(ds.samples()[0].axis(Axis::Magnitude).unwrap().samples(), &[5.0]);
    }

    #[test]
    fn load_errors() {
        let s = schema(3);
        let bad_len = "id,label,axis,s0,s1,s2\na,0,x,1,2,3\na,0,y,1,2,3,4\n";
        assert!(matches!(
            parse_dataset(bad_len.as_bytes(), &s, false),
            Err(SignalError::InconsistentLength { line: 3, .. })
        ));
        assert!(matches!(
            parse_dataset("".as_bytes(), &s, false),
            Err(SignalError::EmptyDataset)
        ));
        assert!(matches!(
            parse_dataset("id,label,axis,s0,s1,s2\n".as_bytes(), &s, false),
            Err(SignalError::EmptyDataset)
        ));
        let bad_axis = "id,label,axis,s0,s1,s2\na,0,w,1,2,3\n";
        assert!(matches!(
            parse_dataset(bad_axis.as_bytes(), &s, false),
            Err(SignalError::UnknownAxis { .. })
        ));
        let bad_label = "id,label,axis,s0,s1,s2\na,2,x,1,2,3\n";
        assert!(matches!(
            parse_dataset(bad_label.as_bytes(), &s, false),
            Err(SignalError::LabelOutOfRange { label: 2, .. })
        ));
        let comma_decimal = "id,label,axis,s0,s1,s2\na,0,x,1,\"0,8\",3\n";
        assert!(matches!(
            parse_dataset(comma_decimal.as_bytes(), &s, false),
            Err(SignalError::Malformed { .. })
        ));
        let dup = "id,label,axis,s0,s1,s2\na,0,x,1,2,3\na,0,x,1,2,3\n";
        assert!(matches!(
            parse_dataset(dup.as_bytes(), &s, false),
            Err(SignalError::DuplicateAxis { .. })
        ));
        let conflict = "id,label,axis,s0,s1,s2\na,0,x,1,2,3\na,1,y,1,2,3\n";
        assert!(matches!(
            parse_dataset(conflict.as_bytes(), &s, false),
            Err(SignalError::LabelConflict { .. })
        ));
    }

    #[test]
    fn schema_parsing() {
        let s = Schema::parse("# comment\nsample_rate_hz=25.5\nwindow_len=10\nclass_names=a; b;c\n").unwrap();
        assert_eq!(s.window_len, 10);
        assert_eq!(s.sample_rate_hz, 25.5);
        assert_eq!(s.class_names, ["a", "b", "c"]);
        assert!(Schema::parse("class_names=a\nfoo=1\n").is_err());
        assert!(Schema::parse("window_len=10\n").is_err());
        let d = Schema::parse("class_names=a;b").unwrap();
        assert_eq!((d.window_len, d.sample_rate_hz), (151, 50.0));
        assert_eq!(Schema::parse(&s.render()).unwrap(), s);
    }

    fn toy_dataset(n: usize) -> Dataset {
        let samples = (0..n)
            .map(|i| {
                let axes = BTreeMap::from([(Axis::X, sig(&[i as f64]))]);
                MultiAxisSample::new(format!("s{i}"), i % 2, axes).unwrap()
            })
            .collect();
        Dataset::new(samples, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn split_examples() {
        let ds = toy_dataset(10);
        let spec = SplitSpec {
            train_fraction: 0.8,
            seed: 7,
        };
        let (tr, te) = split_train_test(&ds, spec).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let (tr2, te2) = split_train_test(&ds, spec).unwrap();
        assert_eq!(tr, tr2);
        assert_eq!(te, te2);
        for f in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            let spec = SplitSpec {
                train_fraction: f,
                seed: 0,
            };
            assert!(matches!(
                split_train_test(&ds, spec),
                Err(SignalError::InvalidFraction(_))
            ));
        }
    }

    #[test]
    fn train_size_tolerates_rounding() {
        assert_eq!(train_size(100, 0.29), 29);
        assert_eq!(train_size(10, 0.8), 8);
        assert_eq!(train_size(7, 0.5), 3);
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&sig(&[1.0, 2.0])), 5.0);
        assert_eq!(energy(&sig(&[0.0; 4])), 0.0);
        assert!((energy(&sig(&[2.5, 5.0])) - 2.5f64.powi(2) * 5.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let uniform = sig(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
        let ee = energy_entropy(&uniform, 4).unwrap();
        assert!((ee - 4f64.ln()).abs() < 1e-12);
        assert!((ee - 1.3863).abs() < 1e-4);
        let spike = sig(&[0.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        assert_eq!(energy_entropy(&spike, 3).unwrap(), 0.0);
        assert!(matches!(
            energy_entropy(&sig(&[0.0; 4]), 2),
            Err(SignalError::ZeroEnergy)
        ));
        assert!(energy_entropy(&sig(&[1.0; 4]), 0).is_err());
        assert!(energy_entropy(&sig(&[1.0; 4]), 5).is_err());
        // remainder folded into the last frame: frames {1},{1},{1,1,1}
        let e = energy_entropy(&sig(&[1.0; 5]), 3).unwrap();
        let p: [f64; 3] = [0.2, 0.2, 0.6];
        let want: f64 = p.iter().map(|p| -p * p.ln()).sum();
        assert!((e - want).abs() < 1e-12);
    }

    #[test]
    fn axis_set_parsing() {
        assert_eq!(parse_axis_set("xyz").unwrap(), [Axis::X, Axis::Y, Axis::Z]);
        assert_eq!(
            parse_axis_set("xyzm").unwrap(),
            [Axis::X, Axis::Y, Axis::Z, Axis::Magnitude]
        );
        assert_eq!(parse_axis_set("mag").unwrap(), [Axis::Magnitude]);
        assert_eq!(parse_axis_set("x,z").unwrap(), [Axis::X, Axis::Z]);
        assert!(parse_axis_set("xq").is_err());
    }

    proptest! {
        #[test]
        fn magnitude_non_negative(v in prop::collection::vec(-1e3f64..1e3, 3..30)) {
            let n = v.len() / 3;
            let s = xyz(&v[..n], &v[n..2 * n], &v[2 * n..3 * n]);
            prop_assert!(magnitude(&s).unwrap().samples().iter().all(|&m| m >= 0.0));
        }

        #[test]
        fn split_is_partition(n in 1usize..60, f in 0.01f64..0.99, seed: u64) {
            let ds = toy_dataset(n);
            let (tr, te) = split_train_test(&ds, SplitSpec { train_fraction: f, seed }).unwrap();
            let mut ids: Vec<&str> = tr.samples().iter().chain(te.samples()).map(|s| s.id()).collect();
            prop_assert_eq!(ids.len(), n);
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), n);
            prop_assert_eq!(tr.len(), train_size(n, f));
        }

        #[test]
        fn energy_homogeneous(v in prop::collection::vec(-10f64..10.0, 4..40), alpha in -5f64..5.0) {
            let s = sig(&v);
            let scaled = sig(&v.iter().map(|x| alpha * x).collect::<Vec<_>>());
            let (e, es) = (energy(&s), energy(&scaled));
            prop_assert!((es - alpha * alpha * e).abs() <= 1e-9 * (1.0 + es.abs()));
            if e > 1e-6 && alpha.abs() > 1e-3 {
                let h = energy_entropy(&s, 4).unwrap();
                let hs = energy_entropy(&scaled, 4).unwrap();
                prop_assert!((h - hs).abs() < 1e-9);
            }
        }
    }
}
