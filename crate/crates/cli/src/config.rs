//! Run configuration. Every key exists as a `--flag`, a `key=value` line in
//! a `--config` file and a `WAVEHAR_KEY` environment variable; flags beat
//! environment, which beats the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};
use wavehar_core::image::{CropSpec, Normalization};
use wavehar_core::signal_io::{parse_axis_set, Axis};
use wavehar_core::transform::CwtStrategy;
use wavehar_core::wavelet::MotherWavelet;
use wavehar_harness::{ExperimentConfig, ModelConfig, PipelineConfig, SweepDimension};
use wavehar_nn::{OptimizerKind, TrainConfig};

use crate::CliError;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Value,
    List,
    Flag,
}

struct Key {
    name: &'static str,
    kind: Kind,
    help: &'static str,
}

const fn key(name: &'static str, kind: Kind, help: &'static str) -> Key {
    Key { name, kind, help }
}

const KEYS: &[Key] = &[
    key("dataset", Kind::Value, "Signals CSV file (schema read from <file>.meta)"),
    key("strict", Kind::Flag, "Reject samples that lack any of x, y, z"),
    key("tensors", Kind::Value, "Directory written by `transform` (index.csv + .cwts files)"),
    key("input", Kind::Value, "Single .cwts file for `render`"),
    key("checkpoint", Kind::Value, "Model checkpoint path [train default: <out>/model.shnn]"),
    key("out", Kind::Value, "Output directory [default: wavehar-out]"),
    key("png", Kind::Flag, "Also export one grayscale PNG per channel"),
    key("axes", Kind::Value, "Axis set: x, y, z, mag, xyz, xyzm, ... [default: xyz]"),
    key("wavelet", Kind::List, "Wavelet selector, repeatable: mexh, dog:M, morlet[:W0], paul[:M] [default: mexh]"),
    key("n_scales", Kind::Value, "Number of scales (image height) [default: 64]"),
    key("a0", Kind::Value, "Smallest scale in samples [default: 2]"),
    key("strategy", Kind::Value, "CWT evaluation: fft or direct [default: fft]"),
    key("normalization", Kind::Value, "Pixel mapping: minmax or absmax [default: per wavelet]"),
    key("image_size", Kind::Value, "Resize images to HxW"),
    key("bands", Kind::Value, "Cut images into N scale bands stacked as channels [default: 1]"),
    key("crop_width", Kind::Value, "Crop width in columns, 0 disables cropping [default: 128]"),
    key("crop_stride", Kind::Value, "Crop stride, 0 for a single centered crop [default: 0]"),
    key("augment_stride", Kind::Value, "Sliding-crop stride for training images"),
    key("preset", Kind::Value, "Architecture: paper-initial, paper-best or a layer list [default: paper-initial]"),
    key("epochs", Kind::Value, "Training epochs [default: 20]"),
    key("batch_size", Kind::Value, "Mini-batch size [default: 32]"),
    key("optimizer", Kind::Value, "sgd or adam [default: adam]"),
    key("learning_rate", Kind::Value, "Learning rate [default: 0.001 adam, 0.01 sgd]"),
    key("seed", Kind::Value, "Master seed for splits, initialization and shuffling [default: 0]"),
    key("train_fraction", Kind::Value, "Train share of the split [default: 0.8]"),
    key("jobs", Kind::Value, "Worker threads [default: 1]"),
    key("dimension", Kind::Value, "Sweep dimension"),
    key("values", Kind::Value, "Comma-separated sweep values"),
];

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn env_name(key: &str) -> String {
    format!("WAVEHAR_{}", key.to_ascii_uppercase())
}

/// Arguments shared by every subcommand.
pub fn args() -> Vec<Arg> {
    let mut out = vec![Arg::new("config")
        .long("config")
        .value_name("FILE")
        .help("key=value file providing defaults for any option below")];
    for k in KEYS {
        let mut a = Arg::new(k.name)
            .long(flag_name(k.name))
            .env(env_name(k.name))
            .help(k.help);
        a = match k.kind {
            Kind::Value => a
                .action(ArgAction::Set)
                .allow_negative_numbers(true)
                .value_name(k.name.to_ascii_uppercase()),
            Kind::List => a
                .action(ArgAction::Append)
                .value_delimiter(',')
                .value_name(k.name.to_ascii_uppercase()),
            Kind::Flag => a.action(ArgAction::SetTrue),
        };
        out.push(a);
    }
    out
}

pub fn attach(cmd: Command) -> Command {
    cmd.args(args())
}

type Layer = BTreeMap<&'static str, Vec<String>>;

fn parse_file(path: &Path) -> Result<Layer, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut out = Layer::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        let k = k.trim();
        let spec = KEYS
            .iter()
            .find(|s| s.name == k)
            .ok_or_else(|| CliError::input(format!("{}:{}: unknown key `{k}`", path.display(), i + 1)))?;
        let v = v.trim();
        let entry = out.entry(spec.name).or_default();
        match spec.kind {
            Kind::List => entry.extend(v.split(',').map(|s| s.trim().to_string())),
            _ => *entry = vec![v.to_string()],
        }
    }
    Ok(out)
}

/// Merged key/value view of file, environment and flags.
pub struct Settings {
    values: Layer,
}

impl Settings {
    pub fn from_matches(m: &ArgMatches) -> Result<Self, CliError> {
        let mut values = match m.get_one::<String>("config") {
            Some(p) => parse_file(Path::new(p))?,
            None => Layer::new(),
        };
        for k in KEYS {
            if !matches!(m.value_source(k.name), Some(ValueSource::CommandLine | ValueSource::EnvVariable)) {
                continue;
            }
            let v = match k.kind {
                Kind::Flag => vec![m.get_flag(k.name).to_string()],
                _ => m
                    .get_many::<String>(k.name)
                    .map(|vs| vs.cloned().collect())
                    .unwrap_or_default(),
            };
            values.insert(k.name, v);
        }
        Ok(Self { values })
    }

    fn one(&self, key: &str) -> Option<&str> {
        self.values.get(key).and_then(|v| v.last()).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.one(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::input(format!("--{} `{v}`: {e}", flag_name(key))))
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.one(key) {
            None => Ok(false),
            Some("true" | "1" | "yes" | "on") => Ok(true),
            Some("false" | "0" | "no" | "off" | "") => Ok(false),
            Some(v) => Err(CliError::input(format!("--{} expects a boolean, got `{v}`", flag_name(key)))),
        }
    }
}

/// Typed view of [`Settings`] with defaults applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub strict: bool,
    pub tensors: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out: PathBuf,
    pub png: bool,
    pub experiment: ExperimentConfig,
    pub seed: u64,
    pub jobs: usize,
    pub dimension: Option<SweepDimension>,
    pub values: Vec<String>,
}

fn parse_image_size(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s.split_once('x').unwrap_or((s, s));
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in `{s}`"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in `{s}`"))?;
    if h == 0 || w == 0 {
        return Err(format!("image size `{s}` must be positive"));
    }
    Ok((h, w))
}

fn parse_strategy(s: &str) -> Result<CwtStrategy, String> {
    match s {
        "fft" => Ok(CwtStrategy::Fft),
        "direct" => Ok(CwtStrategy::Direct),
        other => Err(format!("unknown strategy `{other}` (fft|direct)")),
    }
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let bad = |key: &str, e: String| CliError::input(format!("--{}: {e}", flag_name(key)));
        let axes: Vec<Axis> = match s.one("axes") {
            Some(v) => parse_axis_set(v).map_err(|e| bad("axes", e))?,
            None => vec![Axis::X, Axis::Y, Axis::Z],
        };
        let wavelets: Vec<MotherWavelet> = match s.values.get("wavelet") {
            Some(ws) if !ws.is_empty() => ws
                .iter()
                .map(|w| w.parse::<MotherWavelet>().map_err(|e| bad("wavelet", e.to_string())))
                .collect::<Result<_, _>>()?,
            _ => vec![MotherWavelet::mexican_hat()],
        };
        let strategy = match s.one("strategy") {
            Some(v) => parse_strategy(v).map_err(|e| bad("strategy", e))?,
            None => CwtStrategy::Fft,
        };
        let normalization = s.parse::<Normalization>("normalization")?;
        let image_size = s
            .one("image_size")
            .map(|v| parse_image_size(v).map_err(|e| bad("image_size", e)))
            .transpose()?;
        let crop_width = s.parse::<usize>("crop_width")?.unwrap_or(128);
        let crop_stride = s.parse::<usize>("crop_stride")?.unwrap_or(0);
        let crop = (crop_width > 0).then_some(CropSpec {
            width: crop_width,
            stride: crop_stride,
        });
        let augment_stride = s.parse::<usize>("augment_stride")?;
        if augment_stride == Some(0) {
            return Err(bad("augment_stride", "must be positive".into()));
        }
        let pipeline = PipelineConfig {
            axes,
            wavelets,
            n_scales: s.parse("n_scales")?.unwrap_or(wavehar_core::transform::DEFAULT_N_SCALES),
            a0: s.parse("a0")?.unwrap_or(wavehar_core::transform::DEFAULT_A0),
            strategy,
            normalization,
            image_size,
            bands: s.parse("bands")?.unwrap_or(1),
            crop,
        };
        let model = match s.one("preset") {
            Some(v) => v.parse::<ModelConfig>().map_err(|e| bad("preset", e.to_string()))?,
            None => ModelConfig::default(),
        };
        let mut optimizer = match s.one("optimizer") {
            Some(v) => v.parse::<OptimizerKind>().map_err(|e| bad("optimizer", e.to_string()))?,
            None => OptimizerKind::default(),
        };
        if let Some(lr) = s.parse::<f64>("learning_rate")? {
            optimizer = optimizer.with_learning_rate(lr);
        }
        optimizer.validate().map_err(|e| bad("learning_rate", e.to_string()))?;
        let seed = s.parse::<u64>("seed")?.unwrap_or(0);
        let train = TrainConfig {
            epochs: s.parse("epochs")?.unwrap_or(20),
            batch_size: s.parse("batch_size")?.unwrap_or(32),
            optimizer,
            seed,
        };
        if train.batch_size == 0 {
            return Err(bad("batch_size", "must be positive".into()));
        }
        let train_fraction = s.parse::<f64>("train_fraction")?.unwrap_or(0.8);
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(bad("train_fraction", format!("{train_fraction} is outside (0, 1)")));
        }
        let dimension = s
            .one("dimension")
            .map(|v| v.parse::<SweepDimension>().map_err(|e| bad("dimension", e.to_string())))
            .transpose()?;
        let values = s
            .one("values")
            .map(|v| v.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
            .unwrap_or_default();
        Ok(Self {
            dataset: s.one("dataset").map(PathBuf::from),
            strict: s.flag("strict")?,
            tensors: s.one("tensors").map(PathBuf::from),
            input: s.one("input").map(PathBuf::from),
            checkpoint: s.one("checkpoint").map(PathBuf::from),
            out: s.one("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("wavehar-out")),
            png: s.flag("png")?,
            experiment: ExperimentConfig {
                pipeline,
                model,
                train,
                train_fraction,
                augment_stride,
            },
            seed,
            jobs: s.parse::<usize>("jobs")?.unwrap_or(1).max(1),
            dimension,
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmd() -> Command {
        attach(Command::new("t"))
    }

    #[test]
    fn keys_and_flags_are_bijective() {
        let c = cmd();
        let longs: Vec<String> = c
            .get_arguments()
            .filter(|a| a.get_id() != "config")
            .map(|a| a.get_long().unwrap().to_string())
            .collect();
        assert_eq!(longs.len(), KEYS.len());
        for k in KEYS {
            assert!(longs.contains(&flag_name(k.name)));
        }
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# comment\nepochs = 3\nbatch_size=7\nwavelet=mexh,paul:4\npng=true\n").unwrap();
        let m = cmd()
            .try_get_matches_from(["t", "--config", path.to_str().unwrap(), "--batch-size", "9"])
            .unwrap();
        let rc = RunConfig::from_settings(&Settings::from_matches(&m).unwrap()).unwrap();
        assert_eq!(rc.experiment.train.epochs, 3);
        assert_eq!(rc.experiment.train.batch_size, 9);
        assert_eq!(rc.experiment.pipeline.wavelets.len(), 2);
        assert!(rc.png);
    }

    #[test]
    fn unknown_file_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "epoch=3\n").unwrap();
        let m = cmd().try_get_matches_from(["t", "--config", path.to_str().unwrap()]).unwrap();
        let err = Settings::from_matches(&m).err().unwrap();
        assert!(err.message.contains("unknown key `epoch`"));
    }

    #[test]
    fn defaults() {
        let m = cmd().try_get_matches_from(["t"]).unwrap();
        let rc = RunConfig::from_settings(&Settings::from_matches(&m).unwrap()).unwrap();
        assert_eq!(rc.experiment.train.epochs, 20);
        assert_eq!(rc.experiment.pipeline.crop, Some(CropSpec { width: 128, stride: 0 }));
        assert_eq!(rc.experiment.model, ModelConfig::default());
        assert_eq!(rc.jobs, 1);
    }

    #[test]
    fn bad_values_are_input_errors() {
        for args in [
            vec!["t", "--epochs", "x"],
            vec!["t", "--axes", "q"],
            vec!["t", "--wavelet", "haar"],
            vec!["t", "--image-size", "0x4"],
            vec!["t", "--train-fraction", "1.5"],
            vec!["t", "--optimizer", "sgd", "--learning-rate", "-1"],
        ] {
            let m = cmd().try_get_matches_from(&args).unwrap();
            let r = Settings::from_matches(&m).and_then(|s| RunConfig::from_settings(&s));
            assert!(r.is_err(), "{args:?}");
        }
    }
}
