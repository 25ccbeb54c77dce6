use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use wavehar_core::image::{export_png, ImageTensor, Provenance};
use wavehar_core::signal_io::{energy, load_dataset, split_indices, Axis, Dataset, SplitSpec};
use wavehar_core::transform::RawTensor;
use wavehar_harness::demo::write_demo;
use wavehar_harness::eval::{confusion_csv, evaluate, metrics_text};
use wavehar_harness::pipeline::{crops, scalogram_image, shape_image, to_sample};
use wavehar_harness::{run_sweep, SweepSpec};
use wavehar_nn::{load_checkpoint, save_checkpoint, train, Network, Sample};

use crate::config::RunConfig;
use crate::CliError;

type CliResult<T = ()> = Result<T, CliError>;

// Stdout writes ignore errors so a closed pipe (`| head`) is not a panic.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

fn require<'a>(v: &'a Option<PathBuf>, flag: &str, cmd: &str) -> CliResult<&'a PathBuf> {
    v.as_ref()
        .ok_or_else(|| CliError::input(format!("`{cmd}` needs --{flag}")))
}

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))
}

fn load(rc: &RunConfig, cmd: &str) -> CliResult<Dataset> {
    let path = require(&rc.dataset, "dataset", cmd)?;
    if !path.is_file() {
        return Err(CliError::input(format!("dataset {} does not exist", path.display())));
    }
    Ok(load_dataset(path, rc.strict)?)
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

pub fn ingest_check(rc: &RunConfig) -> CliResult {
    let ds = load(rc, "ingest-check")?;
    let mut out = String::new();
    writeln!(out, "samples: {}", ds.len()).unwrap();
    if let Some(first) = ds.samples().first() {
        let rate = first.axes().values().next().map_or(0.0, |s| s.sample_rate_hz());
        writeln!(out, "window: {} samples at {} Hz", first.window_len(), rate).unwrap();
    }
    let incomplete = ds.samples().iter().filter(|s| !s.is_complete()).count();
    writeln!(out, "incomplete samples (missing x, y or z): {incomplete}").unwrap();
    writeln!(out, "classes: {}", ds.n_classes()).unwrap();
    for (name, count) in ds.class_names().iter().zip(ds.class_counts()) {
        writeln!(out, "  {name}: {count}").unwrap();
    }
    for axis in Axis::ALL {
        let energies: Vec<f64> = ds.samples().iter().filter_map(|s| s.axis(axis)).map(energy).collect();
        if !energies.is_empty() {
            let mean = energies.iter().sum::<f64>() / energies.len() as f64;
            writeln!(out, "axis {axis}: {} windows, mean energy {mean:.6}", energies.len()).unwrap();
        }
    }
    out!("{out}");
    Ok(())
}

struct Item {
    id: String,
    image: ImageTensor,
}

fn images_from_dataset(ds: &Dataset, rc: &RunConfig) -> CliResult<Vec<Item>> {
    let cfg = &rc.experiment.pipeline;
    ds.samples()
        .par_iter()
        .map(|s| {
            let img = shape_image(&scalogram_image(s, cfg)?, cfg)?;
            Ok(Item {
                id: s.id().to_string(),
                image: img,
            })
        })
        .collect::<Result<_, wavehar_harness::HarnessError>>()
        .map_err(Into::into)
}

fn index_entries(dir: &Path) -> CliResult<Vec<(String, usize, String, String)>> {
    let path = dir.join("index.csv");
    let text = fs::read_to_string(&path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || CliError::input(format!("{}:{}: malformed index row", path.display(), i + 1));
        if f.len() != 4 {
            return Err(bad());
        }
        let label = f[1].parse().map_err(|_| bad())?;
        out.push((f[0].to_string(), label, f[2].to_string(), f[3].to_string()));
    }
    Ok(out)
}

fn provenance_from_tags(tags: &str) -> Vec<Provenance> {
    tags.split(';')
        .map(|t| {
            let (a, w) = t.split_once(':').unwrap_or((t, ""));
            Provenance::new(a, w)
        })
        .collect()
}

fn images_from_tensors(dir: &Path) -> CliResult<(Vec<Item>, Vec<String>)> {
    let classes_path = dir.join("classes.txt");
    let classes: Vec<String> = fs::read_to_string(&classes_path)
        .map_err(|e| CliError::input(format!("{}: {e}", classes_path.display())))?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect();
    let items = index_entries(dir)?
        .into_iter()
        .map(|(id, label, file, tags)| {
            let path = dir.join(&file);
            let raw = RawTensor::load(&path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            let prov = provenance_from_tags(&tags);
            let prov = (prov.len() == raw.n_channels).then_some(prov);
            let image = ImageTensor::from_raw(&raw, prov.as_deref())?.with_label(Some(label));
            Ok(Item { id, image })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((items, classes))
}

/// Images and class names from `--tensors` if given, else from `--dataset`.
fn load_images(rc: &RunConfig, cmd: &str) -> CliResult<(Vec<Item>, Vec<String>)> {
    match &rc.tensors {
        Some(dir) => images_from_tensors(dir),
        None => {
            let ds = load(rc, cmd)?;
            Ok((images_from_dataset(&ds, rc)?, ds.class_names().to_vec()))
        }
    }
}

fn to_samples(items: &[&Item], rc: &RunConfig, augment: Option<usize>) -> CliResult<Vec<Sample>> {
    let mut out = Vec::new();
    for it in items {
        for c in crops(&it.image, &rc.experiment.pipeline, augment)? {
            out.push(to_sample(&c)?);
        }
    }
    Ok(out)
}

pub fn transform(rc: &RunConfig) -> CliResult {
    let ds = load(rc, "transform")?;
    create_dir(&rc.out)?;
    let items = images_from_dataset(&ds, rc)?;
    if items.is_empty() {
        return Err(CliError::input("dataset has no samples".into()));
    }
    let png_dir = rc.out.join("png");
    if rc.png {
        create_dir(&png_dir)?;
    }
    let mut index = String::from("id,label,file,channels\n");
    for it in &items {
        let stem = file_stem(&it.id);
        let file = format!("{stem}.cwts");
        let path = rc.out.join(&file);
        it.image
            .to_raw()
            .save(&path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if rc.png {
            export_png(&it.image, &png_dir, &stem)?;
        }
        let tags: Vec<String> = it
            .image
            .channels()
            .iter()
            .map(|c| format!("{}:{}", c.provenance().axis, c.provenance().wavelet))
            .collect();
        writeln!(index, "{},{},{file},{}", it.id, it.image.label().unwrap_or(0), tags.join(";")).unwrap();
    }
    write(&rc.out.join("index.csv"), &index)?;
    write(&rc.out.join("classes.txt"), &(ds.class_names().join("\n") + "\n"))?;
    let first = &items[0].image;
    outln!(
        "wrote {} tensors of {}x{}x{} to {}",
        items.len(),
        first.n_channels(),
        first.height(),
        first.width(),
        rc.out.display()
    );
    Ok(())
}

pub fn render(rc: &RunConfig) -> CliResult {
    let input = require(&rc.input, "input", "render")?;
    let raw = RawTensor::load(input).map_err(|e| CliError::input(format!("{}: {e}", input.display())))?;
    let file_name = input.file_name().and_then(|f| f.to_str()).unwrap_or("");
    let prov = input
        .parent()
        .and_then(|d| index_entries(d).ok())
        .and_then(|rows| rows.into_iter().find(|r| r.2 == file_name))
        .map(|r| provenance_from_tags(&r.3))
        .filter(|p| p.len() == raw.n_channels);
    let img = ImageTensor::from_raw(&raw, prov.as_deref())?;
    create_dir(&rc.out)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("tensor");
    let files = export_png(&img, &rc.out, stem)?;
    for f in &files {
        outln!("{}", f.display());
    }
    Ok(())
}

fn history_csv(h: &wavehar_nn::History) -> String {
    let mut out = String::from("epoch,train_loss,test_loss,accuracy,precision,recall\n");
    for e in &h.epochs {
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            e.epoch, e.train_loss, e.test_loss, e.accuracy, e.precision, e.recall
        )
        .unwrap();
    }
    out
}

pub fn train_cmd(rc: &RunConfig) -> CliResult {
    let (items, classes) = load_images(rc, "train")?;
    if items.is_empty() {
        return Err(CliError::input("no samples to train on".into()));
    }
    let (tr_idx, te_idx) = split_indices(
        items.len(),
        SplitSpec {
            train_fraction: rc.experiment.train_fraction,
            seed: rc.seed,
        },
    )?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| &items[i]).collect::<Vec<_>>();
    let train_samples = to_samples(&pick(&tr_idx), rc, rc.experiment.augment_stride)?;
    let test_samples = to_samples(&pick(&te_idx), rc, None)?;
    let input = train_samples[0].input.shape();
    let arch = rc.experiment.model.build(input, classes.len())?;
    log::info!("architecture: {arch}");
    let mut net = Network::<f32>::new(arch, rc.seed)?;
    let cfg = wavehar_nn::TrainConfig {
        seed: rc.seed.wrapping_add(1),
        ..rc.experiment.train
    };
    let history = train(&mut net, &train_samples, &test_samples, &cfg)?;
    create_dir(&rc.out)?;
    let ckpt = rc.checkpoint.clone().unwrap_or_else(|| rc.out.join("model.shnn"));
    save_checkpoint(&net, &ckpt).map_err(|e| CliError::input(format!("{}: {e}", ckpt.display())))?;
    write(&rc.out.join("history.csv"), &history_csv(&history))?;
    let report = evaluate(&net, &test_samples)?;
    let mut text = format!(
        "train samples: {} ({} images)\ntest samples: {}\n",
        train_samples.len(),
        tr_idx.len(),
        test_samples.len()
    );
    text.push_str(&metrics_text(&report, test_samples.len()));
    write(&rc.out.join("metrics.txt"), &text)?;
    write(&rc.out.join("confusion.csv"), &confusion_csv(&report.confusion, &classes))?;
    out!("{text}");
    outln!("checkpoint: {}", ckpt.display());
    Ok(())
}

pub fn eval_cmd(rc: &RunConfig) -> CliResult {
    let ckpt = require(&rc.checkpoint, "checkpoint", "eval")?;
    if !ckpt.exists() {
        return Err(CliError::input(format!("checkpoint {} does not exist", ckpt.display())));
    }
    let net = load_checkpoint(ckpt).map_err(|e| CliError::input(format!("{}: {e}", ckpt.display())))?;
    let (items, classes) = load_images(rc, "eval")?;
    let samples = to_samples(&items.iter().collect::<Vec<_>>(), rc, None)?;
    let report = evaluate(&net, &samples)?;
    create_dir(&rc.out)?;
    let text = metrics_text(&report, samples.len());
    write(&rc.out.join("eval_metrics.txt"), &text)?;
    write(&rc.out.join("eval_confusion.csv"), &confusion_csv(&report.confusion, &classes))?;
    out!("{text}");
    Ok(())
}

pub fn sweep_cmd(rc: &RunConfig) -> CliResult {
    let dimension = rc
        .dimension
        .ok_or_else(|| CliError::input("`sweep` needs --dimension".into()))?;
    let ds = load(rc, "sweep")?;
    let spec = SweepSpec {
        dimension,
        values: rc.values.clone(),
        base: rc.experiment.clone(),
        master_seed: rc.seed,
    };
    let report = run_sweep(&spec, &ds, rc.jobs)?;
    create_dir(&rc.out)?;
    write(&rc.out.join(format!("sweep_{dimension}.csv")), &report.to_csv())?;
    let summary = report.summary();
    write(&rc.out.join(format!("sweep_{dimension}.txt")), &summary)?;
    out!("{summary}");
    Ok(())
}

pub fn demo_fourier(rc: &RunConfig) -> CliResult {
    let wavelet = rc.experiment.pipeline.wavelets[0];
    let (report, files) = write_demo(&rc.out, &wavelet)?;
    let text = report.to_text();
    write(&rc.out.join("report.txt"), &text)?;
    out!("{text}");
    outln!("wrote {} images to {}", files.len(), rc.out.display());
    Ok(())
}
