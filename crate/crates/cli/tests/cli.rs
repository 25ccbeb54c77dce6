use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use wavehar_core::signal_io::save_dataset;
use wavehar_core::transform::RawTensor;
use wavehar_harness::{synthetic_dataset, SyntheticSpec};
use wavehar_nn::{load_checkpoint, Network};

const BIN: &str = env!("CARGO_BIN_EXE_wavehar");

// Small images keep the training tests quick.
const FAST: &[&str] = &["--image-size", "16x32", "--crop-width", "0"];

fn wavehar(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = wavehar(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn dataset(dir: &Path, per_class: usize) -> PathBuf {
    let ds = synthetic_dataset(&SyntheticSpec::two_class(per_class, 3)).unwrap();
    let path = dir.join("signals.csv");
    save_dataset(&ds, &path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn cwts_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cwts"))
        .collect();
    v.sort();
    v
}

fn history_rows(dir: &Path) -> usize {
    fs::read_to_string(dir.join("history.csv")).unwrap().lines().count() - 1
}

#[test]
fn transform_writes_one_tensor_per_sample() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 5);
    let out = tmp.path().join("t");
    ok(&["transform", "--dataset", s(&data), "--out", s(&out)]);
    let files = cwts_files(&out);
    assert_eq!(files.len(), 10);
    for f in &files {
        let raw = RawTensor::load(f).unwrap();
        assert_eq!(raw.n_channels, 3);
    }
    let index = fs::read_to_string(out.join("index.csv")).unwrap();
    assert_eq!(index.lines().count(), 11);
    assert!(index.lines().nth(1).unwrap().ends_with("x:mexh;y:mexh;z:mexh"));
}

#[test]
fn two_wavelets_double_the_channels() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 2);
    let out = tmp.path().join("t");
    ok(&[
        "transform", "--dataset", s(&data), "--out", s(&out), "--wavelet", "mexh", "--wavelet", "paul:4",
    ]);
    for f in cwts_files(&out) {
        assert_eq!(RawTensor::load(&f).unwrap().n_channels, 6);
    }
}

#[test]
fn transform_png_and_render() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 1);
    let out = tmp.path().join("t");
    ok(&["transform", "--dataset", s(&data), "--out", s(&out), "--png", "--axes", "xm"]);
    let pngs = fs::read_dir(out.join("png")).unwrap().count();
    assert_eq!(pngs, 2 * 2);
    let file = &cwts_files(&out)[0];
    let rendered = tmp.path().join("r");
    let listing = ok(&["render", "--input", s(file), "--out", s(&rendered)]);
    assert_eq!(listing.lines().count(), 2);
    assert!(listing.contains("_x_mexh.png"), "{listing}");
    assert!(listing.contains("_mag_mexh.png"), "{listing}");
}

#[test]
fn missing_dataset_exits_1_and_names_the_path() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("no_such_signals.csv");
    let out = wavehar(&["transform", "--dataset", s(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_signals.csv"));
}

#[test]
fn bad_values_and_unknown_subcommands_exit_1() {
    assert_eq!(wavehar(&["transform", "--wavelet", "haar"]).status.code(), Some(1));
    assert_eq!(wavehar(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(wavehar(&["train", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(wavehar(&["--help"]).status.code(), Some(0));
    assert_eq!(wavehar(&["--version"]).status.code(), Some(0));
}

#[test]
fn zero_epochs_checkpoint_is_the_initialization() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 4);
    let out = tmp.path().join("o");
    let mut args = vec!["train", "--dataset", s(&data), "--out", s(&out), "--epochs", "0", "--seed", "11"];
    args.extend_from_slice(FAST);
    ok(&args);
    assert_eq!(history_rows(&out), 0);
    let net = load_checkpoint(&out.join("model.shnn")).unwrap();
    let fresh = Network::<f32>::new(net.architecture().clone(), 11).unwrap();
    assert_eq!(net.params(), fresh.params());
}

#[test]
fn augment_stride_multiplies_training_samples() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 5);
    let out = tmp.path().join("o");
    // 151 columns, 64-wide crops every 8 columns: (151 - 64) / 8 + 1 = 11.
    ok(&[
        "train", "--dataset", s(&data), "--out", s(&out), "--epochs", "0", "--crop-width", "64", "--augment-stride", "8",
    ]);
    let metrics = fs::read_to_string(out.join("metrics.txt")).unwrap();
    let line = metrics.lines().next().unwrap();
    assert_eq!(line, "train samples: 88 (8 images)", "{metrics}");
    assert!(metrics.contains("test samples: 2\n"), "{metrics}");
}

#[test]
fn train_then_eval_separable_data() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 20);
    let tensors = tmp.path().join("t");
    let mut args = vec!["transform", "--dataset", s(&data), "--out", s(&tensors)];
    args.extend_from_slice(FAST);
    ok(&args);

    let out = tmp.path().join("o");
    let mut args = vec!["train", "--tensors", s(&tensors), "--out", s(&out), "--epochs", "8", "--batch-size", "8"];
    args.extend_from_slice(FAST);
    ok(&args);
    assert_eq!(history_rows(&out), 8);
    let confusion = fs::read_to_string(out.join("confusion.csv")).unwrap();
    assert_eq!(confusion.lines().count(), 3);

    let ev = tmp.path().join("e");
    let ckpt = out.join("model.shnn");
    let mut args = vec!["eval", "--tensors", s(&tensors), "--checkpoint", s(&ckpt), "--out", s(&ev)];
    args.extend_from_slice(FAST);
    let report = ok(&args);
    assert!(report.contains("accuracy:  1.000000"), "{report}");
    assert!(ev.join("eval_confusion.csv").exists());
}

#[test]
fn eval_with_missing_checkpoint_exits_1() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 1);
    let ckpt = tmp.path().join("absent.shnn");
    let out = wavehar(&["eval", "--dataset", s(&data), "--checkpoint", s(&ckpt)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.shnn"));
}

#[test]
fn divergence_exits_2() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 4);
    let mut args = vec![
        "train", "--dataset", s(&data), "--epochs", "3", "--optimizer", "sgd", "--learning-rate", "1e30",
    ];
    let out_dir = tmp.path().join("o");
    args.extend_from_slice(&["--out", s(&out_dir)]);
    args.extend_from_slice(FAST);
    let out = wavehar(&args);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 4);
    let out = tmp.path().join("s");
    let mut args = vec![
        "sweep", "--dataset", s(&data), "--out", s(&out), "--dimension", "dog_order", "--values", "1,2,3",
        "--epochs", "1", "--jobs", "2",
    ];
    args.extend_from_slice(FAST);
    let summary = ok(&args);
    assert!(summary.contains("best: dog_order = "), "{summary}");
    let csv = fs::read_to_string(out.join("sweep_dog_order.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let firsts: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(firsts, ["1", "2", "3"]);
}

#[test]
fn axes_sweep_accepts_every_axis_set() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 2);
    let out = tmp.path().join("s");
    let mut args = vec![
        "sweep", "--dataset", s(&data), "--out", s(&out), "--dimension", "axes", "--values",
        "x,y,z,mag,xyz,xyzm", "--epochs", "1",
    ];
    args.extend_from_slice(FAST);
    ok(&args);
    let csv = fs::read_to_string(out.join("sweep_axes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn demo_writes_nine_images_and_a_report() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("d");
    let report = ok(&["demo-fourier", "--out", s(&out)]);
    let pngs = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert_eq!(pngs, 9);
    assert!(report.starts_with("scalogram wavelet: mexh"));
    let ab = report.lines().find(|l| l.starts_with("a-b")).unwrap();
    let cosine: f64 = ab.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(cosine > 0.9);
    assert!(report.starts_with(&fs::read_to_string(out.join("report.txt")).unwrap()));

    let morlet = ok(&["demo-fourier", "--out", s(&tmp.path().join("m")), "--wavelet", "morlet"]);
    assert!(morlet.starts_with("scalogram wavelet: morlet"));
}

const FLAGS: &[&str] = &[
    "--config", "--dataset", "--strict", "--tensors", "--input", "--checkpoint", "--out", "--png", "--axes",
    "--wavelet", "--n-scales", "--a0", "--strategy", "--normalization", "--image-size", "--bands",
    "--crop-width", "--crop-stride", "--augment-stride", "--preset", "--epochs", "--batch-size",
    "--optimizer", "--learning-rate", "--seed", "--train-fraction", "--jobs", "--dimension", "--values",
];

#[test]
fn every_subcommand_help_lists_every_flag() {
    for cmd in ["ingest-check", "transform", "render", "train", "eval", "sweep", "demo-fourier"] {
        let help = ok(&[cmd, "--help"]);
        for flag in FLAGS {
            let listed = help.contains(&format!("{flag} ")) || help.contains(&format!("{flag}\n"));
            assert!(listed, "`{cmd} --help` lacks {flag}");
        }
        for flag in FLAGS.iter().filter(|f| **f != "--config") {
            let var = format!("WAVEHAR_{}", flag[2..].replace('-', "_").to_uppercase());
            assert!(help.contains(&var), "`{cmd} --help` lacks {var}");
        }
    }
}

#[test]
fn flags_beat_environment_beats_config_file() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 4);
    let conf = tmp.path().join("run.conf");
    let out = tmp.path().join("o");
    fs::write(
        &conf,
        format!(
            "# test run\ndataset={}\nout={}\nepochs=2\nimage_size=16x32\ncrop_width=0\n",
            s(&data),
            s(&out)
        ),
    )
    .unwrap();

    ok(&["train", "--config", s(&conf)]);
    assert_eq!(history_rows(&out), 2);

    let run = Command::new(BIN)
        .args(["train", "--config", s(&conf)])
        .env("WAVEHAR_EPOCHS", "1")
        .output()
        .unwrap();
    assert!(run.status.success());
    assert_eq!(history_rows(&out), 1);

    let run = Command::new(BIN)
        .args(["train", "--config", s(&conf), "--epochs", "3"])
        .env("WAVEHAR_EPOCHS", "1")
        .output()
        .unwrap();
    assert!(run.status.success());
    assert_eq!(history_rows(&out), 3);

    fs::write(&conf, "epochs=2\nlayers=3\n").unwrap();
    let bad = wavehar(&["train", "--config", s(&conf)]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("layers"));
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn repeated_runs_are_byte_identical_across_job_counts() {
    let tmp = TempDir::new().unwrap();
    let data = dataset(tmp.path(), 6);
    let mut outs = Vec::new();
    for (i, jobs) in ["1", "3"].iter().enumerate() {
        let t = tmp.path().join(format!("t{i}"));
        let o = tmp.path().join(format!("o{i}"));
        let mut args = vec!["transform", "--dataset", s(&data), "--out", s(&t), "--jobs", jobs];
        args.extend_from_slice(FAST);
        ok(&args);
        let mut args = vec![
            "train", "--tensors", s(&t), "--out", s(&o), "--epochs", "2", "--seed", "5", "--jobs", jobs,
        ];
        args.extend_from_slice(FAST);
        ok(&args);
        outs.push((dir_bytes(&t), dir_bytes(&o)));
    }
    assert_eq!(outs[0], outs[1]);
}
