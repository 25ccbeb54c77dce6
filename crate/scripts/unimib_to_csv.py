#!/usr/bin/env python3
"""Convert the UniMiB SHAR MATLAB files to a wavehar signals CSV.

usage: unimib_to_csv.py DATA_DIR OUT_CSV [--split adl|fall|two_classes|full]

DATA_DIR holds <split>_data.mat, <split>_labels.mat and optionally
<split>_names.mat. Needs scipy.
"""
import argparse
import pathlib

from scipy.io import loadmat

WINDOW = 151
RATE_HZ = 50


def main():
    p = argparse.ArgumentParser()
    p.add_argument("data_dir", type=pathlib.Path)
    p.add_argument("out_csv", type=pathlib.Path)
    p.add_argument("--split", default="acc", help="file prefix, default acc")
    args = p.parse_args()

    data = loadmat(args.data_dir / f"{args.split}_data.mat")[f"{args.split}_data"]
    labels = loadmat(args.data_dir / f"{args.split}_labels.mat")[f"{args.split}_labels"][:, 0].astype(int)
    n_classes = int(labels.max())
    names_path = args.data_dir / f"{args.split}_names.mat"
    if names_path.exists():
        raw = loadmat(names_path)[f"{args.split}_names"]
        names = [str(raw[0, i][0]) for i in range(raw.shape[1])][:n_classes]
    else:
        names = [f"class{i + 1}" for i in range(n_classes)]

    header = ",".join(["id", "label", "axis"] + [f"s{i}" for i in range(WINDOW)])
    with open(args.out_csv, "w") as f:
        f.write(header + "\n")
        for row, (window, label) in enumerate(zip(data, labels)):
            for k, axis in enumerate("xyz"):
                values = ",".join(repr(float(v)) for v in window[k * WINDOW:(k + 1) * WINDOW])
                f.write(f"u{row:05d},{label - 1},{axis},{values}\n")
    meta = args.out_csv.with_name(args.out_csv.name + ".meta")
    meta.write_text(f"sample_rate_hz={RATE_HZ}\nwindow_len={WINDOW}\nclass_names={';'.join(names)}\n")
    print(f"wrote {len(labels)} windows, {n_classes} classes to {args.out_csv}")


if __name__ == "__main__":
    main()
