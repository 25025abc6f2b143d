#!/usr/bin/env python3
"""Rebuilds the bundled datasets from their npm distributions.

  boston-housing-dataset@0.0.1  (MIT)  -> boston_housing.csv
  mnist@1.1.0                   (MIT)  -> mnist5k-{train,test}-{images,labels}.idx

Usage: prepare_datasets.py <boston data.json> <mnist src/digits dir> <out dir>
"""
import json
import random
import struct
import sys
from pathlib import Path

COLUMNS = ["crim", "zn", "indus", "chas", "nox", "rm", "age", "dis", "rad",
           "tax", "ptratio", "b", "lstat", "medv"]
PER_CLASS_TRAIN = 500


def write_boston(src, out):
    rows = json.loads(Path(src).read_text())
    with open(out, "w") as f:
        f.write(",".join(COLUMNS) + "\n")
        for r in rows:
            f.write(",".join(repr(r[c]) for c in COLUMNS) + "\n")


def write_idx(samples, images_path, labels_path):
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(samples), 28, 28))
        for pixels, _ in samples:
            f.write(bytes(pixels))
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(samples)))
        f.write(bytes(label for _, label in samples))


def write_mnist(digits_dir, out_dir):
    train, test = [], []
    for digit in range(10):
        raw = json.loads((Path(digits_dir) / f"{digit}.json").read_text())["data"]
        count = len(raw) // 784
        for i in range(count):
            pixels = [min(255, max(0, round(v * 255))) for v in raw[i * 784:(i + 1) * 784]]
            (train if i < PER_CLASS_TRAIN else test).append((pixels, digit))
    rng = random.Random(20210101)
    rng.shuffle(train)
    rng.shuffle(test)
    write_idx(train, out_dir / "mnist5k-train-images.idx", out_dir / "mnist5k-train-labels.idx")
    write_idx(test, out_dir / "mnist5k-test-images.idx", out_dir / "mnist5k-test-labels.idx")
    print(f"mnist: {len(train)} train, {len(test)} test")


if __name__ == "__main__":
    boston, digits, out = sys.argv[1], sys.argv[2], Path(sys.argv[3])
    write_boston(boston, out / "boston_housing.csv")
    write_mnist(digits, out)
