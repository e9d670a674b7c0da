#!/usr/bin/env python3
"""Write IDX files from the 5000-sample MNIST subset bundled with mlxtend.

The subset holds 500 images per digit, all taken from the MNIST training
split. Per digit, the first 400 go to the train files and the last 100 to
the test files, so the two splits are disjoint.

    pip download --no-deps -d /tmp/wheels mlxtend
    python3 tools/mnist_subset_to_idx.py /tmp/wheels/mlxtend-*.whl data/mnist
"""
import argparse
import gzip
import io
import pathlib
import struct
import zipfile

import numpy as np

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("wheel")
    parser.add_argument("out_dir")
    parser.add_argument("--train-per-digit", type=int, default=400)
    args = parser.parse_args()

    raw = gzip.decompress(zipfile.ZipFile(args.wheel).read(MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    images, digits = table[:, :-1], table[:, -1]

    train_idx, test_idx = [], []
    for d in range(10):
        idx = np.flatnonzero(digits == d)
        train_idx.extend(idx[: args.train_per_digit])
        test_idx.extend(idx[args.train_per_digit:])
    train_idx.sort()
    test_idx.sort()

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", images[train_idx])
    write_labels(out / "train-labels-idx1-ubyte", digits[train_idx])
    write_images(out / "t10k-images-idx3-ubyte", images[test_idx])
    write_labels(out / "t10k-labels-idx1-ubyte", digits[test_idx])
    print(f"train {len(train_idx)}, test {len(test_idx)} -> {out}")


if __name__ == "__main__":
    main()
