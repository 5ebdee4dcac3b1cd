#!/usr/bin/env python3
"""Write the 5,000-sample MNIST excerpt shipped inside the mlxtend wheel as IDX files.

The excerpt is stored sorted by class, so it is shuffled with a fixed seed and
split into 4,000 training / 1,000 test items.

    pip download mlxtend --no-deps -d /tmp/mlx
    python3 tools/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/mnist5k
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path

import numpy as np

SEED = 20240601
TRAIN = 4000


def write_idx(path, array, dims):
    with open(path, "wb") as f:
        f.write(struct.pack(">I", 0x800 | len(dims)))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(array.astype(np.uint8).tobytes())


def main():
    wheel, out = sys.argv[1], Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    raw = zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")
    table = np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",")
    x = table[:, :-1].astype(np.uint8)
    y = table[:, -1].astype(np.uint8)
    order = np.random.default_rng(SEED).permutation(len(y))
    x, y = x[order], y[order]
    for name, sl in (("train", slice(0, TRAIN)), ("t10k", slice(TRAIN, None))):
        n = len(y[sl])
        write_idx(out / f"{name}-images-idx3-ubyte", x[sl], (n, 28, 28))
        write_idx(out / f"{name}-labels-idx1-ubyte", y[sl], (n,))


if __name__ == "__main__":
    main()
