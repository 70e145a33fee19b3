#!/usr/bin/env python3
"""Write a small MNIST IDX image file from the 5000-digit CSV bundled with mlxtend.

Usage: make_mnist_fixture.py <mnist_5k.csv.gz> <out.idx3-ubyte> [per_digit]

Takes the first `per_digit` images of each class 0..9 (default 2), ordered by
class, and writes them in the standard IDX3 container (magic 0x00000803).
"""
import gzip
import struct
import sys


def main():
    src, dst = sys.argv[1], sys.argv[2]
    per_digit = int(sys.argv[3]) if len(sys.argv) > 3 else 2
    picked = {d: [] for d in range(10)}
    with gzip.open(src, "rt") as fh:
        for line in fh:
            vals = [int(float(v)) for v in line.strip().split(",")]
            pixels, label = vals[:-1], vals[-1]
            if len(picked[label]) < per_digit:
                picked[label].append(pixels)
    images = [img for d in range(10) for img in picked[d]]
    with open(dst, "wb") as out:
        out.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            out.write(bytes(img))


if __name__ == "__main__":
    main()
