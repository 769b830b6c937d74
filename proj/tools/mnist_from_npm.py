#!/usr/bin/env python3
"""Writes IDX image and label files from the digit arrays shipped in the
`mnist` npm package (about 1000 images per digit, pixels stored in [0, 1]).

    npm install --prefix /tmp/mnist-npm mnist
    python3 tools/mnist_from_npm.py /tmp/mnist-npm/node_modules/mnist data/mnist
"""

import argparse
import json
import random
import struct
from pathlib import Path

SIDE = 28


def load_digits(package: Path):
    images, labels = [], []
    for digit in range(10):
        raw = json.loads((package / "src" / "digits" / f"{digit}.json").read_text())["data"]
        count = len(raw) // (SIDE * SIDE)
        for k in range(count):
            chunk = raw[k * SIDE * SIDE:(k + 1) * SIDE * SIDE]
            images.append(bytes(min(255, max(0, round(v * 255))) for v in chunk))
            labels.append(digit)
    return images, labels


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("package", type=Path, help="directory of the installed mnist npm package")
    parser.add_argument("out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="shuffle seed (digits are interleaved)")
    args = parser.parse_args()

    images, labels = load_digits(args.package)
    order = list(range(len(images)))
    random.Random(args.seed).shuffle(order)

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "train-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(order), SIDE, SIDE))
        for i in order:
            f.write(images[i])
    with open(args.out / "train-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(order)))
        f.write(bytes(labels[i] for i in order))
    print(f"wrote {len(order)} images to {args.out}")


if __name__ == "__main__":
    main()
