#!/usr/bin/env python3
"""Convert the digit JSON files of the npm `mnist` package to IDX files.

The package ships about 10,000 MNIST digits as per-class JSON arrays of
784 floats in [0, 1]. This script shuffles them with a fixed seed and
writes the standard IDX file names so the `leea` tool can load them:

    train-images-idx3-ubyte / train-labels-idx1-ubyte   (first --train examples)
    t10k-images-idx3-ubyte  / t10k-labels-idx1-ubyte    (the rest)

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/npm_mnist_to_idx.py package/src/digits data/mnist-npm
"""

import argparse
import json
import pathlib
import random
import struct


def write_idx(directory, prefix, examples):
    images = bytearray(struct.pack(">IIII", 0x803, len(examples), 28, 28))
    labels = bytearray(struct.pack(">II", 0x801, len(examples)))
    for pixels, label in examples:
        images.extend(min(255, max(0, round(v * 255))) for v in pixels)
        labels.append(label)
    (directory / f"{prefix}-images-idx3-ubyte").write_bytes(images)
    (directory / f"{prefix}-labels-idx1-ubyte").write_bytes(labels)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("digits_dir", type=pathlib.Path, help="directory with 0.json .. 9.json")
    parser.add_argument("out_dir", type=pathlib.Path)
    parser.add_argument("--train", type=int, default=8000, help="examples in the train files")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    examples = []
    for label in range(10):
        flat = json.loads((args.digits_dir / f"{label}.json").read_text())["data"]
        if len(flat) % 784:
            raise SystemExit(f"{label}.json: length {len(flat)} is not a multiple of 784")
        examples.extend((flat[i:i + 784], label) for i in range(0, len(flat), 784))

    random.Random(args.seed).shuffle(examples)
    if not 0 < args.train <= len(examples):
        raise SystemExit(f"--train must be in 1..{len(examples)}")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx(args.out_dir, "train", examples[:args.train])
    write_idx(args.out_dir, "t10k", examples[args.train:])
    print(f"wrote {args.train} train and {len(examples) - args.train} test examples to {args.out_dir}")


if __name__ == "__main__":
    main()
