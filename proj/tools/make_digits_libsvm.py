#!/usr/bin/env python3
"""Writes the scikit-learn copy of the UCI optical digits data as data/digits.libsvm."""
import sys

from sklearn.datasets import load_digits


def main(path):
    digits = load_digits()
    with open(path, "w") as out:
        for row, label in zip(digits.data, digits.target):
            feats = " ".join(f"{i + 1}:{int(v)}" for i, v in enumerate(row) if v != 0)
            out.write(f"{int(label)} {feats}\n".replace("  ", " ").rstrip() + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/digits.libsvm")
