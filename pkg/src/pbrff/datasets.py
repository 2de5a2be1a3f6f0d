"""Synthetic datasets for the experiments, and an export of the bundled breast-cancer data."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from pbrff.data import LabeledDataset
from pbrff.fourier import make_rng

def make_checkerboard(n: int, seed: int, cells: int = 3, spread: float = 0.12) -> LabeledDataset:
    """Points jittered around the centres of a ``cells x cells`` board; the class is the square's colour.

    The two classes interleave, so a linear classifier does little better than the
    majority colour. Inputs are centred on the origin, one unit per square.
    """
    rng = make_rng(seed)
    cell = rng.integers(0, cells, size=(n, 2))
    X = cell + 0.5 + spread * rng.standard_normal((n, 2)) - cells / 2.0
    return LabeledDataset(X, (cell.sum(axis=1) % 2).astype(np.int64), 2, name=f"checkerboard{cells}")


def make_radial(n: int, seed: int, d: int = 5) -> LabeledDataset:
    """Standard normal inputs labelled by whether they leave the ball of median radius.

    The squared radius threshold is the Wilson-Hilferty approximation of the
    chi-square median, so classes are close to balanced.
    """
    rng = make_rng(seed)
    X = rng.standard_normal((n, d))
    thresh = d * (1.0 - 2.0 / (9.0 * d)) ** 3
    return LabeledDataset(X, (np.sum(X * X, axis=1) > thresh).astype(np.int64), 2, name=f"radial{d}")


def write_breast_cancer_csv(path) -> Path:
    """Write scikit-learn's copy of the Wisconsin diagnostic breast-cancer data (569 x 30) as CSV.

    The file has a header row and the label in the last column (0 malignant, 1 benign).
    """
    from sklearn.datasets import load_breast_cancer

    data = load_breast_cancer()
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([c.replace(" ", "_") for c in data.feature_names] + ["label"])
        for x, y in zip(data.data, data.target):
            w.writerow([repr(float(v)) for v in x] + [int(y)])
    return path
