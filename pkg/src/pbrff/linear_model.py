"""Binary linear SVM.

The default trainer runs primal stochastic subgradient steps (Pegasos). A dual
coordinate-descent trainer solves the same problem and converges much faster
for large C; both learn the bias as the weight of a constant input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from pbrff.fourier import make_rng


@dataclass(frozen=True)
class LinearClassifier:
    weights: np.ndarray
    bias: float
    C: float
    classes: tuple = (-1, 1)
    objective_trace: tuple = field(default=(), compare=False)

    @property
    def feature_dim(self) -> int:
        return self.weights.size

    def decision_function(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        if X.shape[-1] != self.feature_dim:
            raise ValueError(f"expected {self.feature_dim} features, got {X.shape[-1]}")
        return X @ self.weights + self.bias

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(
                {
                    "weights": self.weights.tolist(),
                    "bias": self.bias,
                    "C": self.C,
                    "feature_dim": self.feature_dim,
                }
            )
        )

    @classmethod
    def load(cls, path) -> "LinearClassifier":
        d = json.loads(Path(path).read_text())
        w = np.asarray(d["weights"], dtype=np.float64)
        if w.size != d["feature_dim"]:
            raise ValueError(f"{path}: weight length {w.size} != feature_dim {d['feature_dim']}")
        return cls(w, float(d["bias"]), float(d["C"]))


def hinge_objective(w, b, X, y, C) -> float:
    """(1/2)||w||^2 + C sum max(0, 1 - y (w.x + b))."""
    margins = 1.0 - y * (X @ w + b)
    return float(0.5 * w @ w + C * np.sum(np.maximum(margins, 0.0)))


@numba.njit(cache=True)
def _pegasos_epoch(X, y, order, w, w_avg, t0, lam, radius):
    # w[:-1] are the weights, w[-1] the bias (constant input 1); w_avg is the running mean of iterates
    d = X.shape[1]
    t = t0
    for i in order:
        t += 1
        eta = 1.0 / (lam * t)
        margin = w[d]
        for j in range(d):
            margin += w[j] * X[i, j]
        margin *= y[i]
        shrink = 1.0 - 1.0 / t
        for j in range(d + 1):
            w[j] *= shrink
        if margin < 1.0:
            g = eta * y[i]
            for j in range(d):
                w[j] += g * X[i, j]
            w[d] += g
        norm2 = 0.0
        for j in range(d + 1):
            norm2 += w[j] * w[j]
        if norm2 > radius * radius:
            scale = radius / np.sqrt(norm2)
            for j in range(d + 1):
                w[j] *= scale
        a = 1.0 / t
        for j in range(d + 1):
            w_avg[j] += a * (w[j] - w_avg[j])
    return t


@numba.njit(cache=True)
def _dcd_epoch(X, y, order, w, alpha, qdiag, C):
    # one sweep of dual coordinate descent for the hinge-loss SVM; returns the projected-gradient spread
    d = X.shape[1]
    pg_max = -np.inf
    pg_min = np.inf
    for i in order:
        g = w[d]
        for j in range(d):
            g += w[j] * X[i, j]
        g = y[i] * g - 1.0
        pg = g
        if alpha[i] <= 0.0:
            pg = min(g, 0.0)
        elif alpha[i] >= C:
            pg = max(g, 0.0)
        pg_max = max(pg_max, pg)
        pg_min = min(pg_min, pg)
        if pg != 0.0:
            new = min(max(alpha[i] - g / qdiag[i], 0.0), C)
            delta = (new - alpha[i]) * y[i]
            alpha[i] = new
            for j in range(d):
                w[j] += delta * X[i, j]
            w[d] += delta
    return pg_max - pg_min


def _train_pegasos(X, y, C, epochs, rng):
    n, d = X.shape
    lam = 1.0 / (C * n)
    radius = 1.0 / np.sqrt(lam)
    w = np.zeros(d + 1)
    w_avg = np.zeros(d + 1)
    t = 0
    for _ in range(epochs):
        t = _pegasos_epoch(X, y, rng.permutation(n), w, w_avg, t, lam, radius)
        yield w_avg


def _train_dcd(X, y, C, epochs, rng, tol=1e-3, alpha=None):
    n, d = X.shape
    if alpha is None:
        alpha = np.zeros(n)
    w = np.append((alpha * y) @ X, np.sum(alpha * y))
    qdiag = np.einsum("ij,ij->i", X, X) + 1.0
    for _ in range(epochs):
        gap = _dcd_epoch(X, y, rng.permutation(n), w, alpha, qdiag, C)
        yield w
        if gap < tol:
            break
    return alpha


SOLVERS = {"pegasos": _train_pegasos, "dcd": _train_dcd}


def train_linear_svm(
    features, labels, C: float = 1.0, epochs: int = 30, seed: int = 0, solver: str = "pegasos"
) -> LinearClassifier:
    """Approximately minimize ``(1/2)||w||^2 + C sum hinge(y (w.x + b))``.

    ``solver="pegasos"`` runs Pegasos with regularization ``1 / (C n)`` and
    checkpoints the averaged iterate; ``solver="dcd"`` runs dual coordinate
    descent and checkpoints the primal iterate. Checkpoints are taken once per
    epoch and the one with the lowest objective so far is kept, so
    ``objective_trace`` never increases.
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"features {X.shape} and labels {y.shape} do not line up")
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("labels must be -1/+1")
    if X.shape[0] < 2 or np.unique(y).size < 2:
        raise ValueError("need at least two examples from both classes")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")

    return _fit(X, y, C, SOLVERS[solver](X, y, C, epochs, make_rng(seed)))[0]


def _fit(X, y, C, candidates):
    # consumes a solver's per-epoch iterates; returns (classifier, solver's final state)
    d = X.shape[1]
    best_obj, best = np.inf, np.zeros(d + 1)
    trace = []
    while True:
        try:
            cand = next(candidates)
        except StopIteration as stop:
            state = stop.value
            break
        obj = hinge_objective(cand[:d], cand[d], X, y, C)
        if obj < best_obj:
            best_obj, best = obj, cand.copy()
        trace.append(best_obj)
    clf = LinearClassifier(best[:d], float(best[d]), float(C), objective_trace=tuple(trace))
    return clf, state


def train_svm_path(features, labels, C_grid, epochs: int = 1000, seed: int = 0) -> list[LinearClassifier]:
    """Dual coordinate descent over increasing C, warm-starting each fit from the previous dual point.

    A dual point feasible for C stays feasible for any larger C. Classifiers are
    returned in the order of ``C_grid``.
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.shape[0] < 2 or np.unique(y).size < 2:
        raise ValueError("need at least two examples from both classes")
    order = np.argsort(C_grid, kind="stable")
    rng = make_rng(seed)
    alpha = None
    out = [None] * len(C_grid)
    for k in order:
        C = float(C_grid[k])
        out[k], alpha = _fit(X, y, C, _train_dcd(X, y, C, epochs, rng, alpha=alpha))
    return out


def predict(clf: LinearClassifier, features) -> np.ndarray:
    """Sign of the decision function, with 0 mapped to +1."""
    return np.where(clf.decision_function(features) >= 0.0, 1, -1)


def error_rate(clf: LinearClassifier, features, labels) -> float:
    labels = np.asarray(labels)
    return float(np.mean(predict(clf, features) != labels))
