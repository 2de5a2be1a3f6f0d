"""Kernel-alignment losses of trigonometric hypotheses.

The global loss of a hypothesis ``h(delta) = cos(omega . delta)`` averages the
linear loss over all ordered pairs ``i != j`` of a sample. ``empirical_loss_naive``
evaluates that double sum directly and is kept as the reference for
``empirical_loss_fast``, which only needs per-class sums of ``cos(omega . x)`` and
``sin(omega . x)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pbrff.data import LabeledDataset
from pbrff.fourier import FrequencySet

# upper bound on the entries of one N x n projection block
_BLOCK = 1 << 22


@dataclass(frozen=True)
class LossVector:
    """One empirical loss per hypothesis, with the sample size it was computed on.

    ``landmark_in_sample`` is only meaningful for per-landmark losses: True when
    the landmark was a row of the sample and therefore excluded from the average.
    """

    losses: np.ndarray
    n_used: int
    landmark_in_sample: bool | None = None

    def __post_init__(self):
        L = np.ascontiguousarray(self.losses, dtype=np.float64)
        if L.ndim != 1 or L.size < 1:
            raise ValueError("losses must be a non-empty vector")
        if not np.all(np.isfinite(L)):
            raise ValueError("losses must be finite")
        L.setflags(write=False)
        object.__setattr__(self, "losses", L)

    @property
    def N(self) -> int:
        return self.losses.size

    def to_dict(self) -> dict:
        return {
            "n_used": self.n_used,
            "landmark_in_sample": self.landmark_in_sample,
            "losses": self.losses.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LossVector":
        return cls(np.asarray(d["losses"], dtype=np.float64), int(d["n_used"]), d.get("landmark_in_sample"))


def linear_loss(k_value, lam):
    """(1 - lam * k) / 2 for kernel values in [-1, 1]."""
    k = np.asarray(k_value, dtype=np.float64)
    if np.any(np.abs(k) > 1.0 + 1e-9):
        raise ValueError(f"kernel value outside [-1, 1]: {k_value}")
    out = 0.5 * (1.0 - np.asarray(lam, dtype=np.float64) * k)
    return float(out) if out.ndim == 0 else out


def _check(freqs: FrequencySet, ds: LabeledDataset) -> None:
    if ds.n < 2:
        raise ValueError(f"alignment loss needs n >= 2, got {ds.n}")
    if ds.d != freqs.d:
        raise ValueError(f"dataset dimension {ds.d} does not match frequencies ({freqs.d})")


def empirical_loss_naive(freqs: FrequencySet, ds: LabeledDataset) -> LossVector:
    """O(N n^2 d) evaluation over explicit pair differences."""
    _check(freqs, ds)
    X, y, n = ds.features, ds.labels, ds.n
    deltas = X[:, None, :] - X[None, :, :]
    lam = np.where(y[:, None] == y[None, :], 1.0, -1.0)
    off = ~np.eye(n, dtype=bool)
    out = np.empty(freqs.N)
    for m, omega in enumerate(freqs.omegas):
        h = np.cos(deltas @ omega)
        out[m] = np.sum(0.5 * (1.0 - lam * h)[off]) / (n * n - n)
    return LossVector(out, n)


def empirical_loss_fast(freqs: FrequencySet, ds: LabeledDataset) -> LossVector:
    """O(N n) evaluation from per-class trigonometric sums.

    With ``c_y = sum cos(omega . x)`` and ``s_y = sum sin(omega . x)`` over class y::

        loss = n / (2(n-1)) - [2 sum_y (c_y^2 + s_y^2) - (sum_y c_y)^2 - (sum_y s_y)^2] / (2n(n-1))
    """
    _check(freqs, ds)
    n = ds.n
    members = [np.flatnonzero(ds.labels == c) for c in range(ds.n_classes)]
    members = [rows for rows in members if rows.size]
    W = freqs.omegas
    step = max(1, _BLOCK // n)
    out = np.empty(freqs.N)
    for lo in range(0, freqs.N, step):
        Wb = W[lo : lo + step]
        cs = np.empty((len(members), Wb.shape[0]))
        ss = np.empty_like(cs)
        for k, rows in enumerate(members):
            # N x n_y layout: summing along the contiguous axis uses numpy's pairwise summation
            proj = Wb @ ds.features[rows].T
            cs[k] = np.cos(proj).sum(axis=1)
            ss[k] = np.sin(proj).sum(axis=1)
        same = 2.0 * np.sum(cs * cs + ss * ss, axis=0)
        total = cs.sum(axis=0) ** 2 + ss.sum(axis=0) ** 2
        out[lo : lo + step] = n / (2.0 * (n - 1)) - (same - total) / (2.0 * n * (n - 1))
    return LossVector(out, n)


def empirical_loss_binary(freqs: FrequencySet, ds: LabeledDataset) -> LossVector:
    """Two-class closed form with +-1 labels: n/(2(n-1)) - [(sum y cos)^2 + (sum y sin)^2] / (2n(n-1))."""
    _check(freqs, ds)
    n = ds.n
    ys = ds.signed_labels()
    proj = freqs.omegas @ ds.features.T
    c = np.cos(proj) @ ys
    s = np.sin(proj) @ ys
    return LossVector(n / (2.0 * (n - 1)) - (c * c + s * s) / (2.0 * n * (n - 1)), n)


def landmark_loss(freqs: FrequencySet, ds: LabeledDataset, landmark_x, landmark_y: int, index: int | None = None) -> LossVector:
    """Per-landmark loss: mean linear loss of ``cos(omega . (x_l - x_j))`` against ``lambda(y_l, y_j)``.

    ``index`` is the landmark's row in ``ds`` when it was drawn from it; that
    row is then left out of the average.
    """
    x_l = np.asarray(landmark_x, dtype=np.float64)
    if x_l.shape != (ds.d,) or freqs.d != ds.d:
        raise ValueError(f"landmark/frequency dimension does not match dataset dimension {ds.d}")
    keep = np.ones(ds.n, dtype=bool)
    if index is not None:
        keep[index] = False
    m = int(keep.sum())
    if m == 0:
        raise ValueError("no admissible samples for the landmark loss")
    deltas = x_l - ds.features[keep]
    lam = np.where(ds.labels[keep] == landmark_y, 1.0, -1.0)
    h = np.cos(freqs.omegas @ deltas.T)
    losses = 0.5 * (1.0 - h @ lam / m)
    return LossVector(losses, m, index is not None)


def alignment_objective(q, losses: LossVector) -> float:
    """Pairwise alignment ``sum_{i != j} lambda_ij k_Q(x_i - x_j)`` of the Q-averaged kernel.

    Linearity of the loss gives ``n(n-1) (1 - 2 sum_m Q_m L_m)``; this is the quantity
    maximized by divergence-constrained alignment methods.
    """
    w = np.asarray(getattr(q, "weights", q), dtype=np.float64)
    n = losses.n_used
    return float(n * (n - 1) * (1.0 - 2.0 * w @ losses.losses))
