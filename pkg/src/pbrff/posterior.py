"""Closed-form pseudo-posteriors over a finite set of sampled frequencies."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from pbrff.alignment import LossVector
from pbrff.fourier import FrequencySet, make_rng


@dataclass(frozen=True)
class PseudoPosterior:
    """Gibbs reweighting ``Q_m = exp(-beta sqrt(n) L_m) / Z`` of a uniform prior.

    ``log_Z`` is the log of ``sum_m exp(-beta sqrt(n) L_m)``.
    """

    weights: np.ndarray
    beta: float
    n: int
    log_Z: float
    losses: LossVector | None = None

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def N(self) -> int:
        return self.weights.size

    @property
    def t(self) -> float:
        """Temperature of the Gibbs exponent, beta * sqrt(n)."""
        return self.beta * math.sqrt(self.n)

    def expected_loss(self) -> float:
        """Posterior-averaged empirical loss (the loss of the averaged kernel, by linearity)."""
        if self.losses is None:
            raise ValueError("posterior carries no losses")
        return float(self.weights @ self.losses.losses)

    def to_dict(self) -> dict:
        return {"beta": self.beta, "n": self.n, "log_Z": self.log_Z, "weights": self.weights.tolist()}

    def save(self, path) -> None:
        d = self.to_dict()
        if self.losses is not None:
            d["losses"] = self.losses.to_dict()
        Path(path).write_text(json.dumps(d))

    @classmethod
    def load(cls, path) -> "PseudoPosterior":
        d = json.loads(Path(path).read_text())
        losses = LossVector.from_dict(d["losses"]) if "losses" in d else None
        return cls(np.asarray(d["weights"]), float(d["beta"]), int(d["n"]), float(d["log_Z"]), losses)


def compute_posterior(losses: LossVector, beta: float, n: int | None = None) -> PseudoPosterior:
    """Softmax of ``-beta sqrt(n) losses`` with the max-shift trick.

    ``n`` defaults to the sample size the losses were computed on.
    """
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    n = losses.n_used if n is None else n
    t = beta * math.sqrt(n)
    logits = -t * losses.losses
    shift = logits.max()
    e = np.exp(logits - shift)
    total = e.sum()
    return PseudoPosterior(e / total, float(beta), int(n), float(shift + math.log(total)), losses)


def _weights(q) -> np.ndarray:
    return np.asarray(getattr(q, "weights", q), dtype=np.float64)


def kl_to_uniform(q) -> float:
    """KL(Q || uniform) = ln N + sum Q ln Q, with 0 ln 0 = 0."""
    w = _weights(q)
    pos = w[w > 0]
    return max(0.0, float(math.log(w.size) + np.sum(pos * np.log(pos))))


def f_divergence(q, mu: float) -> float:
    """D_mu(Q || uniform) = N^(mu-1) sum Q^mu - 1; mu = 2 gives chi-square."""
    if not mu > 1:
        raise ValueError(f"mu must be > 1, got {mu}")
    w = _weights(q)
    return max(0.0, float(w.size ** (mu - 1.0) * np.sum(w**mu) - 1.0))


def resample(q, freqs: FrequencySet, D: int, seed: int) -> FrequencySet:
    """Draw D frequencies with replacement according to the posterior weights (inverse CDF)."""
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    w = _weights(q)
    if w.size != freqs.N:
        raise ValueError(f"{w.size} weights for {freqs.N} frequencies")
    cdf = np.cumsum(w)
    u = make_rng(seed).random(D) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), freqs.N - 1)
    return FrequencySet(freqs.omegas[idx], freqs.prior, seed)
