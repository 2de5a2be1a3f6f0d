"""Fourier-transform priors, trigonometric hypotheses and random Fourier feature maps."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator, reproducible across platforms."""
    return np.random.Generator(np.random.Philox(int(seed)))


class FourierPrior:
    """Spectral density of a shift-invariant kernel, used as a prior over frequencies.

    Subclasses provide ``sample`` and the kernel itself as a function of the
    difference vector.
    """

    d: int

    def sample(self, N: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def kernel(self, delta) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianPrior(FourierPrior):
    """Fourier transform of the RBF kernel: omega ~ N(0, sigma^-2 I_d)."""

    sigma: float
    d: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")

    def sample(self, N, rng):
        return rng.standard_normal((N, self.d)) / self.sigma

    def kernel(self, delta):
        delta = np.asarray(delta, dtype=np.float64)
        return np.exp(-np.sum(delta * delta, axis=-1) / (2.0 * self.sigma**2))

    def to_dict(self):
        return {"kind": "gaussian", "sigma": self.sigma, "d": self.d}


def prior_from_dict(meta: dict) -> FourierPrior:
    if meta.get("kind", "gaussian") != "gaussian":
        raise ValueError(f"unknown prior kind {meta.get('kind')!r}")
    return GaussianPrior(float(meta["sigma"]), int(meta["d"]))


@dataclass(frozen=True)
class FrequencySet:
    omegas: np.ndarray
    prior: FourierPrior
    seed: int | None = None

    def __post_init__(self):
        W = np.ascontiguousarray(self.omegas, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] < 1:
            raise ValueError(f"omegas must be a non-empty N x d matrix, got shape {W.shape}")
        if W.shape[1] != self.prior.d:
            raise ValueError(f"omegas have {W.shape[1]} columns but the prior has d={self.prior.d}")
        if not np.all(np.isfinite(W)):
            raise ValueError("omegas contain non-finite values")
        W.setflags(write=False)
        object.__setattr__(self, "omegas", W)

    @property
    def N(self) -> int:
        return self.omegas.shape[0]

    @property
    def d(self) -> int:
        return self.omegas.shape[1]

    def take(self, rows) -> "FrequencySet":
        return FrequencySet(self.omegas[np.asarray(rows)], self.prior, self.seed)

    def save(self, path) -> None:
        """Write ``<path>.csv`` (one frequency per row) and ``<path>.json`` sidecar."""
        path = Path(path)
        np.savetxt(path.with_suffix(".csv"), self.omegas, delimiter=",", fmt="%.17g")
        meta = dict(self.prior.to_dict(), seed=self.seed, N=self.N)
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def load(cls, path) -> "FrequencySet":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        W = np.loadtxt(path.with_suffix(".csv"), delimiter=",", ndmin=2)
        if W.shape != (meta["N"], meta["d"]):
            raise ValueError(f"{path}: matrix shape {W.shape} disagrees with sidecar ({meta['N']}, {meta['d']})")
        return cls(W, prior_from_dict(meta), meta.get("seed"))


def sample_frequencies(prior: FourierPrior, N: int, seed: int) -> FrequencySet:
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return FrequencySet(prior.sample(N, make_rng(seed)), prior, seed)


def _check_dim(a: np.ndarray, d: int, what: str) -> None:
    if a.shape[-1] != d:
        raise ValueError(f"{what} has dimension {a.shape[-1]}, expected {d}")


def hypothesis_eval(omega, delta):
    """cos(omega . delta); broadcasts over leading axes of either argument."""
    omega = np.asarray(omega, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    _check_dim(delta, omega.shape[-1], "delta")
    out = np.cos(np.sum(omega * delta, axis=-1))
    return float(out) if out.ndim == 0 else out


def rff_map(x, freqs: FrequencySet) -> np.ndarray:
    """Map rows to ``(cos(W x), sin(W x)) / sqrt(D)``; a single vector maps to a vector."""
    x = np.asarray(x, dtype=np.float64)
    _check_dim(x, freqs.d, "x")
    proj = x @ freqs.omegas.T
    return np.concatenate([np.cos(proj), np.sin(proj)], axis=-1) / np.sqrt(freqs.N)


def compact_rff_map(x, freqs: FrequencySet) -> np.ndarray:
    """``rff_map`` with repeated frequencies merged into one column pair scaled by sqrt(count).

    Inner products between mapped points equal those of ``rff_map`` exactly, so
    any kernel method (an L2-regularized linear SVM included) learns the same
    predictor on either map. Resampling from a peaked posterior repeats many
    frequencies, and the merged map is then much narrower.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_dim(x, freqs.d, "x")
    uniq, counts = np.unique(freqs.omegas, axis=0, return_counts=True)
    proj = x @ uniq.T
    scale = np.sqrt(counts / freqs.N)
    return np.concatenate([np.cos(proj) * scale, np.sin(proj) * scale], axis=-1)


def rbf_kernel(x, x_prime, sigma: float):
    x = np.asarray(x, dtype=np.float64)
    x_prime = np.asarray(x_prime, dtype=np.float64)
    _check_dim(x_prime, x.shape[-1], "x_prime")
    diff = x - x_prime
    out = np.exp(-np.sum(diff * diff, axis=-1) / (2.0 * sigma**2))
    return float(out) if out.ndim == 0 else out


def expected_kernel(q, freqs: FrequencySet, delta):
    """Posterior-weighted hypothesis average ``sum_m Q_m cos(omega_m . delta)``.

    ``q`` is a weight vector or anything with a ``weights`` attribute.
    ``delta`` may be a single vector or a stack of them.
    """
    w = np.asarray(getattr(q, "weights", q), dtype=np.float64)
    if w.shape != (freqs.N,):
        raise ValueError(f"posterior has {w.shape[0] if w.ndim else 0} weights for {freqs.N} frequencies")
    delta = np.asarray(delta, dtype=np.float64)
    _check_dim(delta, freqs.d, "delta")
    out = np.cos(delta @ freqs.omegas.T) @ w
    return float(out) if out.ndim == 0 else out
