"""Landmark selection, per-landmark pseudo-posteriors and the landmark similarity map."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from pbrff.alignment import LossVector, landmark_loss
from pbrff.bounds import BoundReport, bound_thm1
from pbrff.data import LabeledDataset
from pbrff.fourier import FourierPrior, FrequencySet, make_rng, prior_from_dict, sample_frequencies
from pbrff.posterior import PseudoPosterior, compute_posterior, kl_to_uniform


@dataclass(frozen=True)
class Landmarks:
    """Landmark points with labels; ``indices`` are training rows, or None for synthetic points."""

    points: np.ndarray
    labels: np.ndarray
    selection: str
    indices: np.ndarray | None = None

    def __len__(self):
        return self.points.shape[0]


def select_landmarks_random(ds: LabeledDataset, n_L: int, seed: int) -> Landmarks:
    if not 1 <= n_L <= ds.n:
        raise ValueError(f"n_L must lie in [1, {ds.n}], got {n_L}")
    rows = make_rng(seed).permutation(ds.n)[:n_L]
    return Landmarks(ds.features[rows].copy(), ds.labels[rows].copy(), "random", rows)


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            i = rng.integers(n)
        else:
            i = min(int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right")), n - 1)
        centers[c] = X[i]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def _sq_dists(X, centers):
    return np.maximum(
        np.sum(X * X, axis=1)[:, None] - 2.0 * X @ centers.T + np.sum(centers * centers, axis=1)[None, :], 0.0
    )


def kmeans(X, k: int, seed: int, max_iters: int = 100):
    """Lloyd iterations from a k-means++ start.

    Returns ``(centers, assignment, objective_history)`` where the history holds
    the within-cluster sum of squares after each assignment step.
    """
    X = np.asarray(X, dtype=np.float64)
    rng = make_rng(seed)
    centers = _kmeanspp(X, k, rng)
    history = []
    assign = None
    for _ in range(max_iters):
        dist = _sq_dists(X, centers)
        new_assign = np.argmin(dist, axis=1)
        history.append(float(dist[np.arange(X.shape[0]), new_assign].sum()))
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            members = assign == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
            else:
                # empty cluster: re-seed at the point farthest from its current center
                far = np.argmax(dist[np.arange(X.shape[0]), assign])
                centers[c] = X[far]
                assign[far] = c
    dist = _sq_dists(X, centers)
    assign = np.argmin(dist, axis=1)
    return centers, assign, history


def select_landmarks_kmeans(ds: LabeledDataset, n_L: int, seed: int, max_iters: int = 100) -> Landmarks:
    """k-means centroids labelled by the majority class of their cluster (ties go to the smaller id)."""
    if not 1 <= n_L <= ds.n:
        raise ValueError(f"n_L must lie in [1, {ds.n}], got {n_L}")
    centers, assign, _ = kmeans(ds.features, n_L, seed, max_iters)
    labels = np.empty(n_L, dtype=np.int64)
    for c in range(n_L):
        counts = np.bincount(ds.labels[assign == c], minlength=ds.n_classes)
        labels[c] = int(np.argmax(counts))
    return Landmarks(centers, labels, "kmeans", None)


def _landmark_seed(seed: int, l: int) -> int:
    return int(np.random.SeedSequence([seed, l]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class LandmarkModel:
    landmarks: Landmarks
    freqs: tuple
    posteriors: tuple
    beta: float
    prior: FourierPrior
    seed: int
    shared_frequencies: bool = False

    @property
    def n_L(self) -> int:
        return len(self.landmarks)

    @property
    def D(self) -> int:
        return self.freqs[0].N

    @property
    def sigma(self) -> float:
        return getattr(self.prior, "sigma", float("nan"))

    def with_beta(self, beta: float) -> "LandmarkModel":
        """Same frequencies and losses, posteriors recomputed for another beta."""
        posts = tuple(compute_posterior(p.losses, beta, p.n) for p in self.posteriors)
        return replace(self, posteriors=posts, beta=float(beta))

    def truncate(self, D: int) -> "LandmarkModel":
        """Keep the first D frequencies of every landmark.

        Frequencies are drawn row by row from the landmark's stream, so this equals
        fitting with ``D`` directly under the same seed.
        """
        if not 1 <= D <= self.D:
            raise ValueError(f"D must lie in [1, {self.D}], got {D}")
        freqs = tuple(f.take(np.arange(D)) for f in self.freqs)
        posts = []
        for p in self.posteriors:
            lv = p.losses
            posts.append(compute_posterior(LossVector(lv.losses[:D], lv.n_used, lv.landmark_in_sample), self.beta, p.n))
        return replace(self, freqs=freqs, posteriors=tuple(posts))

    def save(self, directory) -> None:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        lm = self.landmarks
        idx = lm.indices if lm.indices is not None else np.full(self.n_L, -1)
        table = np.column_stack([lm.points, lm.labels, idx])
        header = ",".join([f"x{j}" for j in range(lm.points.shape[1])] + ["label", "train_index"])
        np.savetxt(out / "landmarks.csv", table, delimiter=",", header=header, comments="", fmt="%.17g")
        for l, (f, p) in enumerate(zip(self.freqs, self.posteriors)):
            f.save(out / f"freqs_{l}")
            p.save(out / f"posterior_{l}.json")
        manifest = {
            "prior": self.prior.to_dict(),
            "sigma": self.sigma,
            "beta": self.beta,
            "D": self.D,
            "n_L": self.n_L,
            "selection": lm.selection,
            "seed": self.seed,
            "shared_frequencies": self.shared_frequencies,
            "landmark_labels": "majority vote of cluster members" if lm.selection == "kmeans" else "training labels",
            "landmarks_in_sample": lm.indices is not None,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2))

    @classmethod
    def load(cls, directory) -> "LandmarkModel":
        src = Path(directory)
        manifest = json.loads((src / "manifest.json").read_text())
        table = np.loadtxt(src / "landmarks.csv", delimiter=",", skiprows=1, ndmin=2)
        idx = table[:, -1].astype(np.int64)
        lm = Landmarks(
            table[:, :-2],
            table[:, -2].astype(np.int64),
            manifest["selection"],
            idx if manifest["landmarks_in_sample"] else None,
        )
        n_L = manifest["n_L"]
        freqs = tuple(FrequencySet.load(src / f"freqs_{l}") for l in range(n_L))
        posts = tuple(PseudoPosterior.load(src / f"posterior_{l}.json") for l in range(n_L))
        return cls(lm, freqs, posts, manifest["beta"], prior_from_dict(manifest["prior"]), manifest["seed"],
                   manifest["shared_frequencies"])


def fit_landmark_model(
    ds: LabeledDataset,
    landmarks: Landmarks,
    prior: FourierPrior,
    D: int,
    beta: float,
    seed: int,
    shared_frequencies: bool = False,
) -> LandmarkModel:
    """Draw D frequencies per landmark and reweight them by the landmark's alignment loss.

    The temperature is ``beta * sqrt(n)`` with n the training sample size.
    """
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    freqs, posts = [], []
    shared = sample_frequencies(prior, D, seed) if shared_frequencies else None
    for l in range(len(landmarks)):
        f = shared if shared is not None else sample_frequencies(prior, D, _landmark_seed(seed, l))
        index = None if landmarks.indices is None else int(landmarks.indices[l])
        losses = landmark_loss(f, ds, landmarks.points[l], int(landmarks.labels[l]), index)
        freqs.append(f)
        posts.append(compute_posterior(losses, beta, ds.n))
    return LandmarkModel(landmarks, tuple(freqs), tuple(posts), float(beta), prior, seed, shared_frequencies)


def psi_map(model: LandmarkModel, x) -> np.ndarray:
    """Coordinate l is ``sum_m Q^l_m cos(omega^l_m . (x_l - x))``; rows of a matrix map to rows."""
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.landmarks.points.shape[1]:
        raise ValueError(f"x has dimension {X.shape[1]}, landmarks have {model.landmarks.points.shape[1]}")
    out = np.empty((X.shape[0], model.n_L))
    for l, (f, q) in enumerate(zip(model.freqs, model.posteriors)):
        out[:, l] = np.cos((model.landmarks.points[l] - X) @ f.omegas.T) @ q.weights
    return out[0] if single else out


def rbf_landmark_map(landmarks, sigma: float, x) -> np.ndarray:
    """Empirical RBF kernel map centred on the landmarks."""
    points = np.asarray(getattr(landmarks, "points", landmarks), dtype=np.float64)
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != points.shape[1]:
        raise ValueError(f"x has dimension {X.shape[1]}, landmarks have {points.shape[1]}")
    out = np.exp(-_sq_dists(X, points) / (2.0 * sigma**2))
    return out[0] if single else out


def landmark_bound_report(model: LandmarkModel, ds: LabeledDataset, t: float | None = None, eps: float = 0.05) -> list[BoundReport]:
    """Per-landmark KL bounds holding simultaneously (eps shared through ln(n_L / eps)).

    ``t`` defaults to ``beta * sqrt(n)``, the value the posteriors minimize.
    """
    if t is None:
        t = model.beta * math.sqrt(ds.n)
    heuristic = model.landmarks.indices is None
    reports = []
    for l, q in enumerate(model.posteriors):
        r = bound_thm1(q.expected_loss(), kl_to_uniform(q), ds.n, t, eps, model.n_L)
        reports.append(replace(r, params=dict(r.params, landmark=l, heuristic_landmarks=heuristic)))
    return reports
