"""Experiment pipelines: toy landmarks, the landmarks table, and greedy kernel-learning curves.

Every pipeline fans out over independent cells (one per dataset and seed),
each returning plain result rows; the parent process is the only writer of
``results.csv``, ``bounds.jsonl`` and ``splits.jsonl``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from pbrff.alignment import alignment_objective, empirical_loss_fast
from pbrff.bounds import bound_cor1, bound_cor_chi2, bound_thm2, bound_thm3
from pbrff.data import LabeledDataset, SplitSpec, load_csv, split, standardize
from pbrff.datasets import make_checkerboard, make_radial
from pbrff.fourier import GaussianPrior, compact_rff_map, rff_map, sample_frequencies
from pbrff.harness.config import ExperimentConfig
from pbrff.landmarks import (
    fit_landmark_model,
    landmark_bound_report,
    psi_map,
    rbf_landmark_map,
    select_landmarks_kmeans,
    select_landmarks_random,
)
from pbrff.linear_model import error_rate, train_linear_svm, train_svm_path
from pbrff.posterior import PseudoPosterior, compute_posterior, f_divergence, kl_to_uniform, resample

log = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "pipeline",
    "dataset",
    "method",
    "seed",
    "sigma",
    "beta",
    "D",
    "C",
    "n_landmarks",
    "selection",
    "landmark_fraction",
    "train_error",
    "valid_error",
    "test_error",
    "wall_time",
    "hyperparameters",
]


def _sub_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0])


class ResultWriter:
    """Single appender for the tabular and JSON-lines outputs of a run."""

    def __init__(self, output_dir):
        self.dir = Path(output_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._results = (self.dir / "results.csv").open("w", newline="")
        self._csv = csv.DictWriter(self._results, RESULT_COLUMNS)
        self._csv.writeheader()
        self._bounds = (self.dir / "bounds.jsonl").open("w")
        self._splits = (self.dir / "splits.jsonl").open("w")
        self.rows: list[dict] = []

    def write(self, cell: dict) -> None:
        for row in cell.get("rows", []):
            full = {k: row.get(k, "") for k in RESULT_COLUMNS}
            full["hyperparameters"] = json.dumps(row.get("hyperparameters", {}), sort_keys=True)
            self._csv.writerow(full)
            self.rows.append(row)
        for b in cell.get("bounds", []):
            self._bounds.write(json.dumps(b) + "\n")
        for s in cell.get("splits", []):
            self._splits.write(json.dumps(s) + "\n")
        self._results.flush()
        self._bounds.flush()
        self._splits.flush()

    def close(self) -> None:
        for fh in (self._results, self._bounds, self._splits):
            fh.close()


# --- validation helpers -------------------------------------------------------


def fit_validated(Ftr, ytr, Fva, yva, cfg: ExperimentConfig, seed: int):
    """Train one SVM per C and keep the lowest validation error (ties: smaller C).

    Returns ``(classifier, valid_error)``.
    """
    grid = sorted(cfg.C_grid)
    if cfg.solver == "dcd":
        clfs = train_svm_path(Ftr, ytr, grid, epochs=cfg.epochs, seed=seed)
    else:
        clfs = [train_linear_svm(Ftr, ytr, C, epochs=cfg.epochs, seed=seed, solver=cfg.solver) for C in grid]
    errs = [error_rate(c, Fva, yva) for c in clfs]
    k = int(np.argmin(errs))
    return clfs[k], errs[k]


def _proxy_search(train, valid, sigma_grid, cfg, seed):
    best = None
    for sigma in sorted(sigma_grid):
        freqs = sample_frequencies(GaussianPrior(sigma, train.d), cfg.proxy_D, _sub_seed(seed, 11))
        Ftr, Fva = rff_map(train.features, freqs), rff_map(valid.features, freqs)
        clf, err = fit_validated(Ftr, train.signed_labels(), Fva, valid.signed_labels(), cfg, seed)
        if best is None or err < best[0]:
            best = (err, sigma, clf, freqs)
    return best


def select_sigma(train: LabeledDataset, valid: LabeledDataset, sigma_grid, cfg: ExperimentConfig | None = None, seed: int = 0) -> float:
    """Pick the RBF bandwidth with the best validation accuracy of a large-D RFF + linear SVM proxy.

    Ties go to the smaller sigma.
    """
    if not sigma_grid:
        raise ValueError("sigma_grid must not be empty")
    if len(sigma_grid) == 1:
        return float(sigma_grid[0])
    cfg = cfg or ExperimentConfig(pipeline="landmarks_table")
    return float(_proxy_search(train, valid, sigma_grid, cfg, seed)[1])


def _errors(clf, parts):
    return {f"{name}_error": error_rate(clf, F, y) for name, (F, y) in parts.items()}


def _split_record(dataset, seed, parts):
    return {"dataset": dataset, "seed": seed, **{name: p.indices.tolist() for name, p in parts.items()}}


def _prepare(ds: LabeledDataset, cfg: ExperimentConfig, seed: int):
    tr, va, te = split(ds, SplitSpec.holdout_then_validation(seed=seed))
    if cfg.standardize:
        tr, (va, te), _, _ = standardize(tr, [va, te])
    return tr, va, te


# --- toy landmarks -------------------------------------------------------------


def _surface_axes(points, lo, hi, size):
    # regular grid plus the landmark coordinates, so each landmark sits on a grid node
    return np.unique(np.concatenate([np.linspace(lo, hi, size), points]))


def _write_surface(path, xs, ys, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for (i, j), v in np.ndenumerate(values):
            w.writerow([repr(float(xs[j])), repr(float(ys[i])), repr(float(v))])


def _write_mapped(path, F, labels):
    header = [f"f{k}" for k in range(F.shape[1])] + ["label"]
    np.savetxt(path, np.column_stack([F, labels]), delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def toy_cell(cfg: ExperimentConfig, seed: int) -> dict:
    t0 = time.perf_counter()
    out = Path(cfg.output_dir) / f"toy_seed{seed}"
    out.mkdir(parents=True, exist_ok=True)
    train = make_checkerboard(cfg.toy_n, _sub_seed(seed, 1))
    valid = make_checkerboard(cfg.toy_n // 2, _sub_seed(seed, 2))
    test = make_checkerboard(4 * cfg.toy_n, _sub_seed(seed, 3))
    y = {name: ds.signed_labels() for name, ds in (("train", train), ("valid", valid), ("test", test))}
    sigma = cfg.toy_sigma
    prior = GaussianPrior(sigma, 2)
    lm = select_landmarks_random(train, cfg.toy_landmarks, _sub_seed(seed, 4))
    model = fit_landmark_model(train, lm, prior, cfg.toy_D, cfg.toy_beta, _sub_seed(seed, 5))

    maps = {
        "Linear": lambda X: X,
        "RBF-Landmarks": lambda X: rbf_landmark_map(lm, sigma, X),
        "PB": lambda X: psi_map(model, X),
    }
    rows, clfs = [], {}
    for method, fmap in maps.items():
        parts = {name: (fmap(ds.features), y[name]) for name, ds in (("train", train), ("valid", valid), ("test", test))}
        clf, _ = fit_validated(*parts["train"], *parts["valid"], cfg, seed)
        clfs[method] = clf
        rows.append(
            {
                "pipeline": "toy_landmarks",
                "dataset": "checkerboard",
                "method": method,
                "seed": seed,
                "sigma": sigma if method != "Linear" else "",
                "beta": cfg.toy_beta if method == "PB" else "",
                "D": cfg.toy_D if method == "PB" else "",
                "C": clf.C,
                "n_landmarks": cfg.toy_landmarks if method != "Linear" else "",
                "selection": "random" if method != "Linear" else "",
                **_errors(clf, parts),
                "hyperparameters": {"sigma": sigma, "beta": cfg.toy_beta, "D": cfg.toy_D, "C": clf.C, "toy_n": cfg.toy_n},
            }
        )
        if method != "Linear":
            _write_mapped(out / f"mapped_{'rbf' if method == 'RBF-Landmarks' else 'pb'}.csv", parts["train"][0], y["train"])

    lo, hi = train.features.min() - 0.5, train.features.max() + 0.5
    xs = _surface_axes(lm.points[:, 0], lo, hi, cfg.toy_grid)
    ys = _surface_axes(lm.points[:, 1], lo, hi, cfg.toy_grid)
    gx, gy = np.meshgrid(xs, ys)
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    rbf_grid = rbf_landmark_map(lm, sigma, grid)
    pb_grid = psi_map(model, grid)
    for l in range(len(lm)):
        _write_surface(out / f"rbf_surface_{l}.csv", xs, ys, rbf_grid[:, l].reshape(gx.shape))
        _write_surface(out / f"pb_surface_{l}.csv", xs, ys, pb_grid[:, l].reshape(gx.shape))
    for tag, F, method in (("rbf", rbf_grid, "RBF-Landmarks"), ("pb", pb_grid, "PB")):
        _write_surface(out / f"decision_{tag}.csv", xs, ys, clfs[method].decision_function(F).reshape(gx.shape))
    np.savetxt(out / "landmarks.csv", np.column_stack([lm.points, lm.labels]), delimiter=",", header="x,y,label", comments="", fmt="%.17g")

    bounds = [dict(asdict(r), pipeline="toy_landmarks", dataset="checkerboard", method="PB", seed=seed)
              for r in landmark_bound_report(model, train, eps=cfg.eps)] if cfg.toy_beta > 0 else []
    wall = time.perf_counter() - t0
    for r in rows:
        r["wall_time"] = wall
    return {"rows": rows, "bounds": bounds, "splits": []}


# --- landmarks table -------------------------------------------------------------


def _landmark_methods(cfg):
    return (
        ("PB", cfg.beta_grid, cfg.D_grid),
        ("PB_beta1", [1.0], cfg.D_grid),
        ("PB_D64", cfg.beta_grid, [64]),
    )


def _validate_pb(model_max, parts_ds, y, betas, Ds, cfg, seed):
    """Grid over (D, beta, C) on the validation split. Ties keep the first in (D, beta, C) order."""
    best = None
    for D in sorted(Ds):
        mD = model_max.truncate(D)
        for beta in sorted(betas):
            m = mD.with_beta(beta)
            F = {name: psi_map(m, ds.features) for name, ds in parts_ds.items()}
            clf, err = fit_validated(F["train"], y["train"], F["valid"], y["valid"], cfg, seed)
            if best is None or err < best[0]:
                best = (err, m, clf, F)
    return best[1:]


def landmarks_cell(cfg: ExperimentConfig, dataset: str, seed: int) -> dict:
    t0 = time.perf_counter()
    ds = _load(dataset, cfg)
    tr, va, te = _prepare(ds, cfg, seed)
    parts_ds = {"train": tr, "valid": va, "test": te}
    y = {k: v.signed_labels() for k, v in parts_ds.items()}
    name = ds.name or Path(dataset).stem

    err, sigma, proxy_clf, proxy_freqs = _proxy_search(tr, va, cfg.sigma_grid, cfg, seed)
    prior = GaussianPrior(sigma, tr.d)
    base = {"pipeline": "landmarks_table", "dataset": name, "seed": seed, "sigma": sigma}
    rows, bounds = [], []

    def row(method, clf, F, **extra):
        hp = {"sigma": sigma, "C": clf.C, **{k: v for k, v in extra.items() if v != ""}}
        return {**base, "method": method, "C": clf.C, **extra, **_errors(clf, {k: (F[k], y[k]) for k in F}), "hyperparameters": hp}

    F = {k: rff_map(v.features, proxy_freqs) for k, v in parts_ds.items()}
    rows.append(row("SVM-RFF-proxy", proxy_clf, F, D=cfg.proxy_D))

    n_L = max(1, round(cfg.landmark_fraction * tr.n))
    lm = select_landmarks_kmeans(tr, n_L, _sub_seed(seed, 21))
    F = {k: rbf_landmark_map(lm, sigma, v.features) for k, v in parts_ds.items()}
    clf, _ = fit_validated(F["train"], y["train"], F["valid"], y["valid"], cfg, seed)
    common = {"n_landmarks": n_L, "selection": "kmeans", "landmark_fraction": cfg.landmark_fraction}
    rows.append(row("RBF-Landmarks", clf, F, **common))

    D_max = max(max(cfg.D_grid), 64)
    model_max = fit_landmark_model(tr, lm, prior, D_max, 1.0, _sub_seed(seed, 22))
    for method, betas, Ds in _landmark_methods(cfg):
        m, clf, F = _validate_pb(model_max, parts_ds, y, betas, Ds, cfg, seed)
        rows.append(row(method, clf, F, beta=m.beta, D=m.D, **common))
        if m.beta > 0:
            for r in landmark_bound_report(m, tr, eps=cfg.eps):
                bounds.append(dict(asdict(r), pipeline="landmarks_table", dataset=name, method=method, seed=seed))

    rows += _landmark_sweep(cfg, parts_ds, y, prior, sigma, base, seed)
    wall = time.perf_counter() - t0
    for r in rows:
        r["wall_time"] = wall
    return {"rows": rows, "bounds": bounds, "splits": [_split_record(name, seed, parts_ds)]}


def _landmark_sweep(cfg, parts_ds, y, prior, sigma, base, seed):
    """Error versus number of landmarks for random (-R) and k-means (-C) selection."""
    tr = parts_ds["train"]
    rows = []
    for frac in cfg.sweep_fractions:
        n_L = max(1, round(frac * tr.n))
        for selection, suffix in (("random", "R"), ("kmeans", "C")):
            pick = select_landmarks_random if selection == "random" else select_landmarks_kmeans
            lm = pick(tr, n_L, _sub_seed(seed, 31, n_L))
            F = {k: rbf_landmark_map(lm, sigma, v.features) for k, v in parts_ds.items()}
            clf, _ = fit_validated(F["train"], y["train"], F["valid"], y["valid"], cfg, seed)
            common = {"n_landmarks": n_L, "selection": selection, "landmark_fraction": frac}
            rows.append({**base, "method": f"RBF-Landmarks-{suffix}", "C": clf.C, **common,
                         **_errors(clf, {k: (F[k], y[k]) for k in F}),
                         "hyperparameters": {"sigma": sigma, "C": clf.C, **common}})
            model = fit_landmark_model(tr, lm, prior, cfg.sweep_D, 1.0, _sub_seed(seed, 32, n_L))
            m, clf, F = _validate_pb(model, parts_ds, y, cfg.beta_grid, [cfg.sweep_D], cfg, seed)
            rows.append({**base, "method": f"PB-Landmarks-{suffix}", "C": clf.C, "beta": m.beta, "D": m.D, **common,
                         **_errors(clf, {k: (F[k], y[k]) for k in F}),
                         "hyperparameters": {"sigma": sigma, "C": clf.C, "beta": m.beta, "D": m.D, **common}})
    return rows


# --- greedy kernel learning ---------------------------------------------------------


def _greedy_data(dataset, cfg, seed):
    if dataset.startswith("synthetic"):
        n_tr, n_va, n_te = cfg.synthetic_sizes
        parts = {
            "train": make_radial(n_tr, _sub_seed(seed, 41), cfg.synthetic_d),
            "valid": make_radial(n_va, _sub_seed(seed, 42), cfg.synthetic_d),
            "test": make_radial(n_te, _sub_seed(seed, 43), cfg.synthetic_d),
        }
        return f"radial{cfg.synthetic_d}", parts
    ds = _load(dataset, cfg)
    tr, va, te = _prepare(ds, cfg, seed)
    return ds.name or Path(dataset).stem, {"train": tr, "valid": va, "test": te}


def _posterior_bounds(q: PseudoPosterior, n: int, eps: float) -> list:
    emp = q.expected_loss()
    kl = kl_to_uniform(q)
    chi2 = f_divergence(q, 2.0)
    out = []
    if q.t > 0:
        # the Gibbs exponent t = beta sqrt(n) is the minimizer of the U-statistic bound at that t,
        # and of the first-order global bound at 2t
        out.append(bound_thm2(emp, kl, n, q.t, eps))
        out.append(bound_cor1(emp, kl, n, 2.0 * q.t, eps))
    out.append(bound_thm3(emp, chi2, n, 2.0, eps))
    out.append(bound_cor_chi2(emp, chi2, n, eps))
    return out


def greedy_cell(cfg: ExperimentConfig, dataset: str, seed: int) -> dict:
    t0 = time.perf_counter()
    name, parts_ds = _greedy_data(dataset, cfg, seed)
    tr = parts_ds["train"]
    y = {k: v.signed_labels() for k, v in parts_ds.items()}
    sigma = select_sigma(tr, parts_ds["valid"], cfg.sigma_grid, cfg, seed)
    prior = GaussianPrior(sigma, tr.d)
    pool = sample_frequencies(prior, cfg.N, _sub_seed(seed, 51))
    losses = empirical_loss_fast(pool, tr)
    out = Path(cfg.output_dir) / f"greedy_{name}_seed{seed}"
    out.mkdir(parents=True, exist_ok=True)
    pool.save(out / "pool")
    (out / "pool_losses.json").write_text(json.dumps(losses.to_dict()))
    posteriors = {beta: compute_posterior(losses, beta) for beta in sorted(cfg.beta_grid)}

    external = {}
    for key, path in cfg.okrff_posteriors.items():
        if int(key) == seed:
            external["OKRFF"] = PseudoPosterior.load(path)

    base = {"pipeline": "greedy_curves", "dataset": name, "seed": seed, "sigma": sigma}
    rows, bounds = [], []
    for D in sorted(cfg.D_ladder):
        t_cell = time.perf_counter()
        f = sample_frequencies(prior, D, _sub_seed(seed, 52, D))
        F = {k: compact_rff_map(v.features, f) for k, v in parts_ds.items()}
        clf, _ = fit_validated(F["train"], y["train"], F["valid"], y["valid"], cfg, seed)
        rows.append({**base, "method": "RFF", "D": D, "C": clf.C, **_errors(clf, {k: (F[k], y[k]) for k in F}),
                     "wall_time": time.perf_counter() - t_cell,
                     "hyperparameters": {"sigma": sigma, "C": clf.C, "D": D, "N": cfg.N}})

        t_cell = time.perf_counter()
        best = None
        for beta, q in posteriors.items():
            fq = resample(q, pool, D, _sub_seed(seed, 53, D))
            F = {k: compact_rff_map(v.features, fq) for k, v in parts_ds.items()}
            clf, err = fit_validated(F["train"], y["train"], F["valid"], y["valid"], cfg, seed)
            if best is None or err < best[0]:
                best = (err, q, clf, F)
        _, q, clf, F = best
        rows.append({**base, "method": "PBRFF", "beta": q.beta, "D": D, "C": clf.C,
                     **_errors(clf, {k: (F[k], y[k]) for k in F}), "wall_time": time.perf_counter() - t_cell,
                     "hyperparameters": {"sigma": sigma, "C": clf.C, "D": D, "N": cfg.N, "beta": q.beta}})
        for r in _posterior_bounds(q, tr.n, cfg.eps):
            bounds.append(dict(asdict(r), pipeline="greedy_curves", dataset=name, method="PBRFF", seed=seed, D=D,
                               alignment=alignment_objective(q, losses)))

        for method, qx in external.items():
            fq = resample(qx, pool, D, _sub_seed(seed, 54, D))
            F = {k: compact_rff_map(v.features, fq) for k, v in parts_ds.items()}
            clf, _ = fit_validated(F["train"], y["train"], F["valid"], y["valid"], cfg, seed)
            rho = f_divergence(qx, 2.0)
            rows.append({**base, "method": method, "D": D, "C": clf.C, **_errors(clf, {k: (F[k], y[k]) for k in F}),
                         "hyperparameters": {"sigma": sigma, "C": clf.C, "D": D, "N": cfg.N, "chi2": rho}})

    splits = [] if dataset.startswith("synthetic") else [_split_record(name, seed, parts_ds)]
    return {"rows": rows, "bounds": bounds, "splits": splits, "wall_time": time.perf_counter() - t0}


# --- drivers ------------------------------------------------------------------------


def _load(dataset: str, cfg: ExperimentConfig) -> LabeledDataset:
    return load_csv(dataset, label_column=cfg.label_column, header=cfg.header)


def _run(cfg: ExperimentConfig, fn, tasks) -> list[dict]:
    writer = ResultWriter(cfg.output_dir)
    (Path(cfg.output_dir) / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2))
    try:
        if cfg.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                for cell in pool.map(fn, *zip(*tasks)):
                    writer.write(cell)
        else:
            for task in tasks:
                writer.write(fn(*task))
    finally:
        writer.close()
    return writer.rows


def run_toy_landmarks(cfg: ExperimentConfig) -> list[dict]:
    return _run(cfg, toy_cell, [(cfg, s) for s in cfg.seeds])


def run_landmarks_table(cfg: ExperimentConfig) -> list[dict]:
    if not cfg.datasets:
        raise ValueError("landmarks_table needs at least one dataset path")
    return _run(cfg, landmarks_cell, [(cfg, d, s) for d in cfg.datasets for s in cfg.seeds])


def run_greedy_curves(cfg: ExperimentConfig) -> list[dict]:
    datasets = cfg.datasets or ["synthetic"]
    return _run(cfg, greedy_cell, [(cfg, d, s) for d in datasets for s in cfg.seeds])


PIPELINE_RUNNERS = {
    "toy_landmarks": run_toy_landmarks,
    "landmarks_table": run_landmarks_table,
    "greedy_curves": run_greedy_curves,
}
