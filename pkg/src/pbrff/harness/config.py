"""Experiment configuration: defaults, file loading and validation."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

PIPELINES = ("toy_landmarks", "landmarks_table", "greedy_curves")


class ConfigError(ValueError):
    pass


def _decades(lo: int, hi: int) -> list[float]:
    return [10.0**k for k in range(lo, hi + 1)]


@dataclass
class ExperimentConfig:
    pipeline: str
    datasets: list = field(default_factory=list)
    label_column: int = -1
    header: bool = True
    standardize: bool = True
    sigma_grid: list = field(default_factory=lambda: _decades(-7, 2))
    beta_grid: list = field(default_factory=lambda: _decades(-3, 3))
    C_grid: list = field(default_factory=lambda: _decades(-5, 4))
    D_grid: list = field(default_factory=lambda: [8, 16, 32, 64, 128])
    rho_grid: list = field(default_factory=lambda: [1e-4, 1e-3, 1e-2, 1e-1, 1.0])  # fractions of N
    N: int = 5000
    D_ladder: list = field(default_factory=lambda: [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000])
    landmark_fraction: float = 0.1
    sweep_fractions: list = field(default_factory=lambda: [0.01, 0.05, 0.1, 0.15, 0.2, 0.25])
    sweep_D: int = 64
    seeds: list = field(default_factory=lambda: list(range(10)))
    output_dir: str = "results"
    proxy_D: int = 2048
    eps: float = 0.05
    solver: str = "dcd"
    epochs: int = 1000
    # toy pipeline
    toy_n: int = 300
    toy_landmarks: int = 5
    toy_D: int = 20
    toy_beta: float = 1.0
    toy_sigma: float = 0.5
    toy_grid: int = 60
    # greedy pipeline on the synthetic benchmark
    synthetic_d: int = 5
    synthetic_sizes: list = field(default_factory=lambda: [600, 300, 2000])
    okrff_posteriors: dict = field(default_factory=dict)
    jobs: int = 1
    full: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"pipeline must be one of {PIPELINES}, got {self.pipeline!r}")
        for name in ("sigma_grid", "beta_grid", "C_grid", "D_grid", "rho_grid", "D_ladder", "seeds"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        if any(s <= 0 for s in self.sigma_grid) or any(c <= 0 for c in self.C_grid):
            raise ConfigError("sigma_grid and C_grid values must be positive")
        if any(b < 0 for b in self.beta_grid):
            raise ConfigError("beta_grid values must be nonnegative")
        if any(D < 1 for D in self.D_grid + self.D_ladder):
            raise ConfigError("D values must be >= 1")
        if self.N < max(max(self.D_grid), max(self.D_ladder)):
            raise ConfigError(f"N={self.N} is smaller than the largest D")
        if not 0.0 < self.landmark_fraction <= 1.0:
            raise ConfigError(f"landmark_fraction must lie in (0, 1], got {self.landmark_fraction}")
        if any(not 0.0 < f <= 1.0 for f in self.sweep_fractions):
            raise ConfigError("sweep_fractions must lie in (0, 1]")
        if not 0.0 < self.eps < 1.0:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if len(self.synthetic_sizes) != 3 or min(self.synthetic_sizes) < 2:
            raise ConfigError("synthetic_sizes must be three sizes (train, valid, test) >= 2")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


FULL_OVERRIDES = {
    "N": 20000,
    "D_ladder": [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000],
}


def make_config(pipeline: str, overrides: dict | None = None) -> ExperimentConfig:
    overrides = dict(overrides or {})
    unknown = set(overrides) - {f.name for f in dataclasses.fields(ExperimentConfig)}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    overrides.pop("pipeline", None)
    if overrides.get("full"):
        overrides = {**FULL_OVERRIDES, **overrides}
    return ExperimentConfig(pipeline=pipeline, **overrides).validate()


def read_config_file(path) -> dict:
    """Read a JSON or TOML config file into a dict of overrides."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
