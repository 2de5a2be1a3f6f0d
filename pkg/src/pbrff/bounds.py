"""PAC-Bayes bounds on the kernel-alignment loss.

Each function takes an already computed empirical loss and divergence and
returns a ``BoundReport`` whose ``slack`` is the whole complexity term added to
the empirical loss.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

KINDS = ("thm1_per_landmark", "cor1_global", "thm2_ustat", "thm3_f_div", "cor_chi2")


@dataclass(frozen=True)
class BoundReport:
    kind: str
    empirical_loss: float
    divergence: float
    slack: float
    total: float
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _check_common(n: int, eps: float, min_n: int = 1) -> None:
    if n < min_n:
        raise ValueError(f"n must be >= {min_n}, got {n}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


def _check_t(t: float) -> None:
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")


def bound_thm1(emp: float, kl: float, n: int, t: float, eps: float, n_L: int = 1) -> BoundReport:
    """Per-landmark KL bound; ``n_L > 1`` spreads eps over landmarks by the union bound."""
    _check_common(n, eps, min_n=2)
    _check_t(t)
    if n_L < 1:
        raise ValueError(f"n_L must be >= 1, got {n_L}")
    slack = (kl + t * t / (2.0 * (n - 1)) + math.log(n_L / eps)) / t
    return BoundReport("thm1_per_landmark", emp, kl, slack, emp + slack, {"n": n, "t": t, "eps": eps, "n_L": n_L})


def bound_cor1(emp: float, kl: float, n: int, t: float, eps: float) -> BoundReport:
    """Global KL bound obtained from the per-sample bounds by a union bound over n+1 events."""
    _check_common(n, eps, min_n=2)
    _check_t(t)
    slack = 2.0 / t * (kl + t * t / (2.0 * (n - 1)) + math.log((n + 1) / eps))
    return BoundReport("cor1_global", emp, kl, slack, emp + slack, {"n": n, "t": t, "eps": eps})


def bound_thm2(emp: float, kl: float, n: int, t: float, eps: float) -> BoundReport:
    """U-statistic KL bound."""
    _check_common(n, eps)
    _check_t(t)
    slack = (kl + t * t / (2.0 * n) + math.log(1.0 / eps)) / t
    return BoundReport("thm2_ustat", emp, kl, slack, emp + slack, {"n": n, "t": t, "eps": eps})


def bound_thm3(emp: float, d_mu: float, n: int, mu: float, eps: float) -> BoundReport:
    """Bound with the f-divergence D_mu (f(x) = x^mu - 1) in place of KL."""
    _check_common(n, eps)
    if not mu > 1:
        raise ValueError(f"mu must be > 1, got {mu}")
    if mu <= 2:
        rate = (1.0 / (2.0 * math.sqrt(n))) ** (mu - 1.0)
    else:
        rate = (1.0 / (4.0 * n)) ** (1.0 - 1.0 / mu)
    slack = rate * (d_mu + 1.0) ** (1.0 / mu) * (1.0 / eps) ** (1.0 - 1.0 / mu)
    return BoundReport("thm3_f_div", emp, d_mu, slack, emp + slack, {"n": n, "mu": mu, "eps": eps})


def bound_cor_chi2(emp: float, chi2: float, n: int, eps: float) -> BoundReport:
    _check_common(n, eps)
    slack = math.sqrt((chi2 + 1.0) / (4.0 * n * eps))
    return BoundReport("cor_chi2", emp, chi2, slack, emp + slack, {"n": n, "mu": 2.0, "eps": eps})
