"""Synthetic sector returns with two correlation regimes and GARCH volatility.

Innovations are Gaussian with precision ``I - w A`` on a fixed small-world
graph of ten sectors, so every edge carries partial correlation ``w``. The
first regime uses a weak ``w``, the second a strong one. Each series then
gets AR(1) mean dynamics and GARCH(1,1) variance.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .model_core import Dataset, read_dataset_csv
from .netgen import TopologySpec, generate_structure

SECTORS = ("basic_materials", "consumer_cyclicals", "consumer_non_cyclicals", "energy",
           "financials", "healthcare", "industrials", "real_estate", "technology",
           "utilities")


def regime_precision(w: float, seed: int = 3) -> np.ndarray:
    A = generate_structure(TopologySpec("small-world", len(SECTORS), seed)).adjacency()
    theta = np.eye(len(SECTORS)) - w * A
    if np.linalg.eigvalsh(theta)[0] <= 0:
        raise ValueError(f"w={w} gives a singular precision")
    return theta


def synthetic_returns(T: int = 756, seed: int = 7, w_low: float = 0.08,
                      w_high: float = 0.2, break_frac: float = 0.5,
                      start: str = "2018-01-02") -> Dataset:
    """Daily returns, weak dependence before ``break_frac * T`` and strong after."""
    rng = np.random.default_rng(seed)
    p = len(SECTORS)
    t_break = int(break_frac * T)
    chol = [np.linalg.cholesky(np.linalg.inv(regime_precision(w))) for w in (w_low, w_high)]
    z = rng.standard_normal((T, p))
    eta = np.vstack([z[:t_break] @ chol[0].T, z[t_break:] @ chol[1].T])
    eta /= eta.std(axis=0)
    phi = rng.uniform(-0.1, 0.1, p)
    omega, a, b = 1e-6, 0.08, 0.9
    r = np.zeros((T, p))
    sig2 = np.full(p, omega / (1 - a - b))
    eps = np.zeros(p)
    for t in range(T):
        sig2 = omega + a * eps ** 2 + b * sig2
        eps = np.sqrt(sig2) * eta[t]
        r[t] = 2e-4 + phi * (r[t - 1] if t else 0.0) + eps
    days = np.busday_offset(np.datetime64(start), np.arange(T), roll="forward")
    return Dataset(np.round(r, 10), list(SECTORS), [str(d) for d in days])


def bundled_returns() -> Dataset:
    """The shipped ``synthetic_returns()`` sample."""
    with resources.as_file(resources.files("enetgraph") / "data" / "sector_returns.csv") as f:
        return read_dataset_csv(f)
