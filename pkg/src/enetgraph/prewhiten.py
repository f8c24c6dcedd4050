"""AR(1)-GARCH(1,1) prewhitening by Gaussian quasi maximum likelihood.

Model::

    r_t = c + phi r_{t-1} + eps_t,   eps_t = sigma_t z_t
    sigma_t^2 = omega + a eps_{t-1}^2 + b sigma_{t-1}^2

The recursion starts from ``sigma_1^2 = var(r)`` and ``eps_1 = r_1 - mean(r)``;
the likelihood runs over ``t = 2..T``. Constraints are enforced by
reparametrization (``atanh`` for phi, ``log`` for omega, a logistic split of
``a + b < 1``) and the search is a Nelder-Mead simplex.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from numba import njit
from scipy.optimize import minimize
from scipy.special import expit, logit

from .model_core import Dataset, DomainError

MIN_T = 50
_PERSIST_CAP = 1.0 - 1e-6
_LOG2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class ArGarchParams:
    c: float
    phi: float
    omega: float
    a: float
    b: float

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"omega must be positive, got {self.omega}")
        if self.a < 0 or self.b < 0:
            raise DomainError("a and b must be nonnegative")
        if not self.a + self.b < 1:
            raise DomainError(f"a + b must be below 1, got {self.a + self.b}")
        if not abs(self.phi) < 1:
            raise DomainError(f"|phi| must be below 1, got {self.phi}")


@dataclass(frozen=True)
class ArGarchFit:
    params: ArGarchParams
    loglik: float
    start_loglik: float
    converged: bool
    boundary: bool
    message: str = ""

    def to_json(self) -> dict:
        return {"params": asdict(self.params), "loglik": self.loglik,
                "start_loglik": self.start_loglik, "converged": self.converged,
                "boundary": self.boundary, "message": self.message}


@njit(cache=True)
def _filter(r, c, phi, omega, a, b, var0, eps0):
    """Residuals and conditional variances for t = 2..T."""
    T = r.shape[0]
    eps = np.empty(T - 1)
    sig2 = np.empty(T - 1)
    e_prev = eps0
    s_prev = var0
    for t in range(1, T):
        s = omega + a * e_prev * e_prev + b * s_prev
        e = r[t] - c - phi * r[t - 1]
        eps[t - 1] = e
        sig2[t - 1] = s
        e_prev = e
        s_prev = s
    return eps, sig2


@njit(cache=True)
def _loglik(r, c, phi, omega, a, b, var0, eps0):
    T = r.shape[0]
    e_prev = eps0
    s_prev = var0
    ll = 0.0
    for t in range(1, T):
        s = omega + a * e_prev * e_prev + b * s_prev
        e = r[t] - c - phi * r[t - 1]
        ll -= 0.5 * (np.log(s) + e * e / s)
        e_prev = e
        s_prev = s
    return ll - 0.5 * (T - 1) * np.log(2.0 * np.pi)


def _check_series(r) -> np.ndarray:
    r = np.asarray(r, dtype=float).ravel()
    if r.size < MIN_T:
        raise DomainError(f"need at least {MIN_T} observations, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise DomainError("series contains non-finite values")
    if not np.var(r) > 0:
        raise DomainError("series has zero variance")
    return r


def _init_state(r):
    return float(np.var(r)), float(r[0] - np.mean(r))


def loglik(r, params: ArGarchParams) -> float:
    """Gaussian quasi log-likelihood over ``t = 2..T``."""
    r = _check_series(r)
    var0, eps0 = _init_state(r)
    return float(_loglik(r, params.c, params.phi, params.omega, params.a, params.b,
                         var0, eps0))


def _to_free(p: ArGarchParams) -> np.ndarray:
    pers = (p.a + p.b) / _PERSIST_CAP
    share = p.a / (p.a + p.b)
    return np.array([p.c, np.arctanh(p.phi), np.log(p.omega), logit(pers), logit(share)])


def _from_free(x) -> tuple[float, float, float, float, float]:
    pers = _PERSIST_CAP * expit(x[3])
    share = expit(x[4])
    return x[0], np.tanh(x[1]), np.exp(x[2]), pers * share, pers * (1.0 - share)


def fit_ar1_garch11(r, max_iter: int = 20000) -> ArGarchFit:
    """Fit one series.

    Starts at ``(c, phi, omega, a, b) = (mean, 0, 0.1 var, 0.05, 0.9)``. The
    fit is flagged (``converged=False``) when the simplex stops on its
    iteration limit, and ``boundary=True`` when ``a + b`` ends within 1e-4 of 1
    or ``a`` or ``b`` ends below 1e-6.
    """
    r = _check_series(r)
    var0, eps0 = _init_state(r)
    scale = float(np.std(r))
    start = ArGarchParams(float(np.mean(r)), 0.0, 0.1 * var0, 0.05, 0.9)
    # work on r / scale so the simplex sees O(1) magnitudes
    z = r / scale
    x0 = _to_free(ArGarchParams(start.c / scale, 0.0, start.omega / scale ** 2, 0.05, 0.9))
    zv0, ze0 = var0 / scale ** 2, eps0 / scale

    def nll(x):
        c, phi, om, a, b = _from_free(x)
        v = -_loglik(z, c, phi, om, a, b, zv0, ze0)
        return v if np.isfinite(v) else 1e300

    opts = {"maxiter": max_iter, "maxfev": 2 * max_iter, "xatol": 1e-8, "fatol": 1e-10}
    res = minimize(nll, x0, method="Nelder-Mead", options=opts)
    # one restart from the optimum refreshes a collapsed simplex
    res2 = minimize(nll, res.x, method="Nelder-Mead", options=opts)
    if res2.fun <= res.fun:
        res = res2
    c, phi, om, a, b = _from_free(res.x)
    params = ArGarchParams(float(c * scale), float(phi), float(om * scale ** 2), float(a), float(b))
    boundary = a + b > 1 - 1e-4 or a < 1e-6 or b < 1e-6
    return ArGarchFit(params, loglik(r, params), loglik(r, start), bool(res.success),
                      bool(boundary), str(res.message))


def standardized_residuals(r, params: ArGarchParams, raw: bool = False) -> np.ndarray:
    """``eps_t / sigma_t`` for ``t = 2..T`` (``eps_t`` itself with ``raw``)."""
    r = np.asarray(r, dtype=float).ravel()
    if r.size < 2:
        raise DomainError("need at least 2 observations")
    var0, eps0 = _init_state(r)
    eps, sig2 = _filter(r, params.c, params.phi, params.omega, params.a, params.b, var0, eps0)
    return eps if raw else eps / np.sqrt(sig2)


def _fit_column(col):
    return fit_ar1_garch11(col)


def prewhiten_dataset(data: Dataset, raw: bool = False,
                      jobs: int = 1) -> tuple[Dataset, list[ArGarchFit]]:
    """Fit every column independently and return the residual dataset (n - 1 rows)."""
    cols = [data.values[:, j].copy() for j in range(data.p)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fits = list(pool.map(_fit_column, cols))
    else:
        fits = [_fit_column(c) for c in cols]
    z = np.column_stack([standardized_residuals(c, f.params, raw) for c, f in zip(cols, fits)])
    index = data.index[1:] if data.index is not None else None
    return Dataset(z, data.labels, index), fits


def write_params_json(fits: list[ArGarchFit], labels, path: str | Path) -> None:
    labels = labels or [f"x{j}" for j in range(len(fits))]
    Path(path).write_text(json.dumps({lb: f.to_json() for lb, f in zip(labels, fits)},
                                     indent=2))
