"""Coordinate descent for elastic-net penalized linear regression.

The objective minimized by :func:`fit_elastic_net` is::

    L(a, b) = ||y - a - X b||_2^2 + lam * (alpha * ||b||_1 + (1 - alpha) * ||b||_2^2)

with ``loss="sum"`` (the default), or the same expression with the residual
sum of squares divided by ``n`` when ``loss="mean"``. The intercept ``a`` is not
penalized; it is handled by centering.

All fits reduce to the Gram form ``b'Gb - 2c'b + l1 |b|_1 + l2 |b|_2^2`` with
``G = Xc'Xc`` and ``c = Xc'yc`` (both divided by ``n`` for the mean loss), so
the node-wise regressions used by the graph estimators run directly off the
sample covariance matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .model_core import DomainError, PenaltyParams

LOSSES = ("sum", "mean")


@dataclass(frozen=True)
class RegressionFit:
    intercept: float
    coefficients: np.ndarray
    residual_variance: float
    iterations: int
    converged: bool


def soft_threshold(c: float, t: float) -> float:
    """``sign(c) * max(|c| - t, 0)``."""
    if t < 0:
        raise DomainError(f"threshold must be nonnegative, got {t}")
    return float(np.sign(c) * max(abs(c) - t, 0.0))


@njit(cache=True)
def _soft(c, t):
    if c > t:
        return c - t
    if c < -t:
        return c + t
    return 0.0


@njit(cache=True)
def enet_cd_gram(G, c, l1, l2, b, tol, max_iter):
    """Minimize ``b'Gb - 2c'b + l1|b|_1 + l2|b|^2`` in place, starting from ``b``.

    Returns ``(sweeps, converged)``. Coordinates with ``G_jj`` at the rounding
    floor (zero-variance predictors) are pinned to zero.
    """
    q = c.shape[0]
    if q == 0:
        return 0, True
    scale = 1.0
    for j in range(q):
        if G[j, j] > scale:
            scale = G[j, j]
    floor = 1e-12 * scale
    Gb = np.zeros(q)
    for j in range(q):
        if G[j, j] <= floor:
            b[j] = 0.0
    for t in range(q):
        if b[t] != 0.0:
            for j in range(q):
                Gb[j] += G[j, t] * b[t]
    half_l1 = 0.5 * l1
    for sweep in range(max_iter):
        max_delta = 0.0
        for j in range(q):
            gjj = G[j, j]
            if gjj <= floor:
                continue
            r = c[j] - Gb[j] + gjj * b[j]
            new = _soft(r, half_l1) / (gjj + l2)
            d = new - b[j]
            if d != 0.0:
                for t in range(q):
                    Gb[t] += d * G[t, j]
                b[j] = new
                if abs(d) > max_delta:
                    max_delta = abs(d)
        if max_delta < tol:
            return sweep + 1, True
    return max_iter, False


def fit_elastic_net(y, X, params: PenaltyParams, max_iter: int = 10000,
                    tol: float = 1e-7, b_init=None, loss: str = "sum") -> RegressionFit:
    """Fit one elastic-net regression of ``y`` on the columns of ``X``.

    Parameters
    ----------
    y : array of shape (n,)
    X : array of shape (n, q)
    params : PenaltyParams
    max_iter : int
        Maximum number of full coordinate sweeps. When exhausted the fit is
        returned with ``converged=False`` and ``iterations == max_iter``.
    tol : float
        Stop once the largest absolute coefficient change in a sweep is below this.
    b_init : array of shape (q,), optional
        Warm start; zeros by default.
    loss : {"sum", "mean"}
        Residual sum of squares, or its per-observation mean.

    Returns
    -------
    RegressionFit
        ``residual_variance`` uses divisor ``n``.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, q = X.shape
    if y.shape != (n,):
        raise DomainError(f"y has shape {y.shape}, expected ({n},)")
    if n < 2 or q < 1:
        raise DomainError(f"need n >= 2 and at least one predictor, got n={n}, q={q}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DomainError("non-finite values in regression inputs")
    if loss not in LOSSES:
        raise DomainError(f"loss must be one of {LOSSES}, got {loss!r}")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    G = Xc.T @ Xc
    c = Xc.T @ yc
    if loss == "mean":
        G /= n
        c /= n
    b = np.zeros(q) if b_init is None else np.array(b_init, dtype=float)
    sweeps, converged = enet_cd_gram(G, c, params.l1, params.l2, b, tol, max_iter)
    resid = yc - Xc @ b
    return RegressionFit(
        intercept=float(y_mean - x_mean @ b),
        coefficients=b,
        residual_variance=float(resid @ resid / n),
        iterations=int(sweeps),
        converged=bool(converged),
    )


def objective(y, X, fit: RegressionFit, params: PenaltyParams, loss: str = "sum") -> float:
    """Penalized objective value of ``fit`` (same scaling as the solver)."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    resid = y - fit.intercept - X @ fit.coefficients
    rss = float(resid @ resid)
    if loss == "mean":
        rss /= y.shape[0]
    b = fit.coefficients
    return rss + params.lam * (params.alpha * np.abs(b).sum() + (1 - params.alpha) * b @ b)


@njit(cache=True)
def _nodewise_kernel(S, l1, l2, B, tol, max_iter):
    p = S.shape[0]
    resid_var = np.empty(p)
    all_conv = True
    idx = np.empty(p - 1, dtype=np.int64)
    for i in range(p):
        m = 0
        for j in range(p):
            if j != i:
                idx[m] = j
                m += 1
        G = np.empty((p - 1, p - 1))
        c = np.empty(p - 1)
        b = np.empty(p - 1)
        for r in range(p - 1):
            c[r] = S[idx[r], i]
            b[r] = B[idx[r], i]
            for s in range(p - 1):
                G[r, s] = S[idx[r], idx[s]]
        _, conv = enet_cd_gram(G, c, l1, l2, b, tol, max_iter)
        if not conv:
            all_conv = False
        v = S[i, i]
        for r in range(p - 1):
            v -= 2.0 * b[r] * c[r]
            for s in range(p - 1):
                v += b[r] * G[r, s] * b[s]
        resid_var[i] = max(v, 0.0)
        for r in range(p - 1):
            B[idx[r], i] = b[r]
        B[i, i] = 0.0
    return resid_var, all_conv


def nodewise_regressions(S, n: int, params: PenaltyParams, loss: str = "mean",
                         tol: float = 1e-7, max_iter: int = 10000, B_init=None):
    """Regress every variable on all others, working from the covariance ``S``.

    ``S`` must be the divisor-``n`` sample covariance; the fits then equal
    :func:`fit_elastic_net` on the raw data column by column.

    Returns
    -------
    B : ndarray (p, p)
        Column ``i`` holds the coefficients of the regression of variable ``i``;
        the diagonal is zero.
    resid_var : ndarray (p,)
        Residual variances (divisor ``n``).
    converged : bool
    """
    S = np.ascontiguousarray(np.asarray(S, dtype=float))
    if loss not in LOSSES:
        raise DomainError(f"loss must be one of {LOSSES}, got {loss!r}")
    scale = float(n) if loss == "sum" else 1.0
    # the sum loss is the mean loss with the penalty divided by n
    l1 = params.l1 / scale
    l2 = params.l2 / scale
    B = np.zeros_like(S) if B_init is None else np.array(B_init, dtype=float)
    resid_var, conv = _nodewise_kernel(S, l1, l2, B, tol, max_iter)
    return B, resid_var, bool(conv)
