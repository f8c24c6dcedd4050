"""Graphical elastic net: penalized Gaussian likelihood by block coordinate descent.

Maximizes::

    log det(Theta) - trace(S Theta) - alpha*lam*||Theta||_1 - (1-alpha)*lam*||Theta||_2^2

where both norms run over off-diagonal entries only. The graphical lasso is the
``alpha = 1`` case and goes through exactly the same code.

Each block update solves, for row/column ``k``, the elastic-net normal equations

    W11 b - s12 + alpha*lam*sign(b) + 2*(1-alpha)*lam*theta22*b = 0

by coordinate descent, then sets ``w12 = W11 b``, ``theta22 = 1/(w22 - b'w12)``
and ``theta12 = -b*theta22``. When the ridge part is active the ``theta22`` used
inside the block is solved to be consistent with the block's own ``b`` (a
bracketed one-dimensional root search) rather than lagged from the previous
sweep. The ridge term carries the factor 2 that comes from
differentiating the squared norm; the objective above has no 1/2 in front of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .enet_solver import _soft
from .model_core import DomainError, EstimationResult, PenaltyParams, SymMatrix


class InitializationError(DomainError):
    """The sample covariance cannot be inverted and jitter is disabled."""


@dataclass(frozen=True)
class GelnetConfig:
    delta: float = 1e-4
    max_sweeps: int = 500
    inner_tol: float = 1e-7
    inner_max_iter: int = 10000
    jitter: bool = True

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError("delta must be positive")
        if self.max_sweeps < 1:
            raise DomainError("max_sweeps must be at least 1")


@njit(cache=True)
def _block_cd(W, S, k, b, th22, l1, l2, tol, max_iter):
    """Coordinate descent for block ``k``; ``b`` has length p with ``b[k]`` ignored."""
    p = W.shape[0]
    Wb = np.zeros(p)
    for t in range(p):
        if t == k or b[t] == 0.0:
            continue
        for j in range(p):
            Wb[j] += W[j, t] * b[t]
    ridge = 2.0 * l2 * th22
    for it in range(max_iter):
        max_delta = 0.0
        for j in range(p):
            if j == k:
                continue
            h = W[j, j]
            cj = Wb[j] - h * b[j] - S[j, k]
            new = -_soft(cj, l1) / (h + ridge)
            d = new - b[j]
            if d != 0.0:
                for t in range(p):
                    Wb[t] += d * W[t, j]
                b[j] = new
                if abs(d) > max_delta:
                    max_delta = abs(d)
        if max_delta < tol:
            return it + 1
    return max_iter


@njit(cache=True)
def _block_eval(W, S, k, b, th22, l1, l2, tol, max_iter):
    """Solve block ``k`` at ``theta22 = th22``; return ``1/(w22 - b'W11 b)`` or -1."""
    _block_cd(W, S, k, b, th22, l1, l2, tol, max_iter)
    p = W.shape[0]
    q = 0.0
    for t in range(p):
        if t == k or b[t] == 0.0:
            continue
        acc = 0.0
        for j in range(p):
            if j != k:
                acc += W[t, j] * b[j]
        q += b[t] * acc
    d = W[k, k] - q
    if d <= 0.0:
        return -1.0
    return 1.0 / d


@njit(cache=True)
def _block_consistent(W, S, k, b, th22, l1, l2, tol, max_iter):
    """Block solve with ``theta22`` consistent with its own ``b``.

    The ridge term depends on ``theta22 = 1/(w22 - b'W11 b)``, which in turn
    depends on ``b``. ``f(t) = 1/(w22 - b(t)'W11 b(t))`` is decreasing in
    ``t``, so ``t = f(t)`` has one root and ``[t0, f(t0)]`` brackets it. Lagging
    ``theta22`` by one block update instead can oscillate and diverge on
    ill-conditioned ``S``.
    """
    if l2 == 0.0:
        _block_cd(W, S, k, b, th22, l1, l2, tol, max_iter)
        return th22
    t0 = th22
    f0 = _block_eval(W, S, k, b, t0, l1, l2, tol, max_iter)
    n_grow = 0
    while f0 < 0.0 and n_grow < 200:
        t0 *= 2.0
        f0 = _block_eval(W, S, k, b, t0, l1, l2, tol, max_iter)
        n_grow += 1
    g0 = t0 - f0
    if abs(g0) <= 1e-12 * t0:
        return t0
    t1 = f0
    f1 = _block_eval(W, S, k, b, t1, l1, l2, tol, max_iter)
    g1 = t1 - f1 if f1 > 0.0 else -np.inf
    # bracket [lo, hi] with g(lo) < 0 < g(hi); Illinois regula falsi
    if g0 < 0.0:
        lo, glo, hi, ghi = t0, g0, t1, g1
    else:
        lo, glo, hi, ghi = t1, g1, t0, g0
    if glo >= 0.0 or ghi <= 0.0:
        return t1 if abs(g1) < abs(g0) else t0
    side = 0
    t = t1
    for _ in range(200):
        if np.isfinite(glo):
            t = hi - ghi * (hi - lo) / (ghi - glo)
            if not (lo < t < hi):
                t = 0.5 * (lo + hi)
        else:
            t = 0.5 * (lo + hi)
        ft = _block_eval(W, S, k, b, t, l1, l2, tol, max_iter)
        gt = t - ft if ft > 0.0 else -np.inf
        if gt < 0.0:
            lo, glo = t, gt
            if side == -1:
                ghi *= 0.5
            side = -1
        else:
            hi, ghi = t, gt
            if side == 1 and np.isfinite(glo):
                glo *= 0.5
            side = 1
        if abs(gt) <= 1e-12 * t or hi - lo <= 1e-12 * hi:
            break
    return t


@njit(cache=True)
def _gelnet_kernel(S, l1, l2, W, Theta, B, delta, max_sweeps, inner_tol, inner_max):
    p = S.shape[0]
    b = np.empty(p)
    w12 = np.empty(p)
    max_diff = np.inf
    for sweep in range(max_sweeps):
        W_old = W.copy()
        for k in range(p):
            for t in range(p):
                b[t] = B[t, k]
            b[k] = 0.0
            _block_consistent(W, S, k, b, Theta[k, k], l1, l2, inner_tol, inner_max)
            bw = 0.0
            for t in range(p):
                acc = 0.0
                if t != k:
                    for j in range(p):
                        if j != k:
                            acc += W[t, j] * b[j]
                w12[t] = acc
                bw += b[t] * acc
            for t in range(p):
                if t != k:
                    W[t, k] = w12[t]
                    W[k, t] = w12[t]
            th22 = 1.0 / (W[k, k] - bw)
            Theta[k, k] = th22
            for t in range(p):
                if t != k:
                    Theta[t, k] = -b[t] * th22
                    Theta[k, t] = Theta[t, k]
                B[t, k] = b[t]
        max_diff = 0.0
        for i in range(p):
            for j in range(p):
                d = abs(W_old[i, j] - W[i, j])
                if d > max_diff:
                    max_diff = d
        if max_diff < delta:
            return sweep + 1, max_diff, True
    return max_sweeps, max_diff, False


def initial_inverse(S: np.ndarray, jitter: bool = True) -> tuple[np.ndarray, float]:
    """Return ``(S^-1, eps)``; ``eps > 0`` when a ridge ``eps*I`` had to be added."""
    eps = 0.0
    if not _well_conditioned(S):
        if not jitter:
            raise InitializationError("sample covariance is singular and jitter is disabled")
        eps = 1e-3 * float(np.mean(np.diag(S)))
        S = S + eps * np.eye(S.shape[0])
    return np.linalg.inv(S), eps


def _well_conditioned(S: np.ndarray) -> bool:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return False
    d = np.diag(L)
    # squared pivot ratio bounds the condition number from below
    return (d.min() / d.max()) ** 2 > 1e-12


def penalized_loglik(theta, S, params: PenaltyParams) -> float:
    """The maximized objective (``-inf`` off the PD cone)."""
    theta = np.asarray(theta, dtype=float)
    sign, logdet = np.linalg.slogdet(theta)
    if sign <= 0:
        return -np.inf
    off = theta - np.diag(np.diag(theta))
    return float(logdet - np.sum(np.asarray(S) * theta)
                 - params.l1 * np.abs(off).sum() - params.l2 * np.sum(off ** 2))


def gelnet_estimate(S, params: PenaltyParams, cfg: GelnetConfig = GelnetConfig(),
                    warm_start: EstimationResult | None = None) -> EstimationResult:
    """Estimate the precision matrix from the sample covariance ``S``.

    Parameters
    ----------
    S : SymMatrix or array (p, p)
        Sample covariance with positive diagonal.
    params : PenaltyParams
    cfg : GelnetConfig
        Convergence is declared when the largest absolute change of ``W`` over a
        full sweep drops below ``cfg.delta``.
    warm_start : EstimationResult, optional
        A previous gelnet result on the same ``S``; its ``W``, ``Theta`` and
        block coefficients seed the iteration instead of ``W = S``,
        ``Theta = S^-1``, ``b = 0``.

    Returns
    -------
    EstimationResult
        With ``w_hat`` set and ``metadata["block_coefficients"]`` holding the
        final ``b`` vectors column-wise (used for warm starts).
    """
    S = np.array(S, dtype=float)
    if np.any(np.diag(S) <= 0):
        raise DomainError("S must have a positive diagonal")
    p = S.shape[0]
    if warm_start is not None and "block_coefficients" in warm_start.metadata:
        W = np.array(warm_start.w_hat.values, dtype=float)
        Theta = np.array(warm_start.theta_hat.values, dtype=float)
        B = np.array(warm_start.metadata["block_coefficients"], dtype=float)
        np.fill_diagonal(W, np.diag(S))
        eps = 0.0
    else:
        Theta, eps = initial_inverse(S, cfg.jitter)
        W = S.copy()
        B = np.zeros((p, p))
    sweeps, final_delta, converged = _gelnet_kernel(
        S, params.l1, params.l2, W, Theta, B,
        cfg.delta, cfg.max_sweeps, cfg.inner_tol, cfg.inner_max_iter)
    converged = bool(converged) and bool(np.all(np.isfinite(Theta)))
    if not np.all(np.isfinite(Theta)):
        raise DomainError("gelnet iteration diverged")
    return EstimationResult(
        theta_hat=SymMatrix(Theta, check=False),
        w_hat=SymMatrix(W, check=False),
        params=params,
        iterations=int(sweeps),
        final_delta=float(final_delta),
        converged=converged,
        metadata={"estimator": "gelnet", "jitter": eps, "block_coefficients": B},
    )


def solve_block(W11, s12, theta22: float, params: PenaltyParams, b_init=None,
                tol: float = 1e-10, max_iter: int = 10000) -> np.ndarray:
    """Solve one block's elastic-net normal equations by coordinate descent.

    Finds ``b`` with ``W11 b - s12 + alpha*lam*gamma + 2(1-alpha)*lam*theta22*b = 0``
    using ``b_j <- -Soft(c_j, alpha*lam) / (h_j + 2(1-alpha)*lam*theta22)``.
    """
    W11 = np.asarray(W11, dtype=float)
    s12 = np.asarray(s12, dtype=float)
    q = s12.shape[0]
    if theta22 <= 0:
        raise DomainError("theta22 must be positive")
    denom = np.diag(W11) + 2.0 * params.l2 * theta22
    if np.any(denom <= 0):
        raise DomainError("nonpositive coordinate curvature in block update")
    # embed as a (q+1)-block with the target in the last slot
    W = np.zeros((q + 1, q + 1))
    W[:q, :q] = W11
    S = np.zeros((q + 1, q + 1))
    S[:q, q] = s12
    b = np.zeros(q + 1)
    if b_init is not None:
        b[:q] = b_init
    _block_cd(W, S, q, b, theta22, params.l1, params.l2, tol, max_iter)
    return b[:q].copy()
