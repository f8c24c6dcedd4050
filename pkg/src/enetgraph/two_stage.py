"""Two-stage graphical elastic net (2S-gelnet).

Stage 1 selects the edge set by node-wise elastic-net regressions combined with
the AND or OR rule. Stage 2 maximizes ``log det(Theta) - trace(S Theta)`` with
``theta_ij = 0`` for every pair outside the selected edge set.

Stage 2 cycles over rows/columns of ``W`` (the covariance estimate): for column
``k`` it solves the reduced system ``W11[E, E] beta_E = s12[E]`` over the
neighbours ``E`` of ``k``, sets ``w12 = W11 beta`` and leaves ``w22 = s22``.
After the sweeps converge ``theta22 = 1 / (w22 - w12' beta)`` and
``theta12 = -beta * theta22``, so entries off the pattern are exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .enet_solver import nodewise_regressions
from .gelnet import initial_inverse
from .model_core import (Dataset, DomainError, EdgeSet, EstimationResult, PenaltyParams,
                         SymMatrix)

SELECT_TOL = 1e-10
RULES = ("and", "or")


@dataclass(frozen=True)
class TwoStageConfig:
    tol: float = 1e-6
    max_sweeps: int = 500
    loss: str = "mean"
    enet_tol: float = 1e-7
    enet_max_iter: int = 10000


def selection_adjacency(B: np.ndarray, rule: str, tol: float = SELECT_TOL) -> np.ndarray:
    """Boolean adjacency from directed nonzero patterns.

    ``B[j, i]`` is the coefficient of variable ``j`` in the regression of ``i``.
    """
    nz = np.abs(B) > tol
    rule = rule.lower()
    if rule == "and":
        adj = nz & nz.T
    elif rule == "or":
        adj = nz | nz.T
    else:
        raise DomainError(f"unknown edge rule {rule!r}; expected one of {RULES}")
    np.fill_diagonal(adj, False)
    return adj


def edges_from_coefficients(B: np.ndarray, rule: str, tol: float = SELECT_TOL) -> EdgeSet:
    return EdgeSet.from_adjacency(selection_adjacency(B, rule, tol))


def neighborhood_select(data: Dataset, params: PenaltyParams, rule: str = "and",
                        loss: str = "mean") -> EdgeSet:
    B, _, _ = nodewise_regressions(data.covariance().values, data.n, params, loss=loss)
    return edges_from_coefficients(B, rule)


@njit(cache=True)
def _cmle_kernel(S, adj, W, tol, max_sweeps):
    p = S.shape[0]
    max_diff = np.inf
    for sweep in range(max_sweeps):
        W_old = W.copy()
        for k in range(p):
            m = 0
            for j in range(p):
                if adj[j, k]:
                    m += 1
            nb = np.empty(m, dtype=np.int64)
            m = 0
            for j in range(p):
                if adj[j, k]:
                    nb[m] = j
                    m += 1
            beta = np.zeros(m)
            if m > 0:
                A = np.empty((m, m))
                rhs = np.empty(m)
                for r in range(m):
                    rhs[r] = S[nb[r], k]
                    for s in range(m):
                        A[r, s] = W[nb[r], nb[s]]
                beta = np.linalg.solve(A, rhs)
            for t in range(p):
                if t == k:
                    continue
                acc = 0.0
                for r in range(m):
                    acc += W[t, nb[r]] * beta[r]
                W[t, k] = acc
                W[k, t] = acc
        max_diff = 0.0
        for i in range(p):
            for j in range(p):
                d = abs(W_old[i, j] - W[i, j])
                if d > max_diff:
                    max_diff = d
        if max_diff < tol:
            return sweep + 1, max_diff, True
    return max_sweeps, max_diff, False


@njit(cache=True)
def _cmle_theta(S, adj, W):
    p = S.shape[0]
    Theta = np.zeros((p, p))
    for k in range(p):
        m = 0
        for j in range(p):
            if adj[j, k]:
                m += 1
        nb = np.empty(m, dtype=np.int64)
        m = 0
        for j in range(p):
            if adj[j, k]:
                nb[m] = j
                m += 1
        if m > 0:
            A = np.empty((m, m))
            rhs = np.empty(m)
            for r in range(m):
                rhs[r] = S[nb[r], k]
                for s in range(m):
                    A[r, s] = W[nb[r], nb[s]]
            beta = np.linalg.solve(A, rhs)
        else:
            beta = np.zeros(0)
        wb = 0.0
        for r in range(m):
            wb += W[nb[r], k] * beta[r]
        th22 = 1.0 / (S[k, k] - wb)
        Theta[k, k] = th22
        for r in range(m):
            Theta[nb[r], k] = -beta[r] * th22
    return Theta


def constrained_mle(S, edges: EdgeSet, tol: float = 1e-6,
                    max_sweeps: int = 500, jitter: bool = True) -> EstimationResult:
    """Gaussian MLE of the precision matrix with zeros outside ``edges``.

    ``S`` should be positive definite; otherwise ``S + eps*I`` with
    ``eps = 1e-3 * mean(diag(S))`` is used (or an error raised when ``jitter`` is off).
    """
    S = np.array(S, dtype=float)
    p = S.shape[0]
    if edges.p != p:
        raise DomainError(f"edge set has p={edges.p}, covariance has p={p}")
    _, eps = initial_inverse(S, jitter)
    if eps > 0:
        S = S + eps * np.eye(p)
    return _constrained_mle(S, edges.adjacency(), tol, max_sweeps, eps, edges)


def _constrained_mle(S, adj, tol, max_sweeps, eps=0.0, edges=None,
                     W0=None) -> EstimationResult:
    W = S.copy() if W0 is None else np.array(W0, dtype=float)
    sweeps, final_delta, converged = _cmle_kernel(S, adj, W, tol, max_sweeps)
    theta = _cmle_theta(S, adj, W)
    # the two triangles come from different columns; average, zeros stay zeros
    theta = 0.5 * (theta + theta.T)
    return EstimationResult(
        theta_hat=SymMatrix(theta, check=False),
        w_hat=SymMatrix(W, check=False),
        params=PenaltyParams(1.0, 0.0),
        iterations=int(sweeps),
        final_delta=float(final_delta),
        converged=bool(converged),
        metadata={"estimator": "constrained-mle",
                  "edges": edges,
                  "jitter": eps},
    )


def two_stage_estimate(data: Dataset, params: PenaltyParams, rule: str = "and",
                       cfg: TwoStageConfig = TwoStageConfig()) -> EstimationResult:
    S = data.covariance().values
    B, _, sel_conv = nodewise_regressions(S, data.n, params, loss=cfg.loss,
                                          tol=cfg.enet_tol, max_iter=cfg.enet_max_iter)
    edges = edges_from_coefficients(B, rule)
    res = constrained_mle(S, edges, cfg.tol, cfg.max_sweeps)
    return EstimationResult(
        theta_hat=res.theta_hat,
        w_hat=res.w_hat,
        params=params,
        iterations=res.iterations,
        final_delta=res.final_delta,
        converged=res.converged and sel_conv,
        metadata={"estimator": "2s-gelnet", "rule": rule.lower(), "edges": edges,
                  "jitter": res.metadata["jitter"]},
    )
