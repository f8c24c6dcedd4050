"""Uniform dispatch over the six estimator variants and grid-wise fitting.

Estimator names: ``gelnet``, ``glasso`` (gelnet with alpha pinned to 1),
``2s-and``, ``2s-or``, ``cr-l2``, ``cr-minel``.

:func:`fit_grid` walks a penalty grid once for several estimators at a time.
Along each alpha row, lambda runs from largest to smallest with warm starts;
the node-wise regressions are shared by all CR and 2S variants, and the
constrained MLE of 2S is cached per distinct edge set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .cr_gelnet import raw_from_regressions, symmetrize, DegenerateFitError
from .enet_solver import nodewise_regressions
from .gelnet import GelnetConfig, gelnet_estimate
from .model_core import (Dataset, DomainError, EstimationResult, PenaltyParams, SymMatrix,
                         is_positive_definite)
from .gelnet import initial_inverse
from .two_stage import (TwoStageConfig, _constrained_mle, constrained_mle,
                        edges_from_coefficients, selection_adjacency)

ESTIMATORS = ("gelnet", "2s-and", "2s-or", "cr-l2", "cr-minel", "glasso")
_NODEWISE = ("2s-and", "2s-or", "cr-l2", "cr-minel")


def canonical_estimator(name: str) -> str:
    key = name.lower().replace("_", "-")
    if key not in ESTIMATORS:
        raise DomainError(f"unknown estimator {name!r}; valid: {', '.join(ESTIMATORS)}")
    return key


@dataclass(frozen=True)
class EstimatorConfig:
    gelnet: GelnetConfig = field(default_factory=GelnetConfig)
    two_stage: TwoStageConfig = field(default_factory=TwoStageConfig)
    loss: str = "mean"


def effective_params(name: str, params: PenaltyParams) -> PenaltyParams:
    if canonical_estimator(name) == "glasso":
        return PenaltyParams(1.0, params.lam)
    return params


def estimate_from_cov(name: str, S, n: int, params: PenaltyParams,
                      cfg: EstimatorConfig = EstimatorConfig()) -> EstimationResult:
    """Fit one estimator at one penalty point from a divisor-``n`` covariance."""
    name = canonical_estimator(name)
    params = effective_params(name, params)
    S = np.asarray(S, dtype=float)
    if name in ("gelnet", "glasso"):
        return gelnet_estimate(S, params, cfg.gelnet)
    tcfg = cfg.two_stage
    B, rv, conv = nodewise_regressions(S, n, params, loss=cfg.loss,
                                       tol=tcfg.enet_tol, max_iter=tcfg.enet_max_iter)
    if name.startswith("cr-"):
        raw = raw_from_regressions(B, rv)
        theta = symmetrize(raw, name[3:])
        return EstimationResult(theta, params, 1, 0.0, conv,
                                metadata={"estimator": "cr-gelnet", "rule": name[3:],
                                          "positive_definite": is_positive_definite(theta)})
    edges = edges_from_coefficients(B, name[3:])
    res = constrained_mle(S, edges, tcfg.tol, tcfg.max_sweeps)
    return EstimationResult(res.theta_hat, params, res.iterations, res.final_delta,
                            res.converged and conv, w_hat=res.w_hat,
                            metadata={"estimator": "2s-gelnet", "rule": name[3:],
                                      "edges": edges, "jitter": res.metadata["jitter"]})


def estimate(name: str, data: Dataset, params: PenaltyParams,
             cfg: EstimatorConfig = EstimatorConfig()) -> EstimationResult:
    return estimate_from_cov(name, data.covariance().values, data.n, params, cfg)


def grid_alphas(name: str, alphas) -> np.ndarray:
    """glasso ignores the alpha axis; every other estimator scans it."""
    if canonical_estimator(name) == "glasso":
        return np.array([1.0])
    return np.asarray(alphas, dtype=float)


def fit_grid(S, n: int, alphas, lambdas, names, cfg: EstimatorConfig = EstimatorConfig()
             ) -> Iterator[tuple[str, int, int, np.ndarray | None]]:
    """Yield ``(name, i_alpha, i_lambda, theta)`` over the grid.

    ``theta`` is ``None`` when the fit failed (degenerate regression,
    divergence). ``glasso`` yields only ``i_alpha = 0`` (alpha = 1).
    """
    S = np.ascontiguousarray(np.asarray(S, dtype=float))
    names = [canonical_estimator(nm) for nm in names]
    lambdas = np.asarray(lambdas, dtype=float)
    order = np.argsort(-lambdas, kind="stable")
    for name in ("gelnet", "glasso"):
        if name not in names:
            continue
        for ia, alpha in enumerate(grid_alphas(name, alphas)):
            prev = None
            for il in order:
                params = PenaltyParams(float(alpha), float(lambdas[il]))
                try:
                    res = gelnet_estimate(S, params, cfg.gelnet, warm_start=prev)
                    prev = res
                    theta = res.theta_hat.values
                except DomainError:
                    prev, theta = None, None
                yield name, ia, int(il), theta
    nodewise = [nm for nm in names if nm in _NODEWISE]
    if not nodewise:
        return
    tcfg = cfg.two_stage
    cache: dict[bytes, np.ndarray] = {}
    last_w: dict[str, np.ndarray] = {}
    S_mle = S
    if any(nm.startswith("2s-") for nm in nodewise):
        _, eps = initial_inverse(S, cfg.gelnet.jitter)
        if eps > 0:
            S_mle = S + eps * np.eye(S.shape[0])
    for ia, alpha in enumerate(np.asarray(alphas, dtype=float)):
        B = None
        for il in order:
            params = PenaltyParams(float(alpha), float(lambdas[il]))
            B, rv, _ = nodewise_regressions(S, n, params, loss=cfg.loss, tol=tcfg.enet_tol,
                                            max_iter=tcfg.enet_max_iter, B_init=B)
            for name in nodewise:
                if name.startswith("cr-"):
                    try:
                        theta = symmetrize(raw_from_regressions(B, rv), name[3:]).values
                    except DegenerateFitError:
                        theta = None
                else:
                    adj = selection_adjacency(B, name[3:])
                    key = adj.tobytes()
                    if key not in cache:
                        # warm start from the previous pattern's covariance estimate
                        res = _constrained_mle(S_mle, adj, tcfg.tol, tcfg.max_sweeps,
                                               W0=last_w.get(name))
                        last_w[name] = res.w_hat.values
                        cache[key] = res.theta_hat.values
                    theta = cache[key]
                yield name, ia, int(il), theta
