"""Precision estimation from conditional elastic-net regressions (CR-gelnet).

Each variable is regressed on the others with one shared ``(alpha, lam)``.
Column ``i`` of the raw estimate is ``1/sigma_i^2`` on the diagonal and
``-b_i / sigma_i^2`` off it, where ``sigma_i^2`` is the divisor-``n`` residual
variance. The raw estimate is then symmetrized by averaging (``"l2"``) or by
keeping the smaller-magnitude entry of each pair (``"minel"``).

The symmetrized matrix is not guaranteed to be positive definite; the result
reports this in ``metadata["positive_definite"]`` and never repairs it.
"""

from __future__ import annotations

import numpy as np

from .enet_solver import nodewise_regressions
from .model_core import (Dataset, DomainError, EstimationResult, PenaltyParams, SymMatrix,
                         is_positive_definite)

RULES = ("l2", "minel")


class DegenerateFitError(DomainError):
    """A conditional regression left zero residual variance."""


class AsymEstimate:
    """Square matrix with strictly positive diagonal, not necessarily symmetric."""

    __slots__ = ("values",)

    def __init__(self, values):
        v = np.array(values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {v.shape}")
        if np.any(~(np.diag(v) > 0)):
            raise DomainError("raw estimate must have a strictly positive diagonal")
        v.setflags(write=False)
        self.values = v

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def raw_from_regressions(B: np.ndarray, resid_var: np.ndarray) -> AsymEstimate:
    zero = np.nonzero(resid_var <= 0)[0]
    if zero.size:
        raise DegenerateFitError(f"zero residual variance for variable {int(zero[0])} "
                                 "(perfect collinearity)")
    raw = -B / resid_var[None, :]
    np.fill_diagonal(raw, 1.0 / resid_var)
    return AsymEstimate(raw)


def cr_raw_estimate(data: Dataset, params: PenaltyParams, loss: str = "mean",
                    tol: float = 1e-7, max_iter: int = 10000) -> tuple[AsymEstimate, bool]:
    """Unsymmetrized estimate and whether every regression converged."""
    B, rv, conv = nodewise_regressions(data.covariance().values, data.n, params,
                                       loss=loss, tol=tol, max_iter=max_iter)
    return raw_from_regressions(B, rv), conv


def symmetrize_l2(raw: AsymEstimate) -> SymMatrix:
    v = raw.values
    return SymMatrix(0.5 * (v + v.T), check=False)


def symmetrize_minel(raw: AsymEstimate) -> SymMatrix:
    v = raw.values
    vt = v.T
    # ties go to the upper-triangle element
    upper = np.triu(np.ones_like(v, dtype=bool), k=1)
    take_v = (np.abs(v) < np.abs(vt)) | ((np.abs(v) == np.abs(vt)) & upper)
    out = np.where(take_v, v, vt)
    out = np.where(upper, out, out.T)
    np.fill_diagonal(out, np.diag(v))
    return SymMatrix(out, check=False)


def symmetrize(raw: AsymEstimate, rule: str) -> SymMatrix:
    rule = rule.lower()
    if rule == "l2":
        return symmetrize_l2(raw)
    if rule == "minel":
        return symmetrize_minel(raw)
    raise DomainError(f"unknown symmetrization rule {rule!r}; expected one of {RULES}")


def cr_estimate(data: Dataset, params: PenaltyParams, rule: str = "l2",
                loss: str = "mean") -> EstimationResult:
    raw, conv = cr_raw_estimate(data, params, loss=loss)
    return _result(raw, params, rule, conv)


def _result(raw: AsymEstimate, params: PenaltyParams, rule: str, conv: bool) -> EstimationResult:
    theta = symmetrize(raw, rule)
    return EstimationResult(
        theta_hat=theta,
        params=params,
        iterations=1,
        final_delta=0.0,
        converged=conv,
        metadata={"estimator": "cr-gelnet", "rule": rule.lower(),
                  "positive_definite": is_positive_definite(theta)},
    )
