"""Penalty grids, BIC and k-fold cross-validation scores, and optimum selection."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimators import (EstimatorConfig, canonical_estimator, estimate_from_cov, fit_grid,
                         grid_alphas)
from .model_core import (Dataset, DomainError, PenaltyParams, SymMatrix, log_likelihood,
                         sample_covariance)

TIE_RTOL = 1e-12
CRITERIA = ("bic", "cv")


class SelectionError(DomainError):
    """No grid point has a finite score."""


@dataclass(frozen=True)
class GridSpec:
    alphas: tuple[float, ...]
    lambdas: tuple[float, ...]

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        lam = np.asarray(self.lambdas, dtype=float)
        if a.size == 0 or lam.size == 0:
            raise DomainError("grid axes must be non-empty")
        if np.any(np.diff(a) <= 0) or np.any(np.diff(lam) <= 0):
            raise DomainError("grid values must be strictly ascending")
        if a[0] < 0 or a[-1] > 1 or lam[0] < 0:
            raise DomainError("alphas must lie in [0, 1] and lambdas be nonnegative")
        object.__setattr__(self, "alphas", tuple(float(x) for x in a))
        object.__setattr__(self, "lambdas", tuple(float(x) for x in lam))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.alphas), len(self.lambdas)

    def __len__(self) -> int:
        return len(self.alphas) * len(self.lambdas)


def linear_grid(n_alphas: int = 41, n_lambdas: int = 101, lambda_max: float = 0.4) -> GridSpec:
    return GridSpec(tuple(np.linspace(0.0, 1.0, n_alphas)),
                    tuple(np.linspace(0.0, lambda_max, n_lambdas)))


def full_grid() -> GridSpec:
    """41 alphas on [0, 1] by 101 lambdas on [0, 0.4]."""
    return linear_grid(41, 101, 0.4)


def bic_score(theta_hat, S, n: int, tol: float = 1e-10) -> float:
    """``-n [log det(Theta) - trace(S Theta)] + log(n) * k``, ``k`` = edge count.

    Non positive definite estimates score ``+inf``.
    """
    theta = np.asarray(theta_hat, dtype=float)
    ll = log_likelihood(theta, np.asarray(S, dtype=float))
    if not np.isfinite(ll):
        return np.inf
    k = int(np.count_nonzero(np.abs(np.triu(theta, k=1)) > tol))
    return float(-n * ll + np.log(n) * k)


def fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle of ``range(n)`` cut into ``folds`` contiguous blocks."""
    if folds < 2 or n < folds:
        raise DomainError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(b) for b in np.array_split(perm, folds)]


def _fold_covariances(x: np.ndarray, folds: int, seed: int):
    n = x.shape[0]
    out = []
    for test in fold_indices(n, folds, seed):
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        train = x[mask]
        mu = train.mean(axis=0)
        out.append((sample_covariance(train).values, train.shape[0],
                    sample_covariance(x[test], center=mu).values))
    return out


def heldout_loss(theta, S_test) -> float:
    """Negative Gaussian predictive log-likelihood ``-[log det - trace(S_test Theta)]``."""
    ll = log_likelihood(np.asarray(theta, dtype=float), np.asarray(S_test, dtype=float))
    return -ll if np.isfinite(ll) else np.inf


def cv_score(data: Dataset, estimator: str, params: PenaltyParams, folds: int = 5,
             seed: int = 0, cfg: EstimatorConfig = EstimatorConfig()) -> float:
    """Mean held-out loss over ``folds`` folds; ``+inf`` if any fold fails."""
    losses = []
    for S_tr, n_tr, S_te in _fold_covariances(data.values, folds, seed):
        try:
            res = estimate_from_cov(estimator, S_tr, n_tr, params, cfg)
        except DomainError:
            return np.inf
        losses.append(heldout_loss(res.theta_hat.values, S_te))
    return float(np.mean(losses))


def select_best(scores, grid: GridSpec) -> tuple[PenaltyParams, tuple[int, int]]:
    """Grid point with the minimal score.

    Scores within ``1e-12`` (relative) of the minimum count as ties; among them
    the smallest alpha wins, then the smallest lambda.
    """
    sc = np.asarray(scores, dtype=float)
    finite = np.isfinite(sc)
    if not finite.any():
        raise SelectionError("all grid scores are infinite")
    m = sc[finite].min()
    cutoff = m + TIE_RTOL * max(1.0, abs(m))
    ia, il = np.argwhere(finite & (sc <= cutoff))[0]
    return PenaltyParams(grid.alphas[ia], grid.lambdas[il]), (int(ia), int(il))


@dataclass
class SelectionReport:
    estimator: str
    criterion: str
    grid: GridSpec
    scores: np.ndarray
    best: PenaltyParams
    best_index: tuple[int, int]
    folds: int | None = None
    seed: int | None = None
    tie_count: int = 1

    def to_json(self) -> dict:
        return {
            "estimator": self.estimator,
            "criterion": self.criterion,
            "alphas": list(self.grid.alphas),
            "lambdas": list(self.grid.lambdas),
            "scores": [None if not np.isfinite(v) else float(v) for v in self.scores.ravel()],
            "scores_shape": list(self.scores.shape),
            "best": self.best.to_dict(),
            "best_index": list(self.best_index),
            "tied_optima": self.tie_count,
            "tie_break": "minimum alpha, then minimum lambda",
            "folds": self.folds,
            "seed": self.seed,
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))


def _tie_count(scores: np.ndarray) -> int:
    finite = np.isfinite(scores)
    m = scores[finite].min()
    return int(np.count_nonzero(finite & (scores <= m + TIE_RTOL * max(1.0, abs(m)))))


def _grid_chunk(task):
    S, n, alphas, offset, lambdas, names, cfg, S_te = task
    out = []
    for nm, ia, il, theta in fit_grid(S, n, alphas, lambdas, names, cfg):
        ia = ia if nm == "glasso" else ia + offset
        if S_te is None:
            out.append((nm, ia, il, theta))
        else:
            out.append((nm, ia, il, np.inf if theta is None else heldout_loss(theta, S_te)))
    return out


def _grid_tasks(S, n, grid: GridSpec, names, cfg, S_te, jobs: int):
    """Split the alpha axis into at most ``jobs`` contiguous chunks."""
    chunks = np.array_split(np.arange(len(grid.alphas)), max(1, min(jobs, len(grid.alphas))))
    tasks = []
    for k, idx in enumerate(chunks):
        nms = [nm for nm in names if nm != "glasso" or k == 0]
        tasks.append((S, n, [grid.alphas[i] for i in idx], int(idx[0]), grid.lambdas, nms,
                      cfg, S_te))
    return tasks


def _run_tasks(tasks, jobs: int):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_grid_chunk, tasks))
    return [_grid_chunk(t) for t in tasks]


def score_grid(data: Dataset, estimators, grid: GridSpec, criterion: str = "bic",
               folds: int = 5, seed: int = 0, cfg: EstimatorConfig = EstimatorConfig(),
               keep_thetas: bool = False, jobs: int = 1):
    """Score every grid point for each estimator.

    Returns ``{name: scores}`` and, with ``keep_thetas`` and BIC, also the full-data
    estimates ``{name: {(ia, il): theta}}``. With ``jobs > 1`` alpha chunks (and
    CV folds) run in worker processes; the scores do not depend on ``jobs``
    beyond solver tolerance, since warm starts only run along lambda.
    """
    criterion = criterion.lower()
    if criterion not in CRITERIA:
        raise DomainError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    names = [canonical_estimator(nm) for nm in estimators]
    scores = {nm: np.full((len(grid_alphas(nm, grid.alphas)), len(grid.lambdas)), np.inf)
              for nm in names}
    thetas: dict[str, dict] = {nm: {} for nm in names}
    if criterion == "bic":
        S = data.covariance().values
        for chunk in _run_tasks(_grid_tasks(S, data.n, grid, names, cfg, None, jobs), jobs):
            for nm, ia, il, theta in chunk:
                if theta is None:
                    continue
                scores[nm][ia, il] = bic_score(theta, S, data.n)
                if keep_thetas:
                    thetas[nm][ia, il] = theta
    else:
        sums = {nm: np.zeros_like(scores[nm]) for nm in names}
        tasks = []
        for S_tr, n_tr, S_te in _fold_covariances(data.values, folds, seed):
            tasks += _grid_tasks(S_tr, n_tr, grid, names, cfg, S_te, max(1, jobs // folds))
        for chunk in _run_tasks(tasks, jobs):
            for nm, ia, il, loss in chunk:
                sums[nm][ia, il] += loss
        scores = {nm: sums[nm] / folds for nm in names}
    return scores, thetas


def select(data: Dataset, estimator: str, grid: GridSpec, criterion: str = "bic",
           folds: int = 5, seed: int = 0, cfg: EstimatorConfig = EstimatorConfig(),
           jobs: int = 1) -> SelectionReport:
    name = canonical_estimator(estimator)
    scores, _ = score_grid(data, [name], grid, criterion, folds, seed, cfg, jobs=jobs)
    return make_report(name, criterion, grid, scores[name], folds, seed)


def make_report(name: str, criterion: str, grid: GridSpec, scores: np.ndarray,
                folds: int, seed: int) -> SelectionReport:
    g = GridSpec(tuple(grid_alphas(name, grid.alphas)), grid.lambdas)
    best, idx = select_best(scores, g)
    cv = criterion.lower() == "cv"
    return SelectionReport(name, criterion.lower(), g, scores, best, idx,
                           folds if cv else None, seed if cv else None, _tie_count(scores))
