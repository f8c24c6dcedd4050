"""Replicated simulation study: generate, sample, select, score.

For every topology and replicate a fresh ground truth and Gaussian sample are
drawn from seeds derived with :class:`numpy.random.SeedSequence` from
``(seed, topology index, replicate)``. Each estimator is tuned on the grid by
each requested criterion, and the selected estimate is scored against the
truth. Replicates are independent tasks and may run in separate processes;
results are assembled in task order, so outputs do not depend on ``jobs``.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimators import EstimatorConfig, canonical_estimator, fit_grid, grid_alphas
from .metrics import classification_scores, confusion, frobenius_distance, roc_path
from .model_core import DomainError, edge_set_of, partial_correlation
from .model_select import (CRITERIA, GridSpec, _fold_covariances, bic_score, heldout_loss,
                           linear_grid, make_report, SelectionError)
from .netgen import TopologySpec, canonical_kind, ground_truth, sample_gaussian

JOBS_ENV = "ENETGRAPH_JOBS"
METRICS = ("accuracy", "f1", "precision", "recall", "fpr", "tpr", "frobenius")
MARKERS = {"bic": "o", "cv": "x"}


def default_jobs() -> int:
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"{JOBS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SimulationConfig:
    topologies: tuple[str, ...] = ("band",)
    replicates: int = 30
    n: int = 1000
    p: int = 30
    estimators: tuple[str, ...] = ("gelnet", "2s-and", "2s-or", "cr-l2", "cr-minel", "glasso")
    criteria: tuple[str, ...] = ("bic", "cv")
    grid: GridSpec = field(default_factory=lambda: linear_grid(21, 51))
    folds: int = 5
    seed: int = 0
    v: float = 0.3
    u: float = 0.1
    normalize: bool = True
    estimator_cfg: EstimatorConfig = field(default_factory=EstimatorConfig)

    def __post_init__(self):
        object.__setattr__(self, "topologies", tuple(canonical_kind(k) for k in self.topologies))
        object.__setattr__(self, "estimators",
                           tuple(canonical_estimator(e) for e in self.estimators))
        crit = tuple(c.lower() for c in self.criteria)
        for c in crit:
            if c not in CRITERIA:
                raise DomainError(f"unknown criterion {c!r}; expected one of {CRITERIA}")
        object.__setattr__(self, "criteria", crit)
        if self.replicates < 1:
            raise DomainError("replicates must be at least 1")


def replicate_seeds(seed: int, topo_index: int, replicate: int) -> tuple[int, int]:
    """``(graph seed, sample seed)`` for one replicate."""
    a, b = np.random.SeedSequence([seed, topo_index, replicate]).generate_state(2)
    return int(a), int(b)


@dataclass
class ReplicateResult:
    topology: str
    replicate: int
    graph_seed: int
    data_seed: int
    rows: list[dict]
    roc: list[dict]
    error: str | None = None


def _run_replicate(task) -> ReplicateResult:
    cfg, ti, rep = task
    kind = cfg.topologies[ti]
    gseed, dseed = replicate_seeds(cfg.seed, ti, rep)
    try:
        gt = ground_truth(TopologySpec(kind, cfg.p, gseed), cfg.v, cfg.u, cfg.normalize)
        data = sample_gaussian(gt.sigma, cfg.n, dseed)
        rows, roc = _score_replicate(cfg, gt, data)
    except (DomainError, np.linalg.LinAlgError) as exc:
        return ReplicateResult(kind, rep, gseed, dseed, [], [], f"{type(exc).__name__}: {exc}")
    return ReplicateResult(kind, rep, gseed, dseed, rows, roc)


def _score_replicate(cfg: SimulationConfig, gt, data):
    grid, names, ecfg = cfg.grid, list(cfg.estimators), cfg.estimator_cfg
    S = data.covariance().values
    shapes = {nm: (len(grid_alphas(nm, grid.alphas)), len(grid.lambdas)) for nm in names}
    thetas = {nm: {} for nm in names}
    bic = {nm: np.full(shapes[nm], np.inf) for nm in names}
    for nm, ia, il, theta in fit_grid(S, data.n, grid.alphas, grid.lambdas, names, ecfg):
        if theta is not None:
            thetas[nm][ia, il] = theta
            bic[nm][ia, il] = bic_score(theta, S, data.n)
    scores = {}
    if "bic" in cfg.criteria:
        scores["bic"] = bic
    if "cv" in cfg.criteria:
        sums = {nm: np.zeros(shapes[nm]) for nm in names}
        for S_tr, n_tr, S_te in _fold_covariances(data.values, cfg.folds, cfg.seed):
            for nm, ia, il, theta in fit_grid(S_tr, n_tr, grid.alphas, grid.lambdas, names, ecfg):
                sums[nm][ia, il] += np.inf if theta is None else heldout_loss(theta, S_te)
        scores["cv"] = {nm: sums[nm] / cfg.folds for nm in names}
    truth_pc = partial_correlation(gt.theta).values
    rows, roc = [], []
    for crit in cfg.criteria:
        for nm in names:
            row = {"estimator": nm, "criterion": crit}
            try:
                rep = make_report(nm, crit, grid, scores[crit][nm], cfg.folds, cfg.seed)
            except SelectionError as exc:
                rows.append({**row, "error": str(exc)})
                continue
            ia, il = rep.best_index
            theta = thetas[nm][ia, il]
            s = classification_scores(confusion(gt.adjacency, edge_set_of(theta)))
            try:
                fro = frobenius_distance(truth_pc, partial_correlation(theta).values)
            except DomainError:
                fro = math.nan
            rows.append({**row, **s._asdict(), "frobenius": fro,
                         "alpha": rep.best.alpha, "lambda": rep.best.lam})
            path = [(grid.lambdas[j], edge_set_of(thetas[nm][ia, j]))
                    for j in range(len(grid.lambdas)) if (ia, j) in thetas[nm]]
            sel = next(k for k, (lam, _) in enumerate(path) if lam == rep.best.lam)
            for k, (lam, fpr, tpr) in enumerate(roc_path(gt.adjacency, path, sel).points):
                roc.append({"estimator": nm, "alpha": rep.best.alpha, "lambda": lam,
                            "fpr": fpr, "tpr": tpr, "selected": int(k == sel),
                            "criterion": MARKERS[crit]})
    return rows, roc


def run_simulation(cfg: SimulationConfig, jobs: int = 1) -> list[ReplicateResult]:
    tasks = [(cfg, ti, rep) for ti in range(len(cfg.topologies)) for rep in range(cfg.replicates)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_replicate, tasks))
    return [_run_replicate(t) for t in tasks]


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def aggregate(results: list[ReplicateResult], cfg: SimulationConfig) -> list[dict]:
    """Mean and sample standard deviation per (topology, estimator, criterion).

    The standard deviation is left empty with fewer than two successes.
    """
    out = []
    for kind in cfg.topologies:
        for crit in cfg.criteria:
            for nm in cfg.estimators:
                cells = [r for res in results if res.topology == kind
                         for r in res.rows if r["estimator"] == nm and r["criterion"] == crit]
                ok = [r for r in cells if "error" not in r]
                failed = sum(1 for res in results if res.topology == kind and res.error) \
                    + len(cells) - len(ok)
                row = {"topology": kind, "estimator": nm, "criterion": crit,
                       "n_success": len(ok), "n_failed": failed}
                for m in METRICS + ("alpha", "lambda"):
                    vals = np.array([r[m] for r in ok], dtype=float)
                    vals = vals[np.isfinite(vals)]
                    row[f"{m}_mean"] = float(vals.mean()) if vals.size else None
                    row[f"{m}_std"] = float(vals.std(ddof=1)) if vals.size > 1 else None
                out.append(row)
    return out


def _write_rows(path: Path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def write_outputs(results: list[ReplicateResult], cfg: SimulationConfig,
                  out_dir: str | Path) -> dict[str, Path]:
    """Write ``aggregate.csv``, ``replicates.csv`` and ``roc.csv``; return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"aggregate": out / "aggregate.csv", "replicates": out / "replicates.csv",
             "roc": out / "roc.csv"}
    agg = aggregate(results, cfg)
    _write_rows(paths["aggregate"], agg, list(agg[0].keys()) if agg else [])
    base = ["topology", "replicate", "graph_seed", "data_seed"]
    rep_rows, roc_rows = [], []
    for res in results:
        head = {"topology": res.topology, "replicate": res.replicate,
                "graph_seed": res.graph_seed, "data_seed": res.data_seed}
        if res.error:
            rep_rows.append({**head, "error": res.error})
        rep_rows.extend({**head, **r} for r in res.rows)
        roc_rows.extend({**head, **r} for r in res.roc)
    _write_rows(paths["replicates"], rep_rows,
                base + ["estimator", "criterion", *METRICS, "alpha", "lambda", "error"])
    _write_rows(paths["roc"], roc_rows,
                base + ["estimator", "alpha", "lambda", "fpr", "tpr", "selected", "criterion"])
    return paths
