"""Network measures, shock diffusion and rolling-window strength.

Graphs are built from a partial-correlation matrix ``P`` by keeping the pairs
with ``|p_ij| > tol``. Degree, distance, eccentricity and clustering are
computed on that unweighted graph; strength sums ``|p_ij|`` (or the signed
values) over the incident edges.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from .estimators import EstimatorConfig, estimate
from .model_core import Dataset, DomainError, partial_correlation
from .model_select import GridSpec, linear_grid, select

ZERO_TOL = 1e-10


class DivergenceError(DomainError):
    """The shock series does not converge (spectral radius of P is at least 1)."""

    def __init__(self, radius: float):
        super().__init__(f"spectral radius of P is {radius:.6g} >= 1; shock series diverges")
        self.radius = radius


@dataclass
class NetworkMeasures:
    mean_degree: float
    mean_distance: float
    mean_eccentricity: float
    mean_clustering: float
    mean_strength: float
    degree: np.ndarray
    eccentricity: np.ndarray
    clustering: np.ndarray
    strength: np.ndarray
    disconnected: bool = False

    def to_json(self) -> dict:
        return {
            "Degree": self.mean_degree,
            "Distance": self.mean_distance,
            "Eccentricity": self.mean_eccentricity,
            "Clustering": self.mean_clustering,
            "Strength": self.mean_strength,
            "disconnected": self.disconnected,
            "per_node": {
                "degree": self.degree.tolist(),
                "eccentricity": self.eccentricity.tolist(),
                "clustering": self.clustering.tolist(),
                "strength": self.strength.tolist(),
            },
        }


def weighted_graph(p_mat, tol: float = ZERO_TOL) -> nx.Graph:
    P = np.asarray(p_mat, dtype=float)
    p = P.shape[0]
    g = nx.Graph()
    g.add_nodes_from(range(p))
    iu, ju = np.nonzero(np.triu(np.abs(P) > tol, k=1))
    g.add_weighted_edges_from((int(i), int(j), float(P[i, j])) for i, j in zip(iu, ju))
    return g


def graph_measures(p_mat, tol: float = ZERO_TOL, signed: bool = False) -> NetworkMeasures:
    """Mean degree, distance, eccentricity, clustering and strength.

    Parameters
    ----------
    p_mat : SymMatrix or array (p, p)
        Partial correlations; the diagonal is ignored.
    tol : float
        Entries with ``|p_ij| <= tol`` are not edges.
    signed : bool
        Sum signed partial correlations for strength instead of absolute ones.

    Notes
    -----
    Distances are averaged over ordered pairs joined by a path, and a node's
    eccentricity is taken within its own component. ``disconnected`` flags a
    graph with more than one component; with no connected pair at all the
    mean distance is 0.
    """
    P = np.asarray(p_mat, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {P.shape}")
    g = weighted_graph(P, tol)
    p = P.shape[0]
    nodes = range(p)
    degree = np.array([g.degree(v) for v in nodes], dtype=float)
    clustering = np.array([nx.clustering(g, v) for v in nodes], dtype=float)
    strength = np.zeros(p)
    for u, v, w in g.edges(data="weight"):
        w = w if signed else abs(w)
        strength[u] += w
        strength[v] += w
    ecc = np.zeros(p)
    dist_sum, pairs = 0, 0
    for src, lengths in nx.all_pairs_shortest_path_length(g):
        ecc[src] = max(lengths.values())
        dist_sum += sum(lengths.values())
        pairs += len(lengths) - 1
    return NetworkMeasures(
        mean_degree=float(degree.mean()),
        mean_distance=dist_sum / pairs if pairs else 0.0,
        mean_eccentricity=float(ecc.mean()),
        mean_clustering=float(clustering.mean()),
        mean_strength=float(strength.mean()),
        degree=degree,
        eccentricity=ecc,
        clustering=clustering,
        strength=strength,
        disconnected=nx.number_connected_components(g) > 1,
    )


def spectral_radius(p_mat) -> float:
    P = np.asarray(p_mat, dtype=float)
    return float(np.max(np.abs(np.linalg.eigvals(P))))


def shock_diffusion(p_mat, e) -> np.ndarray:
    """Steady state ``s = sum_t P^t e``, solved as ``(I - P) s = e``."""
    P = np.asarray(p_mat, dtype=float)
    e = np.asarray(e, dtype=float)
    if e.shape != (P.shape[0],):
        raise DomainError(f"shock vector has shape {e.shape}, expected ({P.shape[0]},)")
    rho = spectral_radius(P)
    if rho >= 1.0:
        raise DivergenceError(rho)
    return np.linalg.solve(np.eye(P.shape[0]) - P, e)


@dataclass(frozen=True)
class RollingConfig:
    estimator: str = "2s-and"
    criterion: str = "bic"
    grid: GridSpec = field(default_factory=lambda: linear_grid(11, 21))
    folds: int = 5
    seed: int = 0
    prewhiten: bool = False
    raw_residuals: bool = False
    signed: bool = False
    estimator_cfg: EstimatorConfig = field(default_factory=EstimatorConfig)


@dataclass(frozen=True)
class RollingPoint:
    window_end: object
    mean_strength: float
    failed: bool = False


def fit_network(data: Dataset, cfg: RollingConfig):
    """Select, estimate and return ``(partial correlations, selection report)``."""
    if cfg.prewhiten:
        from .prewhiten import prewhiten_dataset
        data, _ = prewhiten_dataset(data, raw=cfg.raw_residuals)
    report = select(data, cfg.estimator, cfg.grid, cfg.criterion, cfg.folds, cfg.seed,
                    cfg.estimator_cfg)
    res = estimate(cfg.estimator, data, report.best, cfg.estimator_cfg)
    return partial_correlation(res.theta_hat.values), report


def _window_strength(args) -> tuple[float, bool]:
    data, cfg = args
    try:
        P, _ = fit_network(data, cfg)
        return graph_measures(P, signed=cfg.signed).mean_strength, False
    except (DomainError, np.linalg.LinAlgError, ValueError):
        return float("nan"), True


def rolling_strength(data: Dataset, window: int, shift: int,
                     cfg: RollingConfig = RollingConfig(), jobs: int = 1) -> list[RollingPoint]:
    """Mean node strength on each window ``[start, start + window)``.

    Windows start at ``0, shift, 2*shift, ...`` while they fit in the sample.
    A window whose fit fails is returned with ``failed=True`` and a NaN strength.
    """
    if not 2 <= window <= data.n:
        raise DomainError(f"window must lie in [2, n={data.n}], got {window}")
    if shift < 1:
        raise DomainError(f"shift must be positive, got {shift}")
    starts = list(range(0, data.n - window + 1, shift))
    tasks = [(data.rows(np.arange(s, s + window)), cfg) for s in starts]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_window_strength, tasks))
    else:
        out = [_window_strength(t) for t in tasks]
    points = []
    for s, (val, failed) in zip(starts, out):
        end = s + window - 1
        label = data.index[end] if data.index is not None else end
        points.append(RollingPoint(label, val, failed))
    return points


def write_rolling_csv(points: list[RollingPoint], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window_end", "mean_strength", "failed"])
        for pt in points:
            w.writerow([pt.window_end, repr(float(pt.mean_strength)), int(pt.failed)])


def write_measures_json(m: NetworkMeasures, path: str | Path) -> None:
    Path(path).write_text(json.dumps(m.to_json(), indent=2))
