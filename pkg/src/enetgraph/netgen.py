"""Ground-truth network structures, their precision matrices, and Gaussian sampling.

Seven topologies are supported. Defaults follow the generators commonly used for
these benchmarks (``huge``-style construction for the first five,
Watts-Strogatz for small-world, a dense core with periphery attachments for
core-periphery):

=============== ================================================================
kind            default structure
=============== ================================================================
scale-free      Barabasi-Albert, one attachment per new node (p-1 edges)
random          Erdos-Renyi, edge probability 3/p
hub             ceil(p/20) groups, one hub per group joined to every member
cluster         ceil(p/20) groups, within-group probability min(1, 6g/p), none between
band            |i - j| <= 3
small-world     ring with 2 neighbours per side, rewiring probability 0.1
core-periphery  ceil(p/3) fully connected core nodes, 2 core links per periphery node
=============== ================================================================
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from .model_core import (Dataset, DomainError, EdgeSet, SymMatrix, edge_set_of,
                         is_positive_definite, write_edges_json, write_matrix_csv,
                         read_edges_json, read_matrix_csv)

KINDS = ("scale-free", "random", "hub", "cluster", "band", "small-world", "core-periphery")
_ALIASES = {k.replace("-", ""): k for k in KINDS}


def canonical_kind(kind: str) -> str:
    key = kind.lower().replace("-", "").replace("_", "")
    if key not in _ALIASES:
        raise DomainError(f"unknown topology {kind!r}; valid kinds: {', '.join(KINDS)}")
    return _ALIASES[key]


@dataclass(frozen=True)
class TopologySpec:
    kind: str
    p: int = 30
    seed: int = 0
    prob: float | None = None
    groups: int | None = None
    bandwidth: int = 3
    ring_degree: int = 2
    rewire: float = 0.1
    core: int | None = None
    core_links: int = 2

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        if self.p < 3:
            raise DomainError(f"p must be at least 3, got {self.p}")
        if self.prob is not None and not 0.0 <= self.prob <= 1.0:
            raise DomainError(f"probability must lie in [0, 1], got {self.prob}")
        if self.kind == "band" and not 1 <= self.bandwidth < self.p:
            raise DomainError(f"bandwidth must lie in [1, p-1], got {self.bandwidth}")
        if self.kind == "small-world":
            if not 1 <= self.ring_degree or 2 * self.ring_degree >= self.p:
                raise DomainError(f"ring degree {self.ring_degree} infeasible for p={self.p}")
            if not 0.0 <= self.rewire <= 1.0:
                raise DomainError(f"rewiring probability must lie in [0, 1], got {self.rewire}")
        if self.kind in ("hub", "cluster") and self.groups is not None:
            if not 1 <= self.groups <= self.p // 2:
                raise DomainError(f"group count {self.groups} infeasible for p={self.p}")
        if self.kind == "core-periphery":
            c = self.core_size
            if not 2 <= c < self.p:
                raise DomainError(f"core size must lie in [2, p-1], got {c}")
            if not 1 <= self.core_links <= c:
                raise DomainError(f"core links must lie in [1, core], got {self.core_links}")

    @property
    def n_groups(self) -> int:
        return self.groups if self.groups is not None else max(1, math.ceil(self.p / 20))

    @property
    def core_size(self) -> int:
        return self.core if self.core is not None else math.ceil(self.p / 3)

    def to_json(self) -> dict:
        return asdict(self)


def _groups(p: int, g: int) -> list[np.ndarray]:
    return [np.asarray(a) for a in np.array_split(np.arange(p), g)]


def generate_structure(spec: TopologySpec) -> EdgeSet:
    """Edge set of the requested topology; deterministic in ``spec.seed``."""
    p, kind = spec.p, spec.kind
    rng = np.random.default_rng(spec.seed)
    edges: set[tuple[int, int]] = set()
    if kind == "scale-free":
        g = nx.barabasi_albert_graph(p, 1, seed=spec.seed)
        edges = set(g.edges())
    elif kind == "random":
        prob = spec.prob if spec.prob is not None else min(1.0, 3.0 / p)
        iu, ju = np.triu_indices(p, k=1)
        keep = rng.random(iu.size) < prob
        edges = set(zip(iu[keep].tolist(), ju[keep].tolist()))
    elif kind == "hub":
        for grp in _groups(p, spec.n_groups):
            hub = int(grp[0])
            edges.update((hub, int(j)) for j in grp[1:])
    elif kind == "cluster":
        g = spec.n_groups
        prob = spec.prob if spec.prob is not None else min(1.0, 6.0 * g / p)
        for grp in _groups(p, g):
            iu, ju = np.triu_indices(grp.size, k=1)
            keep = rng.random(iu.size) < prob
            edges.update(zip(grp[iu[keep]].tolist(), grp[ju[keep]].tolist()))
    elif kind == "band":
        edges = {(i, j) for i in range(p) for j in range(i + 1, min(p, i + spec.bandwidth + 1))}
    elif kind == "small-world":
        g = nx.watts_strogatz_graph(p, 2 * spec.ring_degree, spec.rewire, seed=spec.seed)
        edges = set(g.edges())
    elif kind == "core-periphery":
        c = spec.core_size
        edges = {(i, j) for i in range(c) for j in range(i + 1, c)}
        for v in range(c, p):
            for u in rng.choice(c, size=spec.core_links, replace=False):
                edges.add((int(u), v))
    return EdgeSet(p, edges)


def structure_to_precision(edges: EdgeSet, v: float = 0.3, u: float = 0.1,
                           normalize: bool = False) -> SymMatrix:
    """Positive definite precision matrix with the zero pattern of ``edges``.

    ``Theta0 = v * A`` and ``Theta = Theta0 + (|lambda_min(Theta0)| + 0.1 + u) I``,
    so ``lambda_min(Theta) = 0.1 + u``. With ``normalize=True`` the result is
    rescaled to ``D Theta D`` so that its inverse has unit diagonal (the
    implied covariance is a correlation matrix); the zero pattern is unchanged.
    """
    if not v > 0 or u < 0:
        raise DomainError(f"need v > 0 and u >= 0, got v={v}, u={u}")
    theta0 = v * edges.adjacency().astype(float)
    lam_min = float(np.linalg.eigvalsh(theta0)[0])
    theta = theta0 + (abs(lam_min) + 0.1 + u) * np.eye(edges.p)
    if normalize:
        d = np.sqrt(np.diag(np.linalg.inv(theta)))
        theta = theta * d[:, None] * d[None, :]
    return SymMatrix(theta, check=False)


@dataclass(frozen=True)
class GroundTruth:
    adjacency: EdgeSet
    theta: SymMatrix
    sigma: SymMatrix
    spec: TopologySpec
    v: float = 0.3
    u: float = 0.1
    normalize: bool = False

    def save(self, directory: str | Path) -> list[Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = [d / "adjacency.json", d / "theta.csv", d / "sigma.csv", d / "spec.json"]
        write_edges_json(paths[0], self.adjacency)
        write_matrix_csv(paths[1], self.theta)
        write_matrix_csv(paths[2], self.sigma)
        meta = {"topology": self.spec.to_json(), "v": self.v, "u": self.u,
                "normalize": self.normalize}
        paths[3].write_text(json.dumps(meta, indent=2))
        return paths

    @classmethod
    def load(cls, directory: str | Path) -> "GroundTruth":
        d = Path(directory)
        meta = json.loads((d / "spec.json").read_text())
        return cls(adjacency=read_edges_json(d / "adjacency.json"),
                   theta=read_matrix_csv(d / "theta.csv"),
                   sigma=read_matrix_csv(d / "sigma.csv"),
                   spec=TopologySpec(**meta["topology"]),
                   v=meta["v"], u=meta["u"], normalize=meta["normalize"])


def ground_truth(spec: TopologySpec, v: float = 0.3, u: float = 0.1,
                 normalize: bool = False) -> GroundTruth:
    edges = generate_structure(spec)
    theta = structure_to_precision(edges, v, u, normalize=normalize)
    sigma = np.linalg.inv(theta.values)
    gt = GroundTruth(edges, theta, SymMatrix(sigma, check=False), spec, v, u, normalize)
    assert edge_set_of(theta, 1e-12) == edges
    return gt


def sample_gaussian(sigma: SymMatrix | np.ndarray, n: int, seed: int,
                    labels=None) -> Dataset:
    """``n`` i.i.d. draws from ``N(0, sigma)`` as ``Z L'`` with ``L`` the Cholesky factor."""
    sigma = np.asarray(sigma, dtype=float)
    if not is_positive_definite(sigma):
        raise DomainError("sigma must be positive definite")
    if n < 2:
        raise DomainError(f"need at least 2 observations, got n={n}")
    L = np.linalg.cholesky(sigma)
    z = np.random.default_rng(seed).standard_normal((n, sigma.shape[0]))
    return Dataset(z @ L.T, labels)
