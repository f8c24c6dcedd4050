"""Shared domain types and precision / partial-correlation / edge-set conversions."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

ZERO_TOL = 1e-10
_ASYM_RTOL = 1e-8


class DomainError(ValueError):
    """Raised when an input violates a mathematical precondition."""


class SymMatrix:
    """Immutable dense symmetric matrix.

    Construction symmetrizes by averaging ``(m + m.T) / 2`` so that the stored
    values are bit-exactly symmetric. Inputs whose asymmetry exceeds ``1e-8``
    relative to their largest entry are rejected.
    """

    __slots__ = ("_values",)

    def __init__(self, values: Any, *, check: bool = True):
        m = np.array(values, dtype=float, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DomainError(f"expected a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("matrix contains non-finite entries")
        if check:
            scale = max(float(np.max(np.abs(m))), 1.0)
            asym = float(np.max(np.abs(m - m.T)))
            if asym > _ASYM_RTOL * scale:
                raise DomainError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        self._values = m

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def dim(self) -> int:
        return self._values.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._values
        return self._values.astype(dtype)

    def __getitem__(self, idx):
        return self._values[idx]

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SymMatrix):
            return np.array_equal(self._values, other._values)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._values.tobytes())

    def __repr__(self) -> str:
        return f"SymMatrix(dim={self.dim})"

    @classmethod
    def identity(cls, p: int) -> "SymMatrix":
        return cls(np.eye(p))


@dataclass(frozen=True)
class PenaltyParams:
    """Elastic-net penalty pair: ``alpha`` mixes l1/l2, ``lam`` scales the total."""

    alpha: float
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.lam >= 0.0:
            raise DomainError(f"lambda must be nonnegative, got {self.lam}")

    @property
    def l1(self) -> float:
        return self.alpha * self.lam

    @property
    def l2(self) -> float:
        return (1.0 - self.alpha) * self.lam

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "lambda": self.lam}


class EdgeSet:
    """Set of unordered node pairs ``(i, j)`` with ``0 <= i < j < p``."""

    __slots__ = ("p", "edges")

    def __init__(self, p: int, edges: Iterable[Sequence[int]] = ()):
        if p < 1:
            raise DomainError(f"node count must be positive, got {p}")
        normalized = set()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise DomainError(f"self-loop ({i}, {i}) not allowed")
            if i > j:
                i, j = j, i
            if i < 0 or j >= p:
                raise DomainError(f"edge ({i}, {j}) out of range for p={p}")
            normalized.add((i, j))
        self.p = p
        self.edges = frozenset(normalized)

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return iter(sorted(self.edges))

    def __contains__(self, pair) -> bool:
        i, j = pair
        return (min(i, j), max(i, j)) in self.edges

    def __eq__(self, other: object) -> bool:
        if isinstance(other, EdgeSet):
            return self.p == other.p and self.edges == other.edges
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.p, self.edges))

    def __le__(self, other: "EdgeSet") -> bool:
        return self.p == other.p and self.edges <= other.edges

    def __repr__(self) -> str:
        return f"EdgeSet(p={self.p}, n_edges={len(self)})"

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.p, self.p), dtype=bool)
        for i, j in self.edges:
            a[i, j] = a[j, i] = True
        return a

    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "EdgeSet":
        adj = np.asarray(adj)
        iu, ju = np.nonzero(np.triu(adj != 0, k=1))
        return cls(adj.shape[0], zip(iu.tolist(), ju.tolist()))

    @classmethod
    def complete(cls, p: int) -> "EdgeSet":
        return cls(p, ((i, j) for i in range(p) for j in range(i + 1, p)))

    def to_json(self) -> dict:
        return {"p": self.p, "edges": [list(e) for e in self]}

    @classmethod
    def from_json(cls, obj: dict) -> "EdgeSet":
        return cls(int(obj["p"]), obj["edges"])


@dataclass(frozen=True)
class EstimationResult:
    """Output of any precision estimator.

    ``metadata`` carries estimator-specific extras (selected edge set, PD flag,
    symmetrization rule, ...).
    """

    theta_hat: SymMatrix
    params: PenaltyParams
    iterations: int
    final_delta: float
    converged: bool
    w_hat: SymMatrix | None = None
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        meta = {}
        for k, v in self.metadata.items():
            if isinstance(v, np.ndarray):
                continue  # solver state (warm-start coefficients), not part of the record
            meta[k] = v.to_json() if isinstance(v, EdgeSet) else v
        return {
            "params": self.params.to_dict(),
            "iterations": int(self.iterations),
            "final_delta": float(self.final_delta),
            "converged": bool(self.converged),
            "positive_definite": bool(is_positive_definite(self.theta_hat)),
            "metadata": meta,
        }


class Dataset:
    """``n x p`` matrix of observations with optional column labels and row index."""

    __slots__ = ("values", "labels", "index")

    def __init__(self, values: Any, labels: Sequence[str] | None = None,
                 index: Sequence[Any] | None = None):
        x = np.array(values, dtype=float, copy=True)
        if x.ndim != 2:
            raise DomainError(f"dataset must be 2-D, got {x.ndim}-D")
        n, p = x.shape
        if n < 2 or p < 2:
            raise DomainError(f"dataset needs n >= 2 and p >= 2, got n={n}, p={p}")
        if not np.all(np.isfinite(x)):
            raise DomainError("dataset contains non-finite entries")
        if labels is not None and len(labels) != p:
            raise DomainError(f"{len(labels)} labels for {p} columns")
        if index is not None and len(index) != n:
            raise DomainError(f"{len(index)} index entries for {n} rows")
        x.setflags(write=False)
        self.values = x
        self.labels = list(labels) if labels is not None else None
        self.index = list(index) if index is not None else None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def rows(self, idx) -> "Dataset":
        index = None if self.index is None else [self.index[i] for i in np.arange(self.n)[idx]]
        return Dataset(self.values[idx], self.labels, index)

    def covariance(self) -> SymMatrix:
        """Sample covariance with divisor ``n``."""
        return sample_covariance(self.values)


def sample_covariance(x: np.ndarray, center: np.ndarray | None = None) -> SymMatrix:
    x = np.asarray(x, dtype=float)
    mu = x.mean(axis=0) if center is None else center
    xc = x - mu
    return SymMatrix(xc.T @ xc / x.shape[0], check=False)


def partial_correlation(theta: SymMatrix | np.ndarray) -> SymMatrix:
    """Partial correlations ``-theta_ij / sqrt(theta_ii theta_jj)`` with zero diagonal."""
    t = np.asarray(theta, dtype=float)
    d = np.diag(t)
    bad = np.nonzero(~(d > 0))[0]
    if bad.size:
        raise DomainError(f"nonpositive diagonal entry at index {int(bad[0])}")
    pc = -t / np.sqrt(np.outer(d, d))
    np.fill_diagonal(pc, 0.0)
    return SymMatrix(pc, check=False)


def edge_set_of(theta: SymMatrix | np.ndarray, tol: float = ZERO_TOL) -> EdgeSet:
    """Edges ``(i, j)`` with ``|theta_ij| > tol``."""
    t = np.asarray(theta, dtype=float)
    return EdgeSet.from_adjacency(np.abs(t) > tol)


def is_positive_definite(m: SymMatrix | np.ndarray) -> bool:
    try:
        np.linalg.cholesky(np.asarray(m, dtype=float))
    except np.linalg.LinAlgError:
        return False
    return True


def log_likelihood(theta: np.ndarray, s: np.ndarray) -> float:
    """``log det(theta) - trace(S theta)``; ``-inf`` when theta is not PD."""
    sign, logdet = np.linalg.slogdet(theta)
    if sign <= 0:
        return -np.inf
    return float(logdet - np.sum(s * theta))


# -- file formats -------------------------------------------------------------

def write_matrix_csv(path: str | Path, m: SymMatrix | np.ndarray) -> None:
    np.savetxt(path, np.asarray(m, dtype=float), delimiter=",", fmt="%.17g")


def read_matrix_csv(path: str | Path) -> SymMatrix:
    return SymMatrix(np.loadtxt(path, delimiter=",", ndmin=2))


def write_edges_json(path: str | Path, edges: EdgeSet) -> None:
    Path(path).write_text(json.dumps(edges.to_json()))


def read_edges_json(path: str | Path) -> EdgeSet:
    return EdgeSet.from_json(json.loads(Path(path).read_text()))


class CsvParseError(DomainError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


_INDEX_NAMES = {"", "date", "time", "index", "t"}


def read_dataset_csv(path: str | Path) -> Dataset:
    """Read observations with a header row of labels.

    A leading column is taken as the row index when its header is empty or
    one of ``date``, ``time``, ``index``, ``t``, or when its first value is
    not numeric.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvParseError(path, 1, "empty file")
    header = [h.strip() for h in rows[0]]
    body = [(i + 2, r) for i, r in enumerate(rows[1:]) if any(c.strip() for c in r)]
    if not body:
        raise CsvParseError(path, 2, "no data rows")
    has_index = header[0].lower() in _INDEX_NAMES
    if not has_index:
        try:
            float(body[0][1][0])
        except ValueError:
            has_index = True
    labels = header[1:] if has_index else header
    index, values = [], []
    for line, r in body:
        if len(r) != len(header):
            raise CsvParseError(path, line, f"expected {len(header)} fields, found {len(r)}")
        cells = r[1:] if has_index else r
        try:
            values.append([float(c) for c in cells])
        except ValueError as exc:
            raise CsvParseError(path, line, str(exc)) from None
        if has_index:
            index.append(r[0])
    try:
        return Dataset(np.array(values), labels, index if has_index else None)
    except DomainError as exc:
        raise CsvParseError(path, 1, str(exc)) from None


def write_dataset_csv(path: str | Path, data: Dataset) -> None:
    labels = data.labels or [f"x{j}" for j in range(data.p)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow((["index"] if data.index is not None else []) + labels)
        for i in range(data.n):
            row = [repr(float(v)) for v in data.values[i]]
            w.writerow(([data.index[i]] if data.index is not None else []) + row)
