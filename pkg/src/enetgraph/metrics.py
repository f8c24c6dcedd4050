"""Edge-recovery classification scores, ROC path points and Frobenius distance."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .model_core import DomainError, EdgeSet, SymMatrix


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class Scores(NamedTuple):
    accuracy: float
    f1: float
    precision: float
    recall: float
    fpr: float
    tpr: float


def confusion(truth: EdgeSet, estimate: EdgeSet) -> ConfusionCounts:
    if truth.p != estimate.p:
        raise DomainError(f"node count mismatch: truth p={truth.p}, estimate p={estimate.p}")
    total = truth.p * (truth.p - 1) // 2
    tp = len(truth.edges & estimate.edges)
    fp = len(estimate.edges - truth.edges)
    fn = len(truth.edges - estimate.edges)
    return ConfusionCounts(tp, fp, total - tp - fp - fn, fn)


def _ratio(num: int, den: int) -> float:
    return num / den if den > 0 else 0.0


def classification_scores(c: ConfusionCounts) -> Scores:
    """Accuracy, F1, precision, recall, FPR, TPR.

    Empty denominators give 0 (precision with no predicted edges, recall with
    no true edges, F1 when precision + recall is 0).
    """
    if c.total <= 0:
        raise DomainError("confusion counts are empty")
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Scores(
        accuracy=(c.tp + c.tn) / c.total,
        f1=f1,
        precision=precision,
        recall=recall,
        fpr=_ratio(c.fp, c.fp + c.tn),
        tpr=recall,
    )


@dataclass(frozen=True)
class RocPath:
    points: list[tuple[float, float, float]]
    selected_index: int | None = None

    def write_csv(self, path: str | Path, criterion: str = "", append: bool = False,
                  extra: dict | None = None) -> None:
        extra = extra or {}
        mode = "a" if append else "w"
        with open(path, mode, newline="") as fh:
            w = csv.writer(fh)
            if not append:
                w.writerow([*extra.keys(), "lambda", "fpr", "tpr", "selected", "criterion"])
            for i, (lam, fpr, tpr) in enumerate(self.points):
                w.writerow([*extra.values(), repr(float(lam)), repr(float(fpr)),
                            repr(float(tpr)), int(i == self.selected_index), criterion])


def roc_path(truth: EdgeSet, estimates: Sequence[tuple[float, EdgeSet]],
             selected_index: int | None = None) -> RocPath:
    """One ``(lambda, fpr, tpr)`` point per estimate, at a fixed ``alpha``."""
    pts = []
    for lam, est in estimates:
        s = classification_scores(confusion(truth, est))
        pts.append((float(lam), s.fpr, s.tpr))
    return RocPath(pts, selected_index)


def frobenius_distance(p_true: SymMatrix | np.ndarray, p_hat: SymMatrix | np.ndarray) -> float:
    """Frobenius norm of the difference, summed over both triangles."""
    a = np.asarray(p_true, dtype=float)
    b = np.asarray(p_hat, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))
