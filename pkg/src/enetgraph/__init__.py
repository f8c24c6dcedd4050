"""Sparse precision-matrix estimation with elastic-net penalties.

Estimators: graphical elastic net (``gelnet``), its lasso special case
(``glasso``), the two-stage estimator (``2s-and`` / ``2s-or``) and the
conditional-regression estimator (``cr-l2`` / ``cr-minel``).
"""

from .estimators import ESTIMATORS, EstimatorConfig, estimate, estimate_from_cov
from .gelnet import GelnetConfig, gelnet_estimate
from .model_core import (Dataset, DomainError, EdgeSet, EstimationResult, PenaltyParams,
                         SymMatrix, edge_set_of, partial_correlation)
from .model_select import GridSpec, linear_grid, full_grid, select

__version__ = "0.1.0"

__all__ = [
    "ESTIMATORS", "Dataset", "DomainError", "EdgeSet", "EstimationResult", "EstimatorConfig",
    "GelnetConfig", "GridSpec", "PenaltyParams", "SymMatrix", "edge_set_of", "estimate",
    "estimate_from_cov", "gelnet_estimate", "linear_grid", "full_grid",
    "partial_correlation", "select", "__version__",
]
