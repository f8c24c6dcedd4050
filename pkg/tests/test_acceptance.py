"""Acceptance criteria, one PASS/FAIL line each.

Criteria 1-8 and 13 are fast and always run. Criteria 9-12 rerun the
simulation protocol at desk scale (10 replicates, 21 x 51 grid) and only run
with ``ENETGRAPH_DESK=1``. The summary is printed at the end of the pytest
session, or directly with ``python tests/test_acceptance.py``.
"""

import os
import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import (cvx_gelnet, enumerate_scores, power_series_shock, random_pd,
                     simulate_ar_garch)
from enetgraph.cli import main as cli_main
from enetgraph.cr_gelnet import cr_raw_estimate
from enetgraph.gelnet import GelnetConfig, gelnet_estimate
from enetgraph.metrics import classification_scores, confusion
from enetgraph.model_core import (Dataset, EdgeSet, PenaltyParams, write_dataset_csv)
from enetgraph.model_select import linear_grid
from enetgraph.net_analysis import shock_diffusion, spectral_radius
from enetgraph.netgen import KINDS, TopologySpec, ground_truth, sample_gaussian
from enetgraph.prewhiten import fit_ar1_garch11
from enetgraph.simulate import SimulationConfig, aggregate, default_jobs, run_simulation
from enetgraph.two_stage import constrained_mle

DESK = os.environ.get("ENETGRAPH_DESK") == "1"
TIGHT = GelnetConfig(delta=1e-8, inner_tol=1e-12, max_sweeps=5000)
RESULTS: dict[int, tuple[str, str, str]] = {}

desk = pytest.mark.skipif(not DESK, reason="desk-scale criterion; set ENETGRAPH_DESK=1")


def record(num: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[num] = (title, "PASS" if ok else "FAIL", detail)
    assert ok, f"criterion {num} ({title}): {detail}"


def summary_lines() -> list[str]:
    lines = []
    for num in range(1, 14):
        missing = "SKIP" if num in (9, 10, 11, 12) and not DESK else "NOT RUN"
        title, status, detail = RESULTS.get(num, (TITLES[num], missing, ""))
        lines.append(f"[{status}] {num:2d}. {title}" + (f": {detail}" if detail else ""))
    return lines


TITLES = {
    1: "gelnet alpha=1 matches convex oracle",
    2: "gelnet stationarity residual",
    3: "constrained MLE moment matching",
    4: "CR lambda=0 inverse consistency",
    5: "metric identities vs enumeration",
    6: "shock solve vs power series",
    7: "simulate byte-identical reruns",
    8: "AR-GARCH parameter recovery",
    9: "band n=1000 BIC accuracy",
    10: "scale-free n=1000 BIC 2S-OR accuracy and F1",
    11: "band n=1000 BIC Frobenius and 2S dominance",
    12: "n=200 CV rank order, 2S best on every topology",
    13: "glasso and gelnet(alpha=1) CLI outputs identical",
}


# -- fast criteria ------------------------------------------------------------

def test_criterion_01_gelnet_oracle():
    rng = np.random.default_rng(101)
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i in range(20):
            p = (3, 4, 5)[i % 3]
            lam = (0.05, 0.1, 0.2)[(i // 3) % 3]
            S = random_pd(rng, p)
            theta = gelnet_estimate(S, PenaltyParams(1.0, lam), TIGHT).theta_hat.values
            worst = max(worst, np.abs(theta - cvx_gelnet(S, 1.0, lam)).max())
    record(1, TITLES[1], worst < 1e-4, f"max entry gap {worst:.2e} (< 1e-4)")


def _stationarity(theta, S, params):
    R = np.linalg.inv(theta) - S - 2 * params.l2 * theta
    off = ~np.eye(len(S), dtype=bool)
    on = off & (theta != 0)
    zero = off & (theta == 0)
    r_on = np.abs(R[on] - params.l1 * np.sign(theta[on])).max(initial=0)
    r_zero = np.maximum(np.abs(R[zero]) - params.l1, 0).max(initial=0)
    return max(r_on, r_zero)


def test_criterion_02_gelnet_stationarity():
    rng = np.random.default_rng(202)
    worst = 0.0
    for alpha in (0.0, 0.5, 1.0):
        for _ in range(5):
            p = int(rng.integers(3, 8))
            S = random_pd(rng, p)
            params = PenaltyParams(alpha, float(rng.uniform(0.05, 0.3)))
            res = gelnet_estimate(S, params, TIGHT)
            worst = max(worst, _stationarity(res.theta_hat.values, S, params))
    record(2, TITLES[2], worst < 1e-5, f"max off-diagonal residual {worst:.2e} (< 1e-5)")


def test_criterion_03_constrained_mle():
    rng = np.random.default_rng(303)
    worst, off_pattern = 0.0, 0
    for _ in range(50):
        p = int(rng.integers(2, 7))
        S = random_pd(rng, p)
        edges = EdgeSet.from_adjacency(np.triu(rng.random((p, p)) < 0.5, 1))
        theta = constrained_mle(S, edges, tol=1e-10).theta_hat.values
        W = np.linalg.inv(theta)
        mask = edges.adjacency() | np.eye(p, dtype=bool)
        worst = max(worst, np.abs(W - S)[mask].max())
        off_pattern += int(np.count_nonzero(theta[~mask]))
    ok = worst < 1e-6 and off_pattern == 0
    record(3, TITLES[3], ok, f"max moment gap {worst:.2e}, nonzero off-pattern entries {off_pattern}")


def test_criterion_04_cr_inverse():
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(20):
        p = int(rng.integers(2, 6))
        x = rng.standard_normal((40, p)) @ (np.eye(p) + 0.3 * rng.standard_normal((p, p)))
        data = Dataset(x)
        raw, _ = cr_raw_estimate(data, PenaltyParams(float(rng.random()), 0.0), tol=1e-14)
        worst = max(worst, np.abs(raw.values - np.linalg.inv(data.covariance().values)).max())
    record(4, TITLES[4], worst < 1e-6, f"max entry gap {worst:.2e} (< 1e-6)")


def test_criterion_05_metrics():
    rng = np.random.default_rng(505)
    mismatches = 0
    for _ in range(100):
        p = int(rng.integers(3, 12))
        t, e = (EdgeSet.from_adjacency(np.triu(rng.random((p, p)) < rng.random(), 1))
                for _ in range(2))
        s = classification_scores(confusion(t, e))
        ref = enumerate_scores(set(t.edges), set(e.edges), p)
        mismatches += any(getattr(s, k) != ref[k] for k in ("accuracy", "f1", "fpr", "tpr"))
    record(5, TITLES[5], mismatches == 0, f"{mismatches} of 100 pairs differ")


def test_criterion_06_shock():
    rng = np.random.default_rng(606)
    worst = 0.0
    for _ in range(20):
        p = int(rng.integers(2, 12))
        P = rng.uniform(-1, 1, (p, p))
        P = (P + P.T) / 2
        np.fill_diagonal(P, 0)
        P *= rng.uniform(0.1, 0.6) / spectral_radius(P)
        e = rng.standard_normal(p)
        worst = max(worst, np.abs(shock_diffusion(P, e) - power_series_shock(P, e, 50)).max())
    record(6, TITLES[6], worst < 1e-8, f"max gap {worst:.2e} (< 1e-8)")


def test_criterion_07_determinism(tmp_path):
    args = ["simulate", "--topologies", ",".join(KINDS), "--replicates", "2", "--n", "120",
            "--p", "10", "--grid-alphas", "3", "--grid-lambdas", "6", "--folds", "3",
            "--seed", "17", "--jobs", "2"]
    codes = [cli_main(args + ["--out", str(tmp_path / run)]) for run in ("a", "b")]
    files = ("aggregate.csv", "replicates.csv", "roc.csv")
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in files)
    record(7, TITLES[7], codes == [0, 0] and same,
           f"exit codes {codes}, {'identical' if same else 'different'} CSV outputs")


def test_criterion_08_ar_garch():
    truth = dict(c=0.0, phi=0.2, omega=0.05, a=0.1, b=0.8)
    r = simulate_ar_garch(20000, seed=808, **truth)
    p = fit_ar1_garch11(r).params
    gaps = {k: abs(getattr(p, k) - truth[k]) for k in ("phi", "a", "b")}
    detail = ", ".join(f"{k} {getattr(p, k):.3f} (true {truth[k]})" for k in gaps)
    record(8, TITLES[8], max(gaps.values()) <= 0.05, detail)


def test_criterion_13_glasso_equals_gelnet(tmp_path):
    gt = ground_truth(TopologySpec("hub", 30, 5), normalize=True)
    data_path = tmp_path / "hub.csv"
    write_dataset_csv(data_path, sample_gaussian(gt.sigma, 1000, 6))
    differing = []
    for lam in ("0.02", "0.05", "0.1"):
        for name in ("gelnet", "glasso"):
            code = cli_main(["estimate", "--data", str(data_path), "--estimator", name,
                             "--alpha", "1", "--lambda", lam,
                             "--out", str(tmp_path / f"{name}-{lam}")])
            assert code == 0
        for f in ("theta.csv", "partial_correlation.csv", "result.json"):
            if (tmp_path / f"gelnet-{lam}" / f).read_bytes() != \
                    (tmp_path / f"glasso-{lam}" / f).read_bytes():
                differing.append(f"{lam}/{f}")
    record(13, TITLES[13], not differing,
           "all files identical at 3 lambdas" if not differing else f"differ: {differing}")


# -- desk-scale criteria ------------------------------------------------------

def _desk_config(topologies, n, criteria, **kw):
    return SimulationConfig(tuple(topologies), replicates=10, n=n, p=30,
                            criteria=tuple(criteria), grid=linear_grid(21, 51), seed=2024, **kw)


def _table(cfg):
    rows = aggregate(run_simulation(cfg, jobs=default_jobs()), cfg)
    return {(r["topology"], r["estimator"], r["criterion"]): r for r in rows}


@pytest.fixture(scope="module")
def bic_1000():
    return _table(_desk_config(("band", "cluster", "scale-free"), 1000, ("bic",)))


@pytest.fixture(scope="module")
def cv_200():
    return _table(_desk_config(KINDS, 200, ("cv",)))


@desk
def test_criterion_09_band_accuracy(bic_1000):
    two_s = bic_1000["band", "2s-and", "bic"]["accuracy_mean"]
    gel = bic_1000["band", "gelnet", "bic"]["accuracy_mean"]
    ok = abs(two_s - 0.9795) <= 0.03 and abs(gel - 0.7099) <= 0.06
    record(9, TITLES[9], ok, f"2S-AND {two_s:.4f} (0.9795 +- 0.03), gelnet {gel:.4f} (0.7099 +- 0.06)")


@desk
def test_criterion_10_scale_free(bic_1000):
    row = bic_1000["scale-free", "2s-or", "bic"]
    acc, f1 = row["accuracy_mean"], row["f1_mean"]
    ok = abs(acc - 0.9962) <= 0.02 and abs(f1 - 0.9734) <= 0.05
    record(10, TITLES[10], ok, f"accuracy {acc:.4f} (0.9962 +- 0.02), F1 {f1:.4f} (0.9734 +- 0.05)")


@desk
def test_criterion_11_frobenius(bic_1000):
    fro = bic_1000["band", "2s-and", "bic"]["frobenius_mean"]
    parts = [f"band 2S-AND {fro:.4f} (0.3612 +- 0.08)"]
    dominated = True
    for topo in ("band", "cluster"):
        f = {e: bic_1000[topo, e, "bic"]["frobenius_mean"]
             for e in ("2s-and", "2s-or", "gelnet", "glasso")}
        dom = max(f["2s-and"], f["2s-or"]) < min(f["gelnet"], f["glasso"])
        dominated &= dom
        parts.append(f"{topo} 2S max {max(f['2s-and'], f['2s-or']):.4f} vs "
                     f"gelnet/glasso min {min(f['gelnet'], f['glasso']):.4f}")
    record(11, TITLES[11], abs(fro - 0.3612) <= 0.08 and dominated, "; ".join(parts))


@desk
def test_criterion_12_rank_order(cv_200):
    losers = []
    for topo in KINDS:
        acc = {e: cv_200[topo, e, "cv"]["accuracy_mean"]
               for e in ("gelnet", "2s-and", "2s-or", "cr-l2", "cr-minel", "glasso")}
        best_2s = max(acc["2s-and"], acc["2s-or"])
        best_other = max(v for k, v in acc.items() if not k.startswith("2s"))
        if best_2s < best_other:
            losers.append(f"{topo} ({best_2s:.4f} < {best_other:.4f})")
    record(12, TITLES[12], not losers,
           "2S best on all 7 topologies" if not losers else "2S not best on " + ", ".join(losers))


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
