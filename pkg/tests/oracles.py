"""Independent reference computations used by the tests.

None of these call into the package; they re-derive the quantities with
generic tools (a conic solver, dense linear algebra, brute-force enumeration).
"""

from __future__ import annotations

from collections import deque
from itertools import combinations

import cvxpy as cp
import numpy as np

_CLARABEL = dict(solver="CLARABEL", tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)


def random_pd(rng, p: int, n: int | None = None) -> np.ndarray:
    """Sample covariance of ``n`` standard normal rows (PD when n > p)."""
    n = n or 3 * p + 5
    x = rng.standard_normal((n, p)) @ (np.eye(p) + 0.3 * rng.uniform(-1, 1, (p, p)))
    x -= x.mean(axis=0)
    return x.T @ x / n


def cvx_gelnet(S, alpha: float, lam: float) -> np.ndarray:
    """Maximize log det T - tr(S T) - a*l*|T_off|_1 - (1-a)*l*|T_off|_2^2."""
    p = S.shape[0]
    T = cp.Variable((p, p), symmetric=True)
    off = T - cp.diag(cp.diag(T))
    obj = (cp.log_det(T) - cp.trace(S @ T) - alpha * lam * cp.sum(cp.abs(off))
           - (1 - alpha) * lam * cp.sum_squares(off))
    cp.Problem(cp.Maximize(obj)).solve(**_CLARABEL)
    return T.value


def cvx_constrained_mle(S, edges) -> np.ndarray:
    p = S.shape[0]
    T = cp.Variable((p, p), symmetric=True)
    cons = [T[i, j] == 0 for i, j in combinations(range(p), 2) if (i, j) not in edges]
    cp.Problem(cp.Maximize(cp.log_det(T) - cp.trace(S @ T)), cons).solve(**_CLARABEL)
    return T.value


def cvx_block(W11, s12, theta22, alpha, lam) -> np.ndarray:
    """Minimize 1/2 b'W11 b - s12'b + a*l*|b|_1 + (1-a)*l*theta22*|b|^2."""
    b = cp.Variable(len(s12))
    obj = (0.5 * cp.quad_form(b, cp.psd_wrap(W11)) - s12 @ b + alpha * lam * cp.norm1(b)
           + (1 - alpha) * lam * theta22 * cp.sum_squares(b))
    cp.Problem(cp.Minimize(obj)).solve(**_CLARABEL)
    return b.value


def residual_partial_corr(theta) -> np.ndarray:
    """Correlation of the residuals of (x_i, x_j) regressed on the remaining variables."""
    sigma = np.linalg.inv(theta)
    p = sigma.shape[0]
    out = np.zeros((p, p))
    for i, j in combinations(range(p), 2):
        a = [i, j]
        r = [k for k in range(p) if k not in a]
        cond = sigma[np.ix_(a, a)] - sigma[np.ix_(a, r)] @ np.linalg.solve(
            sigma[np.ix_(r, r)], sigma[np.ix_(r, a)])
        out[i, j] = out[j, i] = cond[0, 1] / np.sqrt(cond[0, 0] * cond[1, 1])
    return out


def power_min_eig(M, iters: int = 20000) -> float:
    """Smallest eigenvalue of symmetric M via power iteration on c*I - M."""
    M = np.asarray(M, dtype=float)
    c = np.abs(M).sum(axis=1).max()
    A = c * np.eye(M.shape[0]) - M
    v = np.ones(M.shape[0]) / np.sqrt(M.shape[0])
    mu = 0.0
    for _ in range(iters):
        w = A @ v
        mu_new = v @ w
        v = w / np.linalg.norm(w)
        if abs(mu_new - mu) < 1e-14 * c:
            break
        mu = mu_new
    return c - mu_new


def bfs_distances(adj) -> dict[tuple[int, int], int]:
    adj = np.asarray(adj, dtype=bool)
    p = adj.shape[0]
    out = {}
    for s in range(p):
        dist = {s: 0}
        q = deque([s])
        while q:
            u = q.popleft()
            for v in np.nonzero(adj[u])[0]:
                if v not in dist:
                    dist[int(v)] = dist[u] + 1
                    q.append(int(v))
        for t, d in dist.items():
            if t != s:
                out[s, t] = d
    return out


def power_series_shock(P, e, terms: int = 50) -> np.ndarray:
    s = np.zeros_like(e, dtype=float)
    term = np.asarray(e, dtype=float)
    for _ in range(terms + 1):
        s = s + term
        term = P @ term
    return s


def enumerate_scores(truth: set, est: set, p: int) -> dict:
    tp = fp = tn = fn = 0
    for i in range(p):
        for j in range(i + 1, p):
            t, e = (i, j) in truth, (i, j) in est
            tp += t and e
            fp += e and not t
            fn += t and not e
            tn += not t and not e
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return {"tp": tp, "fp": fp, "tn": tn, "fn": fn,
            "accuracy": (tp + tn) / (tp + fp + tn + fn),
            "precision": prec, "recall": rec,
            "f1": 2 * prec * rec / (prec + rec) if prec + rec else 0.0,
            "fpr": fp / (fp + tn) if fp + tn else 0.0, "tpr": rec}


def simulate_ar_garch(T: int, c, phi, omega, a, b, seed: int, burn: int = 500) -> np.ndarray:
    """Plain-Python AR(1)-GARCH(1,1) path with Gaussian innovations."""
    z = np.random.default_rng(seed).standard_normal(T + burn)
    r = np.empty(T + burn)
    s2, eps, prev = omega / (1 - a - b), 0.0, c / (1 - phi)
    for t in range(T + burn):
        s2 = omega + a * eps * eps + b * s2
        eps = np.sqrt(s2) * z[t]
        r[t] = c + phi * prev + eps
        prev = r[t]
    return r[burn:]
