"""Command-line interface: ``enetgraph {generate,estimate,select,simulate,analyze}``.

Exit codes: 0 success, 1 runtime or convergence failure, 2 usage error.
Every command writes ``manifest.json`` next to its outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import ESTIMATORS, EstimatorConfig, canonical_estimator, estimate
from .model_core import (Dataset, DomainError, EstimationResult, PenaltyParams,
                         partial_correlation, read_dataset_csv, write_dataset_csv,
                         write_edges_json, write_matrix_csv)
from .model_select import GridSpec, linear_grid, select
from .netgen import KINDS, TopologySpec, canonical_kind, ground_truth, sample_gaussian
from .simulate import SimulationConfig, default_jobs, run_simulation, write_outputs

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    config: dict
    seeds: dict
    started: str
    finished: str = ""
    outputs: list[str] = field(default_factory=list)
    version: str = __version__

    def write(self, out_dir: Path) -> Path:
        self.finished = _now()
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, default=str))
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# -- argument types -----------------------------------------------------------

def _kind(s: str) -> str:
    try:
        return canonical_kind(s)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _estimator(s: str) -> str:
    key = s.lower().replace("_", "-")
    if key in ("2s", "cr"):
        return key
    try:
        return canonical_estimator(s)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _strict_estimator(s: str) -> str:
    try:
        return canonical_estimator(s)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _criterion(s: str) -> str:
    if s.lower() not in ("bic", "cv"):
        raise argparse.ArgumentTypeError(f"unknown criterion {s!r}; expected bic or cv")
    return s.lower()


def _csv_list(conv):
    def parse(s: str):
        return [conv(x.strip()) for x in s.split(",") if x.strip()]
    return parse


def _resolve_estimator(name: str, rule: str | None) -> str:
    if name in ("2s", "cr"):
        if rule is None:
            raise UsageError(f"estimator {name!r} needs --rule")
        return canonical_estimator(f"{name}-{rule}")
    if rule is not None and not name.endswith(rule.lower()):
        raise UsageError(f"--rule {rule} conflicts with estimator {name!r}")
    return name


def _load_data(path: str, standardize: bool) -> Dataset:
    data = read_dataset_csv(path)
    if standardize:
        x = data.values - data.values.mean(axis=0)
        data = Dataset(x / x.std(axis=0), data.labels, data.index)
    return data


def _grid(args) -> GridSpec:
    return linear_grid(args.grid_alphas, args.grid_lambdas, args.lambda_max)


def _write_result(out: Path, res: EstimationResult, name: str) -> list[Path]:
    paths = [out / "theta.csv", out / "partial_correlation.csv", out / "result.json"]
    write_matrix_csv(paths[0], res.theta_hat)
    try:
        write_matrix_csv(paths[1], partial_correlation(res.theta_hat))
    except DomainError:
        paths.pop(1)
    body = res.to_json()
    body["estimator"] = name if name != "glasso" else "gelnet"
    paths[-1].write_text(json.dumps(body, indent=2))
    if "edges" in res.metadata:
        paths.append(out / "edges.json")
        write_edges_json(paths[-1], res.metadata["edges"])
    return paths


# -- commands -----------------------------------------------------------------

def cmd_generate(args, out: Path, man: RunManifest) -> list[Path]:
    spec = TopologySpec(args.kind, args.p, args.seed, prob=args.prob, groups=args.groups,
                        bandwidth=args.bandwidth, ring_degree=args.ring_degree,
                        rewire=args.rewire, core=args.core, core_links=args.core_links)
    gt = ground_truth(spec, args.v, args.u, args.normalize)
    paths = gt.save(out)
    man.seeds["graph"] = args.seed
    if args.n:
        man.seeds["sample"] = args.sample_seed
        data = sample_gaussian(gt.sigma, args.n, args.sample_seed)
        paths.append(out / "data.csv")
        write_dataset_csv(paths[-1], data)
    return paths


def cmd_estimate(args, out: Path, man: RunManifest) -> list[Path]:
    name = _resolve_estimator(args.estimator, args.rule)
    data = _load_data(args.data, args.standardize)
    res = estimate(name, data, PenaltyParams(args.alpha, args.lam), EstimatorConfig(loss=args.loss))
    return _write_result(out, res, name)


def cmd_select(args, out: Path, man: RunManifest) -> list[Path]:
    name = _resolve_estimator(args.estimator, args.rule)
    data = _load_data(args.data, args.standardize)
    cfg = EstimatorConfig(loss=args.loss)
    if args.criterion == "cv":
        man.seeds["folds"] = args.seed
    report = select(data, name, _grid(args), args.criterion, args.folds, args.seed, cfg,
                    jobs=args.jobs)
    path = out / "report.json"
    report.write(path)
    res = estimate(name, data, report.best, cfg)
    return [path, *_write_result(out, res, name)]


def cmd_simulate(args, out: Path, man: RunManifest) -> list[Path]:
    grid = linear_grid(41, 101, 0.4) if args.full_grid else _grid(args)
    cfg = SimulationConfig(tuple(args.topologies), args.replicates, args.n, args.p,
                           tuple(args.estimators), tuple(args.criteria), grid, args.folds,
                           args.seed, args.v, args.u, not args.no_normalize,
                           EstimatorConfig(loss=args.loss))
    results = run_simulation(cfg, jobs=args.jobs)
    man.seeds["base"] = args.seed
    man.seeds["replicates"] = [
        {"topology": r.topology, "replicate": r.replicate, "graph": r.graph_seed,
         "sample": r.data_seed} for r in results]
    if "cv" in cfg.criteria:
        man.seeds["folds"] = args.seed
    paths = list(write_outputs(results, cfg, out).values())
    failed = [r for r in results if r.error]
    for r in failed:
        print(f"replicate {r.topology}/{r.replicate} failed: {r.error}", file=sys.stderr)
    if len(failed) == len(results):
        raise DomainError("every replicate failed")
    return paths


def cmd_analyze(args, out: Path, man: RunManifest) -> list[Path]:
    from .net_analysis import (RollingConfig, fit_network, graph_measures, rolling_strength,
                               shock_diffusion, write_measures_json, write_rolling_csv)
    from .prewhiten import prewhiten_dataset, write_params_json
    from .synthetic import bundled_returns

    data = bundled_returns() if args.returns is None else _load_data(args.returns, False)
    labels = data.labels or [f"x{j}" for j in range(data.p)]
    if args.shock_vector:
        e = np.array(args.shock_vector, dtype=float)
        if e.size != data.p:
            raise UsageError(f"shock vector has {e.size} entries for {data.p} columns")
    else:
        if args.shock_column not in labels:
            raise UsageError(f"unknown shock column {args.shock_column!r}; "
                             f"columns: {', '.join(labels)}")
        e = np.zeros(data.p)
        e[labels.index(args.shock_column)] = 1.0
    paths = []
    if not args.no_prewhiten:
        data, fits = prewhiten_dataset(data, raw=args.raw_residuals, jobs=args.jobs)
        paths += [out / "residuals.csv", out / "garch_params.json"]
        write_dataset_csv(paths[-2], data)
        write_params_json(fits, labels, paths[-1])
    if args.standardize:
        x = data.values - data.values.mean(axis=0)
        data = Dataset(x / x.std(axis=0), data.labels, data.index)
    name = _resolve_estimator(args.estimator, args.rule)
    cfg = RollingConfig(name, args.criterion, _grid(args), args.folds, args.seed,
                        signed=args.signed, estimator_cfg=EstimatorConfig(loss=args.loss))
    if args.criterion == "cv":
        man.seeds["folds"] = args.seed
    P, report = fit_network(data, cfg)
    paths.append(out / "report.json")
    report.write(paths[-1])
    paths.append(out / "partial_correlation.csv")
    write_matrix_csv(paths[-1], P)
    paths.append(out / "measures.json")
    write_measures_json(graph_measures(P, signed=args.signed), paths[-1])
    s = shock_diffusion(P.values, e)
    paths.append(out / "shock.csv")
    with open(paths[-1], "w") as fh:
        fh.write("node,shock,steady_state\n")
        for lb, ej, sj in zip(labels, e, s):
            fh.write(f"{lb},{float(ej)!r},{float(sj)!r}\n")
    if not args.no_rolling:
        window = min(args.window, data.n)
        pts = rolling_strength(data, window, args.shift, cfg, jobs=args.jobs)
        paths.append(out / "rolling_strength.csv")
        write_rolling_csv(pts, paths[-1])
        n_failed = sum(p.failed for p in pts)
        if n_failed:
            print(f"{n_failed} of {len(pts)} windows failed", file=sys.stderr)
    return paths


# -- parser -------------------------------------------------------------------

def _add_estimator_args(sp, default="gelnet"):
    sp.add_argument("--estimator", type=_estimator, default=default,
                    help=f"one of {', '.join(ESTIMATORS)}, or 2s/cr with --rule")
    sp.add_argument("--rule", choices=["and", "or", "l2", "minel"], default=None)
    sp.add_argument("--loss", choices=["mean", "sum"], default="mean",
                    help="regression loss scaling for the node-wise estimators")


def _add_grid_args(sp, alphas=41, lambdas=101):
    sp.add_argument("--grid-alphas", type=int, default=alphas, help="number of alpha values on [0, 1]")
    sp.add_argument("--grid-lambdas", type=int, default=lambdas,
                    help="number of lambda values on [0, lambda-max]")
    sp.add_argument("--lambda-max", type=float, default=0.4)
    sp.add_argument("--folds", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0, help="seed for the fold split")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="enetgraph", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="ground-truth network and precision matrix")
    g.add_argument("--kind", type=_kind, required=True, help=f"one of {', '.join(KINDS)}")
    g.add_argument("--p", type=int, default=30)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--prob", type=float, default=None)
    g.add_argument("--groups", type=int, default=None)
    g.add_argument("--bandwidth", type=int, default=3)
    g.add_argument("--ring-degree", type=int, default=2)
    g.add_argument("--rewire", type=float, default=0.1)
    g.add_argument("--core", type=int, default=None)
    g.add_argument("--core-links", type=int, default=2)
    g.add_argument("--v", type=float, default=0.3)
    g.add_argument("--u", type=float, default=0.1)
    g.add_argument("--normalize", action="store_true",
                   help="rescale so the implied covariance has unit diagonal")
    g.add_argument("--n", type=int, default=0, help="also draw n observations into data.csv")
    g.add_argument("--sample-seed", type=int, default=1)
    g.add_argument("--out", required=True)

    e = sub.add_parser("estimate", help="fit one estimator at one penalty point")
    e.add_argument("--data", required=True)
    _add_estimator_args(e)
    e.add_argument("--alpha", type=float, required=True)
    e.add_argument("--lambda", dest="lam", type=float, required=True)
    e.add_argument("--standardize", action="store_true")
    e.add_argument("--out", required=True)

    s = sub.add_parser("select", help="tune alpha and lambda by BIC or cross-validation")
    s.add_argument("--data", required=True)
    _add_estimator_args(s)
    s.add_argument("--criterion", choices=["bic", "cv"], default="bic")
    _add_grid_args(s)
    s.add_argument("--standardize", action="store_true")
    s.add_argument("--jobs", type=int, default=None)
    s.add_argument("--out", required=True)

    m = sub.add_parser("simulate", help="replicated recovery study")
    m.add_argument("--topologies", type=_csv_list(_kind), default=list(KINDS))
    m.add_argument("--replicates", type=int, default=30)
    m.add_argument("--n", type=int, default=1000)
    m.add_argument("--p", type=int, default=30)
    m.add_argument("--estimators", type=_csv_list(_strict_estimator), default=list(ESTIMATORS))
    m.add_argument("--criteria", type=_csv_list(_criterion), default=["bic", "cv"])
    _add_grid_args(m, 21, 51)
    m.add_argument("--full-grid", action="store_true", help="41 x 101 grid")
    m.add_argument("--v", type=float, default=0.3)
    m.add_argument("--u", type=float, default=0.1)
    m.add_argument("--no-normalize", action="store_true")
    m.add_argument("--loss", choices=["mean", "sum"], default="mean")
    m.add_argument("--jobs", type=int, default=None)
    m.add_argument("--out", required=True)

    a = sub.add_parser("analyze", help="prewhiten, estimate, measures, shock, rolling strength")
    a.add_argument("--returns", default=None, help="returns CSV (bundled synthetic data if omitted)")
    a.add_argument("--no-prewhiten", action="store_true")
    a.add_argument("--raw-residuals", action="store_true")
    a.add_argument("--standardize", action="store_true")
    _add_estimator_args(a, default="2s-and")
    a.add_argument("--criterion", choices=["bic", "cv"], default="bic")
    _add_grid_args(a)
    a.add_argument("--shock-column", default="financials")
    a.add_argument("--shock-vector", type=_csv_list(float), default=None)
    a.add_argument("--window", type=int, default=252, help="rolling window in observations")
    a.add_argument("--shift", type=int, default=21, help="rolling shift in observations")
    a.add_argument("--no-rolling", action="store_true")
    a.add_argument("--signed", action="store_true", help="signed instead of absolute strength")
    a.add_argument("--jobs", type=int, default=None)
    a.add_argument("--out", required=True)
    return ap


COMMANDS = {"generate": cmd_generate, "estimate": cmd_estimate, "select": cmd_select,
            "simulate": cmd_simulate, "analyze": cmd_analyze}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 0) is None:
        args.jobs = default_jobs()
    out = Path(args.out)
    config = {k: v for k, v in vars(args).items() if k != "command"}
    man = RunManifest(args.command, argv, config, {}, _now())
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = COMMANDS[args.command](args, out, man)
    except UsageError as exc:
        parser.error(str(exc))
    except (DomainError, np.linalg.LinAlgError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    man.outputs = [str(p.relative_to(out)) if p.is_relative_to(out) else str(p) for p in paths]
    man.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
