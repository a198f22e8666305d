"""Command-line interface: ``wrightiv <subcommand> [options]``.

Exit codes: 0 success, 2 configuration/schema error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings

import numpy as np

from . import __version__
from .causal_dag import (
    SeparationQuery,
    build_wright_dag,
    d_separated,
    enumerate_paths,
    parse_dag,
    path_blocked,
)
from .config import ExperimentConfig, load_config
from .counterfactual import REVENUE_TERMS, TariffScenario, apply_tariff, optimal_tariff
from .exceptions import (
    DegenerateSystemError,
    IdentificationError,
    LassoConvergenceError,
    SchemaError,
    SimulationError,
    SingularCovarianceError,
    WrightError,
)
from .gmm import CovarianceKernel, build_moment_system, cue, indirect_least_squares
from .montecarlo import fit_dataset, residualize, run_montecarlo
from .structural import read_csv, simulate_dataset, write_csv
from .weak_id import ThetaGrid, ar_region, clr_region

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

NUMERICAL_ERRORS = (IdentificationError, SingularCovarianceError, SimulationError,
                    LassoConvergenceError, DegenerateSystemError, np.linalg.LinAlgError)


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig.from_dict()
    flags = {
        "seed": args.seed,
        "n": getattr(args, "n", None),
        "mode": getattr(args, "mode", None),
        "k_steps": getattr(args, "k_steps", None),
        "omega_kind": getattr(args, "omega_kind", None),
        "lags": getattr(args, "lags", None),
        "partialing": getattr(args, "partialing", None),
        "lasso_lambda": getattr(args, "lasso_lambda", None),
        "grid": getattr(args, "grid", None),
        "clr_draws": getattr(args, "draws", None),
        "level": getattr(args, "level", None),
        "count": getattr(args, "count", None),
        "base_seed": getattr(args, "base_seed", None),
        "box": getattr(args, "box", None),
    }
    return cfg.override(**flags)


def _dataset(args, cfg):
    if getattr(args, "data", None):
        return read_csv(args.data)
    return simulate_dataset(cfg.params, cfg.shifters, cfg.n, cfg.seed)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    data = simulate_dataset(cfg.params, cfg.shifters, cfg.n, cfg.seed)
    out = args.out or cfg.output_path
    if out:
        write_csv(data, out)
    else:
        buf = io.StringIO()
        names, values = data.columns()
        buf.write(",".join(names) + "\n")
        for row in values:
            buf.write(",".join(format(float(v), ".17g") for v in row) + "\n")
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = _config(args)
    data = _dataset(args, cfg)
    resid = residualize(data, cfg)
    if args.estimator == "gmm":
        doc = fit_dataset(data, cfg).to_dict()
    elif args.estimator == "cue":
        doc = cue(resid, cfg.box, cfg.omega_kind, cfg.lags, grid=cfg.cue_grid).to_dict()
    else:
        theta = indirect_least_squares(resid)
        doc = {"estimator": "ils", "n": int(resid.n),
               "theta_hat": {"alpha1": float(theta[0]), "beta1": float(theta[1])}}
    doc["source"] = args.data if args.data else {"simulated_seed": cfg.seed, "n": cfg.n}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_region(args) -> int:
    cfg = _config(args)
    data = _dataset(args, cfg)
    ms = build_moment_system(residualize(data, cfg))
    kernel = CovarianceKernel(ms, cfg.omega_kind, cfg.lags)
    grid = ThetaGrid.from_box(cfg.box, cfg.grid)
    p = 1.0 - cfg.level
    if args.method == "ar":
        region = ar_region(ms, kernel, grid, p)
    else:
        region = clr_region(ms, kernel, grid, cfg.box, p, cfg.clr_draws, cfg.seed,
                            cfg.clr_inner_grid, cfg.cue_grid, threads=args.threads)
    _emit(region.to_csv(), args.out)
    print(f"members: {region.n_members} of {region.statistic.size}", file=sys.stderr)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    cfg = _config(args)
    report = run_montecarlo(cfg, threads=args.threads)
    _emit(report.to_json(include_timing=args.timing), args.out or cfg.output_path)
    return EXIT_OK


def _tau_values(args):
    if args.tau is not None:
        return np.array([args.tau])
    start, stop, step = args.tau_grid
    count = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(count), 12)


def cmd_counterfactual(args) -> int:
    if args.fit:
        with open(args.fit) as fh:
            doc = json.load(fh)
        try:
            alpha1 = float(doc["theta_hat"]["alpha1"])
            beta1 = float(doc["theta_hat"]["beta1"])
        except (KeyError, TypeError, ValueError):
            raise SchemaError("fit file lacks theta_hat.alpha1 / theta_hat.beta1") from None
    elif args.alpha1 is not None and args.beta1 is not None:
        alpha1, beta1 = args.alpha1, args.beta1
    else:
        raise SchemaError("give --fit or both --alpha1 and --beta1")
    taus = _tau_values(args)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    fields = ["tau", "pass_through_c", "delta_p", "delta_y", "p_star", "y_star",
              "cs_change_ratio", "revenue_ratio", "welfare_sum"]
    writer.writerow(fields)
    for tau in np.sort(taus):
        row = apply_tariff(TariffScenario(float(tau), alpha1, beta1), args.revenue_terms)
        writer.writerow([format(v + 0.0, ".17g") for v in [tau] + [getattr(row, f) for f in fields[1:]]])
    _emit(buf.getvalue(), args.out)
    if taus.size > 1:
        curve = optimal_tariff(alpha1, beta1, taus, args.revenue_terms)
        print(f"argmax tau: {curve.argmax_tau:.17g} welfare: {curve.argmax_value:.17g}",
              file=sys.stderr)
    return EXIT_OK


def cmd_dsep(args) -> int:
    if args.wright:
        dag = build_wright_dag(include_w=args.with_w)
    elif args.graph:
        with open(args.graph) as fh:
            dag = parse_dag(fh.read())
    else:
        raise SchemaError("give --graph FILE or --wright")
    query = SeparationQuery(frozenset(args.x), frozenset(args.y), frozenset(args.z or ()))
    sep = d_separated(dag, query)
    lines = [f"query: {query}", f"separated: {'true' if sep else 'false'}"]
    if len(args.x) == 1 and len(args.y) == 1:
        paths = enumerate_paths(dag, args.x[0], args.y[0])
        lines.append(f"paths: {len(paths)}")
        for path in paths:
            status = "blocked" if path_blocked(dag, path, query.z) else "open"
            coll = path.colliders()
            extra = f" colliders={','.join(coll)}" if coll else ""
            lines.append(f"  {path}  [{status}]{extra}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=int, help="simulation / simulation-draw seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    common.add_argument("--out", help="output file (default stdout)")

    est = argparse.ArgumentParser(add_help=False)
    est.add_argument("--data", help="CSV with columns P,Y,ZD1..,ZS1..,W1..")
    est.add_argument("--n", type=int, help="simulated sample size when no --data")
    est.add_argument("--mode", choices=["full_information", "limited_information"])
    est.add_argument("--k-steps", type=int, dest="k_steps")
    est.add_argument("--omega-kind", dest="omega_kind",
                     choices=["iid_centered", "iid_uncentered", "newey_west"])
    est.add_argument("--lags", type=int)
    est.add_argument("--partialing", choices=["ols", "lasso"])
    est.add_argument("--lasso-lambda", type=float, dest="lasso_lambda")
    est.add_argument("--box", type=float, nargs=4, metavar=("A_LO", "A_HI", "B_LO", "B_HI"))

    parser = argparse.ArgumentParser(prog="wrightiv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate a dataset to CSV")
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", parents=[common, est], help="GMM / CUE / ILS estimates as JSON")
    p.add_argument("--estimator", choices=["gmm", "cue", "ils"], default="gmm")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("region", parents=[common, est], help="AR or CLR confidence region CSV")
    p.add_argument("--method", choices=["ar", "clr"], default="ar")
    p.add_argument("--level", type=float)
    p.add_argument("--grid", type=int, help="grid points per axis")
    p.add_argument("--draws", type=int, help="CLR simulation draws")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("montecarlo", parents=[common, est], help="Monte Carlo report JSON")
    p.add_argument("--count", type=int)
    p.add_argument("--base-seed", type=int, dest="base_seed")
    p.add_argument("--level", type=float)
    p.add_argument("--timing", action="store_true", help="include wall-clock timing")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("counterfactual", parents=[common], help="tariff counterfactual CSV")
    p.add_argument("--fit", help="GMM fit JSON produced by 'estimate'")
    p.add_argument("--alpha1", type=float)
    p.add_argument("--beta1", type=float)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--tau", type=float)
    g.add_argument("--tau-grid", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    p.add_argument("--revenue-terms", choices=list(REVENUE_TERMS), default="cubic")
    p.set_defaults(func=cmd_counterfactual)

    p = sub.add_parser("dsep", parents=[common], help="d-separation query")
    p.add_argument("--graph", help="edge-list file ('A -> B' lines, 'latent: K1, K2')")
    p.add_argument("--wright", action="store_true", help="use the built-in Wright DAG")
    p.add_argument("--with-w", action="store_true", help="include W in the Wright DAG")
    p.add_argument("--x", nargs="+", required=True)
    p.add_argument("--y", nargs="+", required=True)
    p.add_argument("--z", nargs="*", default=[])
    p.set_defaults(func=cmd_dsep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (WrightError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
