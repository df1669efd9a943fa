"""Command-line interface.

Subcommands::

    policylimits curve DATA --policy SPEC --nominal SPEC --gamma 1 2 3 --out curves.csv
    policylimits simulate --scenario {unconfounded,confounded,ihdp-a} --n 1000 --out data.csv
    policylimits coverage --scenario unconfounded --runs 300 --draws 500 --out report.csv
    policylimits fit-propensity DATA --out model.json

Exit codes: 0 success, 2 usage or input error, 1 internal error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import dataio, harness
from . import synthdata as sd
from .core import Policy, ThresholdPolicy, make_rng, split_dataset, treat_all, treat_none
from .dataio import SchemaError
from .limits import default_alphas, informativeness, limit_curve
from .propensity import FitError, LogisticModel, fit_logistic

logger = logging.getLogger("policylimits")


class UsageError(Exception):
    pass


# --- specs --------------------------------------------------------------------


def _kv(spec: str, body: str) -> dict[str, float]:
    out = {}
    for part in filter(None, body.split(",")):
        key, sep, value = part.partition("=")
        if not sep:
            raise UsageError(f"bad spec {spec!r}: expected key=value")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"bad spec {spec!r}: {value!r} is not a number") from None
    return out


def parse_policy(spec: str, dataset=None) -> Policy:
    """Resolve a policy spec.

    ``treat-all``, ``treat-none``, ``threshold:tau=<v>``, ``table:<path>``,
    ``sigmoid:c=<v>`` (the synthetic past policy) and ``logistic:<model.json>``.
    ``fit[:ridge=<v>]`` fits a logistic model to ``dataset``'s actions.
    """
    kind, _, body = spec.partition(":")
    try:
        if kind == "treat-all" and not body:
            return treat_all()
        if kind == "treat-none" and not body:
            return treat_none()
        if kind == "threshold":
            params = _kv(spec, body)
            if set(params) != {"tau"}:
                raise UsageError(f"bad spec {spec!r}: expected threshold:tau=<v>")
            return ThresholdPolicy(params["tau"])
        if kind == "sigmoid":
            params = _kv(spec, body)
            if set(params) != {"c"}:
                raise UsageError(f"bad spec {spec!r}: expected sigmoid:c=<v>")
            return sd.SigmoidPastPolicy(params["c"])
        if kind == "table" and body:
            return dataio.read_probability_table(body)
        if kind == "logistic" and body:
            return LogisticModel.from_dict(_load_json(body))
        if kind == "fit":
            if dataset is None:
                raise UsageError("'fit' is only valid as a nominal spec")
            ridge = _kv(spec, body).get("ridge", 1e-6)
            if dataset.action_count != 2:
                raise UsageError("'fit' needs binary actions")
            return fit_logistic(dataset.X, dataset.a, ridge=ridge)
    except (OSError, KeyError) as exc:
        raise UsageError(f"cannot resolve {spec!r}: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise UsageError(f"bad spec {spec!r}: {exc}") from None
    raise UsageError(f"unknown policy spec {spec!r}")


def _load_json(path):
    import json

    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def parse_alphas(text: str | None) -> np.ndarray:
    """``None`` (99-point default), ``start:stop:step`` or a comma list."""
    if text is None:
        return default_alphas()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if not step > 0:
                raise ValueError
            m = int(math.floor((stop - start) / step + 1e-9)) + 1
            alphas = np.round(start + step * np.arange(m), 10)
        else:
            alphas = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise UsageError(f"bad alpha grid {text!r}") from None
    if alphas.size == 0 or np.any((alphas <= 0) | (alphas >= 1)) or np.any(np.diff(alphas) <= 0):
        raise UsageError("alphas must be strictly increasing in (0, 1)")
    return alphas


def _config(args, command: str, argv) -> dict:
    from . import __version__

    options = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")}
    return {"command": command, "argv": list(argv), "options": options, "version": __version__}


# --- commands -----------------------------------------------------------------


def cmd_curve(args, argv) -> None:
    dataset = dataio.read_dataset(args.data, args.action_col, args.loss_col, args.impute_median)
    policy = parse_policy(args.policy)
    nominal = parse_policy(args.nominal, dataset)
    alphas = parse_alphas(args.alphas)
    if any(g < 1 for g in args.gamma):
        raise UsageError("gamma must be >= 1")
    try:
        split = split_dataset(dataset, args.n0, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    config = _config(args, "curve", argv)
    lines = dataio.header_lines(config) + ["gamma,alpha,ell,is_infinite"]
    curves = []
    for gamma in args.gamma:
        try:
            curve = limit_curve(dataset, policy, nominal, gamma, alphas, split)
        except KeyError as exc:
            raise UsageError(str(exc)) from None
        for alpha, ell in curve.points:
            lines.append(",".join([dataio.fmt(gamma), dataio.fmt(alpha), *dataio.ell_field(ell)]))
        curves.append({
            "gamma": gamma, "n": curve.n, "n0": curve.n0, "split_seed": curve.split_seed,
            "informativeness": informativeness(curve),
            "points": [{"alpha": a, "ell": None if math.isinf(e) else e} for a, e in curve.points],
        })
    dataio.write_text(args.out, lines)
    dataio.write_json(dataio.json_path(args.out), {"config": config, "curves": curves,
                                                   "format": dataio.FORMAT_VERSION})


def cmd_simulate(args, argv) -> None:
    config = _config(args, "simulate", argv)
    out = Path(args.out)
    truth = Path(args.truth) if args.truth else out.with_name(out.stem + ".truth.csv")
    if args.scenario == "unconfounded":
        data = sd.gen_unconfounded(sd.UnconfoundedConfig(args.c, args.n, args.seed, args.loss_var))
        dataio.write_dataset(out, data.dataset, config)
    elif args.scenario == "confounded":
        cfg = sd.ConfoundedConfig(args.gamma0, args.c, args.n, args.seed, args.threshold_quantile,
                                  args.pilot_n)
        t = sd.resolve_threshold(cfg)
        data = sd.gen_confounded(cfg, t)
        dataio.write_dataset(out, data.dataset, config)
        lines = dataio.header_lines({**config, "threshold_quantile": t.q})
        lines.append("u,p0_true,p0_nominal,propensity_true,propensity_nominal")
        for row in zip(data.u, data.true_p0, data.nominal_p0, data.true_propensity(),
                       data.nominal_propensity()):
            lines.append(",".join(dataio.fmt(v) for v in row))
        dataio.write_text(truth, lines)
    else:
        cov = _ihdp_covariates(args)
        loss = sd.ihdp_surface_a(cov.X, cov.a, sd.IhdpSurfaceConfig(seed=args.seed))
        from .core import Dataset

        dataio.write_dataset(out, Dataset(cov.X, cov.a, loss), config)


def _ihdp_covariates(args) -> sd.IhdpCovariates:
    if args.covariates:
        tab = dataio.read_table(args.covariates)
        a = dataio.read_actions(tab, args.action_col)
        if np.any(a > 1):
            raise UsageError("IHDP covariate file needs a binary action column")
        X = dataio.read_covariates(tab, dataio.covariate_columns(tab, (args.action_col,)))
        return sd.IhdpCovariates(sd.standardize_columns(X), a)
    return sd.ihdp_standin(args.n, args.d, args.seed)


def _scenario(args) -> harness.Scenario:
    policy = parse_policy(args.policy)
    if args.scenario == "unconfounded":
        return harness.SyntheticScenario(policy, "unconfounded", args.c, args.n, loss_var=args.loss_var)
    if args.scenario == "confounded":
        threshold = None if args.threshold_quantile is None else sd.ThresholdFunction(args.threshold_quantile)
        return harness.SyntheticScenario(policy, "confounded", args.c, args.n, args.gamma0,
                                         threshold=threshold, design_seed=args.seed, pilot_n=args.pilot_n)
    return harness.IhdpScenario(_ihdp_covariates(args), policy)


def cmd_coverage(args, argv) -> None:
    alphas = parse_alphas(args.alphas or "0.05:0.95:0.05")
    scenario = _scenario(args)
    methods = harness.METHODS if args.method == "both" else (args.method,)
    cfg = harness.CoverageConfig(args.runs, args.draws, tuple(alphas), tuple(args.gammas),
                                 methods[0], args.seed, args.n0, workers=args.workers)
    reports = harness._run_all(scenario, cfg, methods)
    config = _config(args, "coverage", argv)
    lines = dataio.header_lines(config) + ["method,gamma,alpha,coverage,gap,stderr"]
    summary = []
    for method in methods:
        rep = reports[method]
        for row in rep.rows():
            gamma = "" if math.isnan(row["gamma"]) else dataio.fmt(row["gamma"])
            lines.append(",".join([row["method"], gamma] + [dataio.fmt(row[k]) for k in
                                                             ("alpha", "coverage", "gap", "stderr")]))
        summary.append({"method": method,
                        "gammas": [None if math.isnan(g) else float(g) for g in rep.gammas],
                        "mean_informativeness": rep.informativeness_mean.tolist(),
                        "runs": rep.runs, "draws_per_run": rep.draws_per_run})
    dataio.write_text(args.out, lines)
    dataio.write_json(dataio.json_path(args.out), {"config": config, "reports": summary,
                                                   "rows": [r for m in methods for r in _json_rows(reports[m])],
                                                   "format": dataio.FORMAT_VERSION})


def _json_rows(rep):
    rows = rep.rows()
    for r in rows:
        if math.isnan(r["gamma"]):
            r["gamma"] = None
    return rows


def cmd_fit_propensity(args, argv) -> None:
    tab = dataio.read_table(args.data)
    a = dataio.read_actions(tab, args.action_col)
    if np.any(a > 1):
        raise UsageError(f"column {args.action_col!r} must be binary (0/1) to fit a logistic model")
    exclude = (args.action_col, args.loss_col)
    X = dataio.read_covariates(tab, dataio.covariate_columns(tab, exclude), args.impute_median)
    try:
        model = fit_logistic(X, a, ridge=args.ridge, max_iter=args.max_iter, tol=args.tol)
    except FitError as exc:
        raise UsageError(str(exc)) from None
    dataio.write_json(args.out, {"config": _config(args, "fit-propensity", argv), **model.to_dict(),
                                 "format": dataio.FORMAT_VERSION})


# --- parser -------------------------------------------------------------------


def _scenario_flags(p: argparse.ArgumentParser, n_default: int) -> None:
    p.add_argument("--scenario", choices=["unconfounded", "confounded", "ihdp-a"], required=True)
    p.add_argument("--n", type=int, default=n_default, help="training sample size")
    p.add_argument("--c", type=float, default=1.0, help="past-policy steepness in [0.5, 2]")
    p.add_argument("--gamma0", type=float, default=2.0, help="confounding odds factor")
    p.add_argument("--threshold-quantile", type=float, default=None,
                   help="fix t(X) at this quantile of U|X instead of designing it")
    p.add_argument("--pilot-n", type=int, default=100_000)
    p.add_argument("--loss-var", type=float, default=0.1, help="loss noise variance")
    p.add_argument("--covariates", default=None, help="IHDP-style CSV: covariates plus action column")
    p.add_argument("--d", type=int, default=25, help="stand-in covariate dimension")
    p.add_argument("--action-col", default="a")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="policylimits", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", help="limit curves from an observational CSV")
    p.add_argument("data")
    p.add_argument("--policy", required=True)
    p.add_argument("--nominal", required=True)
    p.add_argument("--gamma", type=float, nargs="+", default=[1.0])
    p.add_argument("--n0", type=int, default=None, help="size of the weight-bound split (default ceil(n/2))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alphas", default=None, help="start:stop:step or comma list")
    p.add_argument("--action-col", default="a")
    p.add_argument("--loss-col", default="l")
    p.add_argument("--impute-median", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("simulate", help="write a synthetic dataset")
    _scenario_flags(p, 1000)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", default=None, help="truth file for confounded data")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("coverage", help="Monte Carlo coverage study")
    _scenario_flags(p, 250)
    p.add_argument("--policy", default="threshold:tau=0.5")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--gammas", type=float, nargs="+", default=[1.0])
    p.add_argument("--alphas", default=None)
    p.add_argument("--method", choices=["proposed", "benchmark_ipw", "both"], default="both")
    p.add_argument("--n0", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("fit-propensity", help="fit a logistic nominal model")
    p.add_argument("data")
    p.add_argument("--action-col", default="a")
    p.add_argument("--loss-col", default="l")
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--impute-median", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_propensity)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args, argv)
    except (UsageError, SchemaError) as exc:
        print(f"policylimits: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"policylimits: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"policylimits: internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
