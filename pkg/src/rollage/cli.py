"""Command-line interface.

Exit codes: 0 success, 2 usage or validation error, 3 I/O error, 4 every
experiment cell failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .arfit import CMLE_LS, YULE_WALKER_LD, fit_ar_cmle, fit_all_orders, pacf, sample_acf
from .durbin import FIXED, PtildeRule, fit_arma_durbin, fit_ma_durbin
from .exceptions import RollageError
from .harness import ExperimentConfig, run_experiment
from .models import ModelSpec, validate_model
from .selection import DEFAULT_DELTA, select_order_rollage, select_ptilde_rollage_star
from .simulate import random_model, read_series_csv, simulate, write_series_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_ALL_FAILED = 4

METHODS = {"cmle": CMLE_LS, "yule-walker": YULE_WALKER_LD}
DURBIN_CRITERIA = {"rollage": "rollage_star", "bic": "bic", "gic": "gic", "fixed": FIXED}


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _dump_json(obj, out) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _write_rows(header, rows, out) -> None:
    fh = sys.stdout if out is None else Path(out).open("w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in r])
    finally:
        if out is not None:
            fh.close()


def _load_model(path) -> ModelSpec:
    spec = ModelSpec.from_json(Path(path).read_text())
    check = validate_model(spec)
    if not check.ok:
        raise RollageError(f"{path}: model is not causal and invertible")
    return spec


def _say(args, msg) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    if args.out is None:
        raise RollageError("simulate needs --out")
    spec = _load_model(args.model)
    ts = simulate(spec, args.n, args.seed, burn_in=args.burn_in)
    write_series_csv(ts, args.out)
    _say(args, f"wrote {ts.n} values to {args.out}")
    return EXIT_OK


def cmd_gen_model(args) -> int:
    spec = random_model(args.kind, args.p, args.q, args.seed, scheme=args.scheme)
    _dump_json(spec.to_dict(), args.out)
    return EXIT_OK


def cmd_acf(args) -> int:
    acf = sample_acf(read_series_csv(args.input), args.max_lag)
    rows = [(k, float(g), float(r)) for k, (g, r) in enumerate(zip(acf.gamma_hat, acf.acf_hat))]
    _write_rows(("lag", "gamma", "acf"), rows, args.out)
    return EXIT_OK


def cmd_pacf(args) -> int:
    table = fit_all_orders(read_series_csv(args.input), args.pbar, METHODS[args.method])
    values, band = pacf(table)
    rows = [(m, float(v), float(band), int(abs(v) > band)) for m, v in enumerate(values, 1)]
    _write_rows(("lag", "pacf", "band", "significant"), rows, args.out)
    return EXIT_OK


def cmd_fit_ar(args) -> int:
    y = read_series_csv(args.input)
    if (args.order is None) == (args.pbar is None):
        raise RollageError("give exactly one of --order or --pbar")
    if args.order is not None:
        fit = fit_ar_cmle(y, args.order)
        doc = {"order": args.order, "coefficients": [float(c) for c in fit.coefficients],
               "innovation_var": fit.innovation_var, "method": CMLE_LS}
    else:
        doc = fit_all_orders(y, args.pbar, METHODS[args.method]).to_dict()
    _dump_json(doc, args.out)
    return EXIT_OK


def cmd_rollage(args) -> int:
    y = read_series_csv(args.input)
    method = METHODS[args.method]
    if args.q is None:
        rep = select_order_rollage(y, args.pbar, method, scan=args.scan)
    else:
        rep = select_ptilde_rollage_star(y, args.q, args.pbar, args.delta, method)
    if args.emit_ra_table:
        rows = list(rep.ra_table.to_rows())
        _write_rows(("h", "l", "rbar", "sigma2", "ratio"), rows, args.emit_ra_table)
    _dump_json(rep.to_dict(), args.out)
    return EXIT_OK


def cmd_durbin(args) -> int:
    criterion = DURBIN_CRITERIA[args.criterion]
    if criterion == FIXED:
        if args.ptilde is None:
            raise RollageError("--criterion fixed needs --ptilde")
        if args.ptilde <= args.q:
            raise RollageError(f"--ptilde {args.ptilde} must exceed --q {args.q}")
    elif args.ptilde is not None:
        raise RollageError("--ptilde only applies to --criterion fixed")
    rule = PtildeRule(criterion, args.delta, args.pbar, args.ptilde, args.alpha)
    y = read_series_csv(args.input)
    truth = None
    if args.truth:
        spec = _load_model(args.truth)
        if (spec.p, spec.q) != (args.p, args.q):
            raise RollageError(
                f"truth model has orders ({spec.p}, {spec.q}), fit asks for ({args.p}, {args.q})"
            )
        truth = spec.params
    if args.p:
        fit = fit_arma_durbin(y, args.p, args.q, rule, truth=truth)
    else:
        fit = fit_ma_durbin(y, args.q, rule, truth=truth)
    _dump_json(fit.to_dict(), args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    if args.parallelism is not None:
        cfg = ExperimentConfig(**{**cfg.__dict__, "parallelism": args.parallelism})
    outcome = run_experiment(cfg, args.out)
    _say(args, f"{outcome.total_cells} cells: {outcome.ran} run, {outcome.skipped} "
               f"resumed, {outcome.failed} failed -> {outcome.output_dir}")
    return EXIT_ALL_FAILED if outcome.all_failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out", default=None, help="output path; stdout when omitted")
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")

    parser = argparse.ArgumentParser(
        prog="rollage", description="AR order selection and Durbin MA/ARMA fitting."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help, description=help)
        p.set_defaults(func=func)
        return p

    def add_input(p):
        p.add_argument("--input", required=True, help="series CSV (single 'y' column)")

    def add_method(p):
        p.add_argument("--method", choices=sorted(METHODS), default="cmle")

    p = add("simulate", cmd_simulate, "simulate a series from a model JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--burn-in", type=_nonneg_int, default=None)

    p = add("gen-model", cmd_gen_model, "draw a random causal/invertible model")
    p.add_argument("--kind", choices=("ar", "ma", "arma"), required=True)
    p.add_argument("--p", type=_nonneg_int, default=0)
    p.add_argument("--q", type=_nonneg_int, default=0)
    p.add_argument("--scheme", choices=("auto", "coefficients", "reflection", "roots"), default="auto")

    p = add("acf", cmd_acf, "sample autocovariance and autocorrelation")
    add_input(p)
    p.add_argument("--max-lag", type=_nonneg_int, required=True)

    p = add("pacf", cmd_pacf, "partial autocorrelations with the 95%% band")
    add_input(p)
    p.add_argument("--pbar", type=_positive_int, required=True)
    add_method(p)

    p = add("fit-ar", cmd_fit_ar, "fit one AR order, or every order up to --pbar")
    add_input(p)
    p.add_argument("--order", type=_positive_int)
    p.add_argument("--pbar", type=_positive_int)
    add_method(p)

    p = add("rollage", cmd_rollage, "rolling-average order selection")
    add_input(p)
    p.add_argument("--pbar", type=_positive_int, required=True)
    p.add_argument("--q", type=_nonneg_int, default=None,
                   help="MA order; switches to the delta rule for a long-AR order")
    p.add_argument("--delta", type=_positive_float, default=DEFAULT_DELTA)
    p.add_argument("--scan", choices=("first_failure", "largest"), default="first_failure")
    p.add_argument("--emit-ra-table", metavar="PATH", default=None,
                   help="also write the rolling-average table as CSV")
    add_method(p)

    p = add("durbin", cmd_durbin, "Durbin two-stage MA/ARMA fit")
    add_input(p)
    p.add_argument("--q", type=_positive_int, required=True)
    p.add_argument("--p", type=_nonneg_int, default=0)
    p.add_argument("--criterion", choices=sorted(DURBIN_CRITERIA), default="rollage")
    p.add_argument("--delta", type=_positive_float, default=DEFAULT_DELTA)
    p.add_argument("--ptilde", type=_positive_int, default=None)
    p.add_argument("--pbar", type=_positive_int, default=None)
    p.add_argument("--alpha", type=_positive_float, default=1.0)
    p.add_argument("--truth", default=None, help="true model JSON; adds relative_error")

    p = add("experiment", cmd_experiment, "run an experiment grid from a config JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--parallelism", type=_positive_int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"rollage: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RollageError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"rollage {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
