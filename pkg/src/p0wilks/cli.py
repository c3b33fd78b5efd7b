"""Command-line interface: ``p0wilks {fit,test,wald,simulate,qq,analyze}``.

Data goes to stdout (or ``--output``), diagnostics to stderr. Exit codes:
0 success, 2 input/usage error, 3 zero degree (MLE does not exist),
4 no convergence, 5 invalid null/reference combination.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import secrets
import sys
import time

import numpy as np

from . import __version__
from .estimation import (
    DEFAULT_EPS,
    DEFAULT_MAX_ITER,
    NullHypothesis,
    check_existence,
    fit_mle,
)
from .exceptions import InvalidNullError, P0Error
from .graph import density, read_edge_list, to_edge_list
from .inference import DEFAULT_R_SWITCH, lrt, wald
from .simulation import (
    DEFAULT_LEVELS,
    monte_carlo,
    qq_data,
    qq_to_csv,
    scenario_h01,
    scenario_h02_h03,
    scenario_power,
)

logger = logging.getLogger("p0wilks")

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_NONCONVERGENCE, EXIT_INVALID = 0, 2, 3, 4, 5


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_float(text: str) -> float:
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return val


def _positive_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return val


def _add_io(p, formats=("json", "csv")):
    p.add_argument("--output", help="write data here instead of stdout")
    p.add_argument("--format", choices=formats, default="json")


def _add_input(p):
    p.add_argument("--input", required=True, help="edge list: 'src dst [weight]' per line")
    p.add_argument("--weighted", action="store_true", help="keep edges with weight >= --threshold only")
    p.add_argument("--threshold", type=_positive_float, default=1.0)


def _add_solver(p):
    p.add_argument("--eps", type=_positive_float, default=DEFAULT_EPS)
    p.add_argument("--max-iter", type=_positive_int, default=DEFAULT_MAX_ITER)


def _add_null(p, kinds=True):
    if kinds:
        p.add_argument("--null", choices=("homogeneous", "specified"), default="homogeneous")
        p.add_argument("--values", type=_float_list, help="pinned values for a specified null")
    p.add_argument("--side", choices=("alpha", "beta"), default="alpha")
    sel = p.add_mutually_exclusive_group(required=True)
    sel.add_argument("--indices", type=_int_list, help="1-based node indices, e.g. 1,2,3")
    sel.add_argument("--top-r", type=_positive_int, help="the r largest node indices")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="p0wilks", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="unrestricted maximum-likelihood fit")
    _add_input(p)
    _add_solver(p)
    _add_io(p)
    p.add_argument("--canonical", help="also write the canonical edge list here")

    p = sub.add_parser("test", help="test a null on the degree parameters")
    _add_input(p)
    _add_solver(p)
    _add_null(p)
    p.add_argument("--test", choices=("lrt", "wald"), default="lrt")
    p.add_argument("--ref", choices=("chisq", "normal", "auto"), default="auto")
    p.add_argument("--r-switch", type=_positive_int, default=DEFAULT_R_SWITCH)
    _add_io(p)

    p = sub.add_parser("wald", help="Wald test that the selected parameters are equal")
    _add_input(p)
    _add_solver(p)
    _add_null(p, kinds=False)
    _add_io(p)

    p = sub.add_parser("simulate", help="Monte Carlo type-I error / power study")
    _add_sim(p)
    _add_io(p)

    p = sub.add_parser("qq", help="QQ-plot coordinates for test statistics")
    p.add_argument("--input", help="simulation report (JSON or CSV) or one statistic per line")
    p.add_argument("--df", type=_positive_int, help="chi-square degrees of freedom for plain input")
    p.add_argument("--deviance", action="store_true", help="use the raw deviance 2*(l_full - l_null) against chi-square(r - 1)")
    _add_sim(p, required=False)
    p.add_argument("--output")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("analyze", help="top-r heterogeneity tests on both parameter families")
    _add_input(p)
    _add_solver(p)
    p.add_argument("--top-r", type=_int_list, default=[2, 5, 10], help="comma-separated r values")
    p.add_argument("--side", choices=("alpha", "beta", "both"), default="both")
    p.add_argument("--ref", choices=("chisq", "normal", "auto"), default="auto")
    p.add_argument("--r-switch", type=_positive_int, default=DEFAULT_R_SWITCH)
    _add_io(p)
    return parser


def _add_sim(p, required=True):
    p.add_argument("--scenario", choices=("h01", "h02", "h03", "power"), required=required)
    p.add_argument("--n", type=_positive_int, default=100)
    p.add_argument("--r", type=_positive_int, help="constrained parameters (h02: n/2, h03: 10 by default)")
    p.add_argument("--L", type=float, default=0.0, help="ramp height L_n")
    p.add_argument(
        "--Lmode",
        choices=("const", "logn"),
        default="const",
        help="const: L_n = L; logn: L_n = L * log(n)",
    )
    p.add_argument("--c", type=float, default=0.0, help="spread of the tested block (power scenario)")
    p.add_argument("--reps", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, help="64-bit seed; drawn at random and echoed when omitted")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--levels", type=_float_list, default=list(DEFAULT_LEVELS))
    p.add_argument("--test", choices=("lrt", "wald"), default="lrt")
    p.add_argument("--ref", choices=("chisq", "normal", "auto"), default="auto")
    p.add_argument("--r-switch", type=_positive_int, default=DEFAULT_R_SWITCH)
    _add_solver(p)


# -- output helpers ------------------------------------------------------------


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _rows_csv(header, rows, comments=()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, quoting=csv.QUOTE_NONE, lineterminator="\n", escapechar="\\")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def _load(args):
    return read_edge_list(args.input, weighted=args.weighted, threshold=args.threshold)


def _labels(g) -> list:
    return [str(x) for x in g.labels] if g.labels is not None else [str(i) for i in range(1, g.n + 1)]


def _select(n: int, side: str, indices, top_r) -> list[int]:
    if indices is not None:
        return list(indices)
    if side == "beta":
        # beta_n = 0 identifies the model, so the block ends at n - 1
        return list(range(n - top_r, n))
    return list(range(n - top_r + 1, n + 1))


# -- commands ------------------------------------------------------------------


def cmd_fit(args) -> int:
    g = _load(args)
    report = check_existence(g)
    for msg in report.messages():
        logger.warning(msg)
    res = fit_mle(g, eps=args.eps, max_iter=args.max_iter)
    if args.canonical:
        with open(args.canonical, "w", encoding="utf-8") as fh:
            fh.write(to_edge_list(g))
    if args.format == "csv":
        rows = zip(range(1, g.n + 1), _labels(g), res.theta.alpha.tolist(), res.theta.beta.tolist())
        comments = [f"loglik={res.loglik!r}", f"iterations={res.iterations}", f"converged={res.converged}"]
        _emit(_rows_csv(["node", "label", "alpha", "beta"], rows, comments), args.output)
    else:
        out = {"command": "fit", "n": g.n, "edges": g.n_edges, "labels": _labels(g), **res.to_dict()}
        out.pop("null")
        _emit(_json(out), args.output)
    return EXIT_OK


def _test_payload(res, g, command) -> dict:
    return {"command": command, "n": g.n, "labels": _labels(g), **res.to_dict()}


def _emit_test(res, g, args, command):
    if args.format == "csv":
        rows = [
            ("method", res.method),
            ("statistic", res.statistic),
            ("deviance", res.deviance),
            ("reference", res.reference_label()),
            ("p_value", res.p_value),
            ("r", res.r),
            ("side", res.null.side),
            ("indices", " ".join(map(str, res.null.indices))),
        ]
        _emit(_rows_csv(["key", "value"], rows), args.output)
    else:
        _emit(_json(_test_payload(res, g, command)), args.output)


def cmd_test(args) -> int:
    g = _load(args)
    indices = _select(g.n, args.side, args.indices, args.top_r)
    if args.test == "wald":
        if args.null != "homogeneous":
            raise_invalid("the Wald test covers homogeneous nulls only")
        res = wald(g, indices, side=args.side, eps=args.eps, max_iter=args.max_iter)
    else:
        if args.null == "specified":
            if args.values is None:
                raise_invalid("--null specified needs --values")
            null = NullHypothesis.specified(indices, args.values, side=args.side)
        else:
            null = NullHypothesis.homogeneous(indices, side=args.side)
        res = lrt(g, null, ref=args.ref, r_switch=args.r_switch, eps=args.eps, max_iter=args.max_iter)
    if res.p_value is None:
        logger.warning("no valid reference distribution for this null; p-value omitted")
    _emit_test(res, g, args, "test")
    return EXIT_OK


def cmd_wald(args) -> int:
    g = _load(args)
    indices = _select(g.n, args.side, args.indices, args.top_r)
    res = wald(g, indices, side=args.side, eps=args.eps, max_iter=args.max_iter)
    _emit_test(res, g, args, "wald")
    return EXIT_OK


def raise_invalid(msg):
    raise InvalidNullError(msg)


def _scenario(args):
    n = args.n
    L = args.L * math.log(n) if args.Lmode == "logn" else args.L
    if args.scenario == "h01":
        return scenario_h01(n, L)
    if args.scenario == "h02":
        return scenario_h02_h03(n, args.r or n // 2, L)
    if args.scenario == "h03":
        return scenario_h02_h03(n, args.r or 10, L)
    return scenario_power(n, args.r or 5, args.c)


def _simulate(args):
    seed = args.seed if args.seed is not None else secrets.randbits(63)
    print(f"seed: {seed}", file=sys.stderr)
    scenario = _scenario(args)
    t0 = time.perf_counter()
    report = monte_carlo(
        scenario,
        test=args.test,
        ref=args.ref,
        replicates=args.reps,
        seed=seed,
        workers=args.workers,
        levels=tuple(args.levels),
        r_switch=args.r_switch,
        eps=args.eps,
        max_iter=args.max_iter,
    )
    logger.info("%d replicates in %.1fs, %d failed", args.reps, time.perf_counter() - t0, report.n_failed)
    return report


def cmd_simulate(args) -> int:
    report = _simulate(args)
    if args.format == "csv":
        _emit(report.to_csv(), args.output)
    else:
        _emit(_json({"command": "simulate", **report.to_dict()}), args.output)
    return EXIT_OK


def _read_statistics(path, use_deviance):
    """Return ``(statistics, reference, df)`` parsed from a file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        if use_deviance:
            if not data.get("deviances"):
                raise_invalid("this report carries no deviances (Wald test?)")
            r = len(data["scenario"]["null"]["indices"])
            return np.asarray(data["deviances"], dtype=float), "chisq", r - 1
        return np.asarray(data["statistics"], dtype=float), data.get("reference"), data.get("df")
    meta = {}
    values = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
            continue
        parts = line.split(",")
        try:
            values.append(float(parts[1] if len(parts) >= 3 else parts[0]))
        except ValueError:
            continue  # header row
    df = meta.get("df")
    df = int(df) if df not in (None, "None") else None
    return np.asarray(values, dtype=float), meta.get("reference"), df


def cmd_qq(args) -> int:
    if args.input:
        stats, ref, df = _read_statistics(args.input, args.deviance)
    elif args.scenario:
        report = _simulate(args)
        if args.deviance and report.test == "lrt":
            stats, ref, df = report.deviances, "chisq", report.scenario.null.r - 1
        else:
            stats, ref, df = report.statistics, report.reference, report.df
    else:
        raise_invalid("qq needs --input or --scenario")
    if args.ref != "auto":
        ref = args.ref
    if args.df is not None:
        df = args.df
    if ref not in ("chisq", "normal"):
        raise_invalid("cannot infer the reference distribution; pass --ref")
    pairs = qq_data(stats, ref, df)
    if args.format == "json":
        _emit(
            _json({"command": "qq", "reference": ref, "df": df, "pairs": pairs.tolist()}),
            args.output,
        )
    else:
        _emit(qq_to_csv(pairs), args.output)
    return EXIT_OK


def cmd_analyze(args) -> int:
    g = _load(args)
    existence = check_existence(g)
    for msg in existence.messages():
        logger.warning(msg)
    full = fit_mle(g, eps=args.eps, max_iter=args.max_iter)
    sides = ("alpha", "beta") if args.side == "both" else (args.side,)
    results = []
    for side in sides:
        for r in args.top_r:
            indices = _select(g.n, side, None, r)
            entry = {"side": side, "r": r, "indices": indices}
            try:
                null = NullHypothesis.homogeneous(indices, side=side)
                res = lrt(g, null, ref=args.ref, r_switch=args.r_switch, eps=args.eps, max_iter=args.max_iter, full=full)
                entry["lrt"] = res.to_dict(include_fits=False)
                entry["wald"] = wald(g, indices, side=side, full=full).to_dict(include_fits=False)
                entry["error"] = None
            except P0Error as exc:
                entry["lrt"] = entry["wald"] = None
                entry["error"] = str(exc)
                logger.warning("side=%s r=%d: %s", side, r, exc)
            results.append(entry)

    if args.format == "csv":
        rows = []
        for e in results:
            lrt_d, wald_d = e["lrt"] or {}, e["wald"] or {}
            rows.append(
                (e["side"], e["r"], lrt_d.get("statistic"), lrt_d.get("p_value"), wald_d.get("statistic"), wald_d.get("p_value"))
            )
        header = ["side", "r", "lrt_statistic", "lrt_p_value", "wald_statistic", "wald_p_value"]
        _emit(_rows_csv(header, rows, [f"n={g.n}", f"edges={g.n_edges}"]), args.output)
    else:
        out = {
            "command": "analyze",
            "n": g.n,
            "edges": g.n_edges,
            "density": density(g) if g.n >= 2 else None,
            "existence": existence.to_dict(),
            "loglik": full.loglik,
            "iterations": full.iterations,
            "results": results,
        }
        _emit(_json(out), args.output)
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "test": cmd_test,
    "wald": cmd_wald,
    "simulate": cmd_simulate,
    "qq": cmd_qq,
    "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except P0Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
