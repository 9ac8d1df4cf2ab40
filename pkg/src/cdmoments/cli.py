"""Command-line front end: ``cdm <command> ...``.

Reports go to stdout (or ``--output``) as CSV or JSON lines. CSV output starts
with a ``# config {...}`` line holding the resolved run configuration, then a
header and the rows; a ``# summary {...}`` line closes reports that have one.
JSON-lines output writes one object per row (``"record"`` names the row type)
and ends with a summary object that carries the configuration.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .cache import cached_divisor_table, cached_kernel_index, cached_weight_table, resolve_cache_dir
from .constants import c4_from_weights
from .core_arith import CongruenceSpec
from .divisor import DEFAULT_MEMORY_CAP, counting_limit, main_term, summatory_hyperbola
from .errors import CdmError, InvalidArgument, ResourceLimit
from .moments import DEFAULT_QUAD_ORDER, moment_experiment
from .relations import (PATTERNS, SHAPES, CrossKernelPairings, NearRelationQuery, count_near_relations,
                        enumerate_three_one, enumerate_two_two, min_nonzero_gap)

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3

log = logging.getLogger("cdmoments")


def format_float(value) -> str:
    return format(float(value), ".17g")


def _csv_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, Fraction):
        return format_float(float(value))
    return str(value)


def _json_value(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, Fraction)):
        return float(value)
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def _dumps(obj) -> str:
    return json.dumps(_json_value(obj), sort_keys=True, allow_nan=True)


class Report:
    """Writes a header, rows and an optional summary in the selected format."""

    def __init__(self, stream, fmt: str, config: dict, record: str, columns):
        self.stream, self.fmt, self.config, self.record = stream, fmt, config, record
        self.columns = list(columns)
        if fmt == "csv":
            stream.write(f"# config {_dumps(config)}\n")
            stream.write(",".join(self.columns) + "\n")

    def row(self, *values):
        if self.fmt == "csv":
            self.stream.write(",".join(_csv_cell(v) for v in values) + "\n")
        else:
            obj = {"record": self.record, **dict(zip(self.columns, values))}
            self.stream.write(_dumps(obj) + "\n")

    def summary(self, **fields):
        if self.fmt == "csv":
            if fields:
                self.stream.write(f"# summary {_dumps(fields)}\n")
        else:
            self.stream.write(_dumps({"record": "summary", **fields, "config": self.config}) + "\n")


def parse_number(text: str):
    """Integers and p/q stay exact; anything else becomes a float."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    if "/" in text:
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise InvalidArgument(f"not a number: {text!r}") from None
    try:
        value = float(text)
    except ValueError:
        raise InvalidArgument(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise InvalidArgument(f"number must be finite: {text!r}")
    return value


def parse_grid(text: str) -> list:
    """``start:stop:count[:log|linear]``."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise InvalidArgument(f"grid must be start:stop:count[:log|linear], got {text!r}")
    start, stop = float(parse_number(parts[0])), float(parse_number(parts[1]))
    count = parse_number(parts[2])
    scale = parts[3] if len(parts) == 4 else "linear"
    if not isinstance(count, int) or count < 1:
        raise InvalidArgument(f"grid count must be a positive integer, got {parts[2]!r}")
    if scale not in ("log", "linear"):
        raise InvalidArgument(f"grid scale must be log or linear, got {scale!r}")
    if scale == "log":
        if start <= 0 or stop <= 0:
            raise InvalidArgument("log grid needs positive endpoints")
        return np.geomspace(start, stop, count).tolist()
    return np.linspace(start, stop, count).tolist()


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidArgument(f"expected comma-separated numbers, got {text!r}") from None


def parse_ranges(text: str) -> tuple[int, int, int, int]:
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise InvalidArgument(f"ranges must be four integers, got {text!r}") from None
    if len(values) != 4:
        raise InvalidArgument(f"ranges must be four integers, got {text!r}")
    return values


def _base_config(args) -> dict:
    config = {"command": args.command, "seed": args.seed, "memory_cap": args.memory_cap,
              "cache_dir": None if args.cache_dir is None else str(args.cache_dir), "format": args.format}
    if getattr(args, "spec", None) is not None:
        config["spec"] = str(args.spec)
    return config


def cmd_delta(args, out) -> int:
    if (args.x is None) == (args.grid is None):
        raise InvalidArgument("give exactly one of --x or --grid")
    xs = [parse_number(args.x)] if args.x is not None else parse_grid(args.grid)
    config = _base_config(args) | {"x": args.x, "grid": args.grid}
    report = Report(out, args.format, config, "delta", ("x", "count", "main_term", "delta"))
    for x in xs:
        if x < 1:
            raise InvalidArgument(f"x must be >= 1, got {x}")
        count = summatory_hyperbola(args.spec, counting_limit(args.spec, x))
        main = main_term(args.spec, float(x))
        report.row(float(x), count, main, count - main)
    report.summary(rows=len(xs))
    return EXIT_OK


def cmd_c4(args, out) -> int:
    if args.y < 10:
        raise InvalidArgument(f"y must be >= 10, got {args.y}")
    weights = cached_weight_table(args.spec, args.y, args.cache_dir)
    est = c4_from_weights(weights)
    config = _base_config(args) | {"y": args.y}
    report = Report(out, args.format, config, "series", ("v", "binomial", "s4v", "tail_estimate"))
    for s in est.series:
        report.row(s.v, math.comb(3, s.v), s.value, s.tail_estimate)
    report.summary(c4=est.c4, tail=est.tail, y=est.y)
    return EXIT_OK


def cmd_moment(args, out) -> int:
    T_list = parse_float_list(args.T)
    if args.k not in (1, 2, 3, 4):
        raise InvalidArgument(f"supported k are 1..4, got {args.k}")
    if not T_list:
        raise InvalidArgument("--T needs at least one value")
    limit = math.floor(max(T_list) * args.spec.modulus)
    if limit + 1 > args.memory_cap:
        raise ResourceLimit(f"T={max(T_list):g} needs {limit + 1} table entries, cap is {args.memory_cap}")
    prefix = cached_divisor_table(args.spec, limit, args.cache_dir, args.memory_cap).prefix()
    rep = moment_experiment(args.spec, args.k, T_list, y_const=args.y_const, quad_order=args.quad_order,
                            memory_cap=args.memory_cap, workers=args.workers, prefix=prefix)
    config = _base_config(args) | {"k": args.k, "T": T_list, "y_const": args.y_const,
                                   "quad_order": args.quad_order, "workers": args.workers,
                                   "plot_data": args.plot_data} | {"experiment": rep.config}
    columns = ("T", "integral", "predicted", "ratio", "window_integral", "window_predicted")
    report = Report(out, args.format, config, "moment", columns)
    for row in rep.rows:
        report.row(row.T, row.integral, row.predicted, row.ratio, row.window_integral, row.window_predicted)
    report.summary(k=rep.k, fitted_exponent=rep.fitted_exponent, fitted_log_slope_stderr=rep.fitted_log_slope_stderr,
                   sign=rep.sign, theory_exponent=rep.theory_exponent)
    if args.plot_data:
        with open(args.plot_data, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("T_empirical,empirical,T_predicted,predicted\n")
            for row in rep.rows:
                fh.write(",".join(format_float(v) for v in (row.T, row.integral, row.T, row.predicted)) + "\n")
    return EXIT_OK


def cmd_relations(args, out) -> int:
    config = _base_config(args) | {"action": args.action}
    if args.action == "enumerate":
        config |= {"y": args.y, "shape": args.shape, "materialize_cross": args.materialize_cross}
        index = cached_kernel_index(args.y, args.cache_dir)
        report = Report(out, args.format, config, "relation", ("n1", "n2", "n3", "n4", "family"))
        rows = cross = 0
        items = enumerate_two_two(index) if args.shape == "two-two" else enumerate_three_one(index)
        for item in items:
            if isinstance(item, CrossKernelPairings):
                cross = item.count
                if args.materialize_cross:
                    for rel in item.materialize():
                        report.row(*rel.as_tuple(), "cross-kernel")
                        rows += 1
                continue
            report.row(*item.as_tuple(), "same-kernel")
            rows += 1
        report.summary(rows=rows, cross_kernel_count=cross)
    elif args.action == "count-near":
        config |= {"ranges": list(args.ranges), "window": args.window, "pattern": args.pattern}
        query = NearRelationQuery(args.ranges, args.window, args.pattern)
        report = Report(out, args.format, config, "count", ("count",))
        report.row(count_near_relations(query))
        report.summary()
    else:
        config |= {"bound": args.bound, "pattern": args.pattern}
        res = min_nonzero_gap(args.bound, args.pattern)
        report = Report(out, args.format, config, "gap", ("pattern", "gap", "n1", "n2", "n3", "n4", "kong_ratio"))
        report.row(args.pattern, res.gap, *res.witness, res.kong_ratio)
        report.summary()
    return EXIT_OK


def cmd_verify(args, out) -> int:
    from .verification import run_level

    def show(result):
        if args.format == "csv":
            out.write(result.line() + "\n")
        else:
            out.write(_dumps({"record": "criterion", "number": result.number, "title": result.title,
                              "passed": result.passed, "detail": result.detail}) + "\n")
        out.flush()

    results = run_level(args.level, seed=args.seed, workers=args.workers, report=show)
    failed = [r.number for r in results if not r.passed]
    if args.format == "csv":
        verdict = "all criteria passed" if not failed else "FAILED criteria: " + ", ".join(map(str, failed))
        out.write(f"{args.level}: {verdict}\n")
    else:
        out.write(_dumps({"record": "summary", "failed": failed, "config": _base_config(args) | {"level": args.level}})
                  + "\n")
    return EXIT_VERIFY if failed else EXIT_OK


def _spec(text: str) -> CongruenceSpec:
    try:
        return CongruenceSpec.parse(text)
    except InvalidArgument as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(float(text)) if "e" in text.lower() else int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    from .verification import DEFAULT_SEED

    def common(target, defaults: bool):
        # subcommands repeat the global options; SUPPRESS keeps them from
        # overwriting values given before the subcommand name
        def d(value):
            return value if defaults else argparse.SUPPRESS

        target.add_argument("--format", choices=("csv", "json-lines"), default=d("csv"))
        target.add_argument("--output", default=d(None), help="write the report here instead of stdout")
        target.add_argument("--cache-dir", default=d(None),
                            help="cache directory (default: $CDM_CACHE_DIR, then ./.cdm-cache)")
        target.add_argument("--no-cache", action="store_true", default=d(False), help="neither read nor write caches")
        target.add_argument("--seed", type=_seed, default=d(DEFAULT_SEED))
        target.add_argument("--memory-cap", type=_positive_int, default=d(DEFAULT_MEMORY_CAP),
                            help="largest table size in entries")
        target.add_argument("-v", "--verbose", action="store_true", default=d(False))

    shared = argparse.ArgumentParser(add_help=False)
    common(shared, defaults=False)

    parser = argparse.ArgumentParser(prog="cdm", description="Divisor problem with congruence conditions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common(parser, defaults=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("delta", parents=[shared], help="count, main term and Delta at x or on a grid")
    p.add_argument("--spec", type=_spec, required=True, help="l1,M1,l2,M2")
    p.add_argument("--x")
    p.add_argument("--grid", help="start:stop:count[:log|linear]")

    p = sub.add_parser("c4", parents=[shared], help="truncated fourth-moment constant")
    p.add_argument("--spec", type=_spec, required=True)
    p.add_argument("--y", type=_positive_int, required=True)

    workers_default = os.cpu_count() or 1
    p = sub.add_parser("moment", parents=[shared], help="power moments of Delta against theory")
    p.add_argument("--spec", type=_spec, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--T", required=True, help="comma-separated, ascending, e.g. 1e4,1e5,1e6")
    p.add_argument("--y-const", type=_positive_int, default=10**4)
    p.add_argument("--quad-order", type=int, default=DEFAULT_QUAD_ORDER)
    p.add_argument("--workers", type=_positive_int, default=workers_default)
    p.add_argument("--plot-data", help="also write T_empirical,empirical,T_predicted,predicted CSV here")

    p = sub.add_parser("relations", parents=[shared], help="square-root relations")
    rel = p.add_subparsers(dest="action", required=True)
    q = rel.add_parser("enumerate", parents=[shared])
    q.add_argument("--y", type=_positive_int, required=True)
    q.add_argument("--shape", choices=SHAPES, default="two-two")
    q.add_argument("--materialize-cross", action="store_true", help="also list the cross-kernel pairings")
    q = rel.add_parser("count-near", parents=[shared])
    q.add_argument("--ranges", type=parse_ranges, required=True, help="N1,N2,N3,N4 for n_j in (N_j, 2 N_j]")
    q.add_argument("--window", type=float, required=True)
    q.add_argument("--pattern", choices=tuple(PATTERNS), default="++--")
    q = rel.add_parser("kong-scan", parents=[shared])
    q.add_argument("--bound", type=int, required=True)
    q.add_argument("--pattern", choices=tuple(PATTERNS), default="++--")

    p = sub.add_parser("verify", parents=[shared], help="run the acceptance checks")
    p.add_argument("level", choices=("quick", "full"))
    p.add_argument("--workers", type=_positive_int, default=workers_default)
    return parser


COMMANDS = {"delta": cmd_delta, "c4": cmd_c4, "moment": cmd_moment, "relations": cmd_relations,
            "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.cache_dir = None if args.no_cache else resolve_cache_dir(args.cache_dir)
    out = open(args.output, "w", encoding="utf-8", newline="\n") if args.output else sys.stdout
    try:
        return COMMANDS[args.command](args, out)
    except ResourceLimit as err:
        print(f"cdm: resource limit: {err}", file=sys.stderr)
        return EXIT_RESOURCE
    except (CdmError, ValueError) as err:
        print(f"cdm: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if out is not sys.stdout:
            out.close()
        else:
            out.flush()


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
