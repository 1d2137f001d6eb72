"""Command-line front end: ``qpyramid {info,pom,sweep,threshold,verify}``.

Exit codes: 0 success, 1 usage, 2 domain error, 3 numerical or I/O failure,
4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .geometry import DomainError, make_pyramid, pyramid_from_nr0, signal_states, volume
from .information import (
    failure_probability,
    guess_odds,
    ims_info,
    mud_failure,
    necessary_condition_residual,
    scheme_info,
    srm_info,
    unified_info,
)
from .measurement import Scheme, SchemeSpec, ims, named_pom, scheme_spec, unified_pom, validate_pom
from .optimizer import AscentConfig, ConvergenceError, SweepRow, steepest_ascent_ims, sweep, threshold_bracket

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3, 4
VERIFY_GAP = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# formatting


def _plain(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    if isinstance(x, bool):
        return str(x).lower()
    if x is None:
        return "none"
    if isinstance(x, (list, tuple)):
        return " ".join(_plain(v) for v in x)
    return str(x)


def _jsonable(x):
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    return x


def _emit(record: dict, fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        json.dump(_jsonable(record), out, indent=2, allow_nan=False)
        out.write("\n")
    elif fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(record.keys())
        w.writerow([repr(v) if isinstance(v, float) else v for v in record.values()])
    else:
        width = max(len(k) for k in record)
        for k, v in record.items():
            out.write(f"{k:<{width}}  {_plain(v)}\n")


# --------------------------------------------------------------------------
# argument handling


def _add_shape(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="number of edges N >= 2")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--r0", type=float, help="squared height parameter r0 in [0, 1]")
    g.add_argument("--nr0", type=float, help="N*r0 in [0, N]")


def _add_format(p: argparse.ArgumentParser, default: str = "plain") -> None:
    p.add_argument("--format", choices=("plain", "json", "csv"), default=default)


def _params(args):
    if args.r0 is not None:
        return make_pyramid(args.n, args.r0)
    return pyramid_from_nr0(args.n, args.nr0)


def _spec_for(args, params) -> SchemeSpec | None:
    scheme = Scheme(args.scheme)
    custom = args.t is not None or args.w2 is not None
    if scheme is Scheme.CUSTOM:
        if args.t is None or args.w2 is None:
            raise UsageError("--scheme custom needs both --t and --w2")
        return SchemeSpec.from_t_w2(args.t, args.w2)
    if custom:
        raise UsageError("--t and --w2 apply only to --scheme custom")
    if scheme in (Scheme.MUD, Scheme.MUD_REFINED) and not 0.0 < params.r0 < 1.0:
        return None
    return scheme_spec(params, scheme)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qpyramid", description="Measurements and accessible information of quantum pyramids.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("info", help="information and shape figures for one scheme")
    _add_shape(p)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="ims")
    p.add_argument("--t", type=float, help="lift parameter (custom scheme)")
    p.add_argument("--w2", type=float, help="lifted-edge weight (custom scheme)")
    _add_format(p)

    p = sub.add_parser("pom", help="outcome matrices of a scheme")
    _add_shape(p)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="ims")
    p.add_argument("--t", type=float, help="lift parameter (custom scheme)")
    p.add_argument("--w2", type=float, help="lifted-edge weight (custom scheme)")
    _add_format(p, default="json")

    p = sub.add_parser("sweep", help="CSV table over a grid of N*r0")
    p.add_argument("--n", type=int, nargs="+", required=True, help="one or more edge counts")
    p.add_argument("--nr0-min", type=float, required=True, help="first grid value of N*r0")
    p.add_argument("--nr0-max", type=float, required=True, help="last grid value of N*r0")
    p.add_argument("--steps", type=int, required=True, help="number of grid points")
    p.add_argument("--spacing", choices=("linear", "log"), default="linear")
    p.add_argument("--schemes", default="srm,mud,mud_refined,ims",
                   help="comma-separated scheme tags (custom is not allowed)")
    p.add_argument("--output", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--threads", type=int, default=1, help="worker threads (output is identical)")
    _add_format(p, default="csv")

    p = sub.add_parser("threshold", help="largest N*r0 at which the IMS leaves the SRM")
    p.add_argument("--n", type=int, required=True, help="number of edges N >= 3")
    p.add_argument("--width", type=float, default=1e-5, help="final bisection width")
    _add_format(p)

    p = sub.add_parser("verify", help="cross-check the closed-form IMS against numerical ascent")
    _add_shape(p)
    p.add_argument("--seed", type=int, default=0, help="seed of the random starting POMs")
    p.add_argument("--restarts", type=int, default=10, help="independent ascent runs")
    p.add_argument("--outcomes", type=int, help="number of outcomes (default N(N+1)/2)")
    p.add_argument("--max-iterations", type=int, default=20000)
    p.add_argument("--info-tolerance", type=float, default=1e-15)
    p.add_argument("--threads", type=int, default=1)
    _add_format(p)
    return parser


# --------------------------------------------------------------------------
# subcommands


def cmd_info(args) -> int:
    params = _params(args)
    spec = _spec_for(args, params)
    if Scheme(args.scheme) is Scheme.CUSTOM:
        info = unified_info(params, spec)
    else:
        info = scheme_info(params, args.scheme)
    base = srm_info(params)
    if Scheme(args.scheme) in (Scheme.MUD, Scheme.MUD_REFINED):
        failure = mud_failure(params)
    else:
        failure = failure_probability(params, spec)
    record = {
        "n": params.n,
        "r0": params.r0,
        "nr0": params.nr0,
        "r1": params.r1,
        "classification": params.classification,
        "scheme": args.scheme,
        "info_bits": info,
        "srm_info_bits": base,
        "ratio_to_srm": info / base if base > 0.0 else math.nan,
        "t_opt": spec.t if spec is not None else math.nan,
        "failure_prob": failure,
        "guess_odds": guess_odds(params),
        "mud_failure": mud_failure(params),
        "volume": volume(params),
    }
    _emit(record, args.format)
    return EXIT_OK


def cmd_pom(args) -> int:
    params = _params(args)
    scheme = Scheme(args.scheme)
    if scheme is Scheme.CUSTOM:
        spec = _spec_for(args, params)
        pom = unified_pom(params, spec)
    elif scheme is Scheme.IMS:
        _spec_for(args, params)
        pom, spec = ims(params)
    else:
        spec = _spec_for(args, params)
        if spec is None:
            raise DomainError("unambiguous discrimination needs 0 < r0 < 1")
        pom = named_pom(params, scheme)
    report = validate_pom(pom)
    outcomes = [
        {"label": label, "weight": float(np.trace(op)), "matrix": op.tolist()}
        for label, op in pom
    ]
    record = {
        "n": params.n,
        "r0": params.r0,
        "scheme": scheme.value,
        "t": spec.t,
        "w1": spec.w1,
        "w2": spec.w2,
        "w3": spec.w3,
        "outcomes": outcomes,
        "validation": {
            "completeness_residual": report.completeness_residual,
            "min_eigenvalue": report.min_eigenvalue,
            "ok": report.ok(),
        },
    }
    if args.format == "json":
        _emit(record, "json")
    elif args.format == "csv":
        raise UsageError("pom supports --format json or plain")
    else:
        head = {k: record[k] for k in ("n", "r0", "scheme", "t", "w1", "w2", "w3")}
        head["completeness_residual"] = report.completeness_residual
        head["min_eigenvalue"] = report.min_eigenvalue
        _emit(head, "plain")
        for o in outcomes:
            print(f"{o['label']}  weight {_plain(o['weight'])}")
            for row in o["matrix"]:
                print("  " + " ".join(format(v, " .12g") for v in row))
    return EXIT_OK


def _grid(args) -> np.ndarray:
    if args.steps < 1 or args.nr0_min > args.nr0_max:
        raise UsageError("empty grid: need --steps >= 1 and --nr0-min <= --nr0-max")
    if args.steps == 1:
        return np.array([args.nr0_min])
    if args.spacing == "log":
        if args.nr0_min <= 0.0:
            raise UsageError("log spacing needs --nr0-min > 0")
        return np.geomspace(args.nr0_min, args.nr0_max, args.steps)
    return np.linspace(args.nr0_min, args.nr0_max, args.steps)


def cmd_sweep(args) -> int:
    grid = _grid(args)
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    if not schemes:
        raise UsageError("--schemes is empty")
    try:
        tags = [Scheme(s) for s in schemes]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if Scheme.CUSTOM in tags:
        raise UsageError("the custom scheme cannot be swept")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    rows: list[SweepRow] = []
    for n in args.n:
        rows.extend(sweep(n, grid, tags, threads=args.threads))

    buf = io.StringIO()
    if args.format == "json":
        json.dump(_jsonable([dict(zip(SweepRow.FIELDS, r.as_record())) for r in rows]),
                  buf, indent=2, allow_nan=False)
        buf.write("\n")
    elif args.format == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SweepRow.FIELDS)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r.as_record()])
    else:
        for r in rows:
            buf.write(" ".join(_plain(v) for v in r.as_record()) + "\n")

    if args.output == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    return EXIT_OK


def cmd_threshold(args) -> int:
    if args.n < 3:
        raise UsageError("threshold needs --n >= 3")
    if not args.width > 0.0:
        raise UsageError("--width must be positive")
    bracket = threshold_bracket(args.n, args.width)
    if bracket is None:
        record = {"n": args.n, "threshold_nr0": None, "bracket_low": None,
                  "bracket_high": None, "width": None}
    else:
        lo, hi = bracket
        record = {"n": args.n, "threshold_nr0": 0.5 * (lo + hi), "bracket_low": lo,
                  "bracket_high": hi, "width": hi - lo}
    _emit(record, args.format)
    return EXIT_OK


def cmd_verify(args) -> int:
    params = _params(args)
    if args.restarts < 1 or args.threads < 1:
        raise UsageError("--restarts and --threads must be >= 1")
    n = params.n
    k = args.outcomes if args.outcomes is not None else n * (n + 1) // 2
    if k < n:
        raise UsageError("--outcomes must be at least N")
    config = AscentConfig(
        max_iterations=args.max_iterations,
        info_tolerance=args.info_tolerance,
        restarts=args.restarts,
        rng_seed=args.seed,
    )
    states, priors = signal_states(params)
    pom, oracle = steepest_ascent_ims(states, priors, k, config, threads=args.threads)
    closed = ims_info(params)
    closed_pom, _ = ims(params)
    gap = closed - oracle
    passed = abs(gap) <= VERIFY_GAP
    record = {
        "n": n,
        "r0": params.r0,
        "nr0": params.nr0,
        "seed": args.seed,
        "restarts": args.restarts,
        "k_outcomes": k,
        "oracle_info_bits": oracle,
        "closed_form_info_bits": closed,
        "gap_bits": gap,
        "oracle_residual": necessary_condition_residual(states, priors, pom),
        "closed_form_residual": necessary_condition_residual(states, priors, closed_pom),
        "passed": passed,
    }
    _emit(record, args.format)
    return EXIT_OK if passed else EXIT_VERIFY


COMMANDS = {
    "info": cmd_info,
    "pom": cmd_pom,
    "sweep": cmd_sweep,
    "threshold": cmd_threshold,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qpyramid {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"qpyramid {args.command}: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConvergenceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"qpyramid {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"qpyramid {args.command}: cannot write output: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
