"""Command-line front end and artifact serialization.

Subcommands: construct, simulate, de, window, threshold, export.  Every
artifact-producing command also writes `<out>.manifest.json` recording
the full parameter set, seeds, grid settings, wall clock, and sha256
digests of the outputs, so results can be reproduced bit for bit.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 a
non-convergence verdict when --strict is given.

A plain key=value config file (--config) supplies defaults that explicit
flags override.  Relative --out paths are resolved against the
SCLDPC_OUT_DIR environment variable when it is set.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .alist import AlistError, AlistMatrix, export_alist, import_alist
from .bp import Schedule, monte_carlo
from .channels import bec, biawgn, sigma_from_ebn0
from .de import DEConfig, run_de
from .density import GridError, NumericalFailure
from .ensemble import EnsembleParams, design_rate, sample_ensemble, terminate
from .threshold import (BracketError, ThresholdQuery, bisect_threshold,
                        L_for_target_rate)
from .window import CONVERGED, WindowConfig, profile_updates, run_windowed

SCHEMA_VERSION = "scldpc-artifact-v1"
OUT_DIR_ENV = "SCLDPC_OUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_NOT_CONVERGED = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(x):
    """17-significant-digit float formatting for lossless round trips."""
    if isinstance(x, float):
        return float(f"{x:.17g}")
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _fmt(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _resolve_out(path: str) -> str:
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _write_json(path: str, payload: dict) -> None:
    payload = dict(payload)
    payload.setdefault("schema", SCHEMA_VERSION)
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_path: str, subcommand: str, args: argparse.Namespace,
                    started: float, outputs: list) -> None:
    manifest = {
        "schema": SCHEMA_VERSION,
        "subcommand": subcommand,
        "parameters": {k: _jsonable(v) for k, v in sorted(vars(args).items())
                       if k not in ("func", "config")},
        "version": __version__,
        "wall_clock_s": _fmt(time.time() - started),
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
    }
    with open(out_path + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _channel_args(p: _Parser, *, with_param: bool = True):
    p.add_argument("--channel", required=True, choices=("bec", "awgn"))
    if with_param:
        p.add_argument("--epsilon", type=float, help="BEC erasure probability")
        p.add_argument("--ebn0-db", type=float, help="BiAWGN Eb/N0 in dB")


def _make_channel(args, rate: float):
    if args.channel == "bec":
        if args.epsilon is None:
            raise _UsageError("--epsilon is required for --channel bec")
        return bec(args.epsilon), args.epsilon
    if args.ebn0_db is None:
        raise _UsageError("--ebn0-db is required for --channel awgn")
    return biawgn(sigma_from_ebn0(args.ebn0_db, rate)), args.ebn0_db


def _parse_schedule(text: str) -> Schedule:
    if text == "parallel":
        return Schedule.parallel()
    if text.startswith("window:"):
        return Schedule.window(int(text.split(":", 1)[1]))
    raise _UsageError(f"unknown schedule {text!r} (use parallel or window:W)")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_construct(args) -> int:
    started = time.time()
    params = EnsembleParams(args.J, args.M, args.L)
    code = terminate(sample_ensemble(params, args.seed))
    out = _resolve_out(args.out)
    export_alist(AlistMatrix.from_code(code), out)
    outputs = [out]
    if args.json:
        meta = _resolve_out(args.json)
        _write_json(meta, {
            "J": args.J, "M": args.M, "L": args.L, "seed": args.seed,
            "n": code.n, "n_checks": code.n_checks,
            "design_rate": _fmt(float(design_rate(args.J, args.L))),
        })
        outputs.append(meta)
    _write_manifest(out, "construct", args, started, outputs)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    started = time.time()
    params = EnsembleParams(args.J, args.M, args.L)
    schedule = _parse_schedule(args.schedule)
    rate = float(design_rate(args.J, args.L))
    if args.channel == "bec":
        grid = [args.param]
        kind = "bec"
    else:
        grid = [args.param]
        kind = "biawgn"
    points = monte_carlo(params, kind, grid, trials=args.trials,
                         seed=args.seed, max_iters=args.max_iters,
                         schedule=schedule, ebn0_rate=rate if kind == "biawgn" else None,
                         jobs=args.jobs)
    out = _resolve_out(args.out)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["channel_param", "trials", "bit_errors", "frame_errors",
                    "ber", "fer", "mean_iters"])
        for pt in points:
            w.writerow([f"{pt.channel_param:.17g}", pt.trials, pt.bit_errors,
                        pt.frame_errors, f"{pt.ber:.17g}", f"{pt.fer:.17g}",
                        f"{pt.mean_iters:.17g}"])
    _write_manifest(out, "simulate", args, started, [out])
    return EXIT_OK


def _cmd_de(args) -> int:
    started = time.time()
    params = EnsembleParams(args.J, 2, args.L)
    rate = 0.5 if args.block_baseline else float(design_rate(args.J, args.L))
    channel, param = _make_channel(args, rate)
    cfg = DEConfig(params, channel, delta=args.delta, rmax=args.rmax,
                   max_updates=args.max_updates, pb_stride=args.pb_stride,
                   block_baseline=args.block_baseline)
    result = run_de(cfg)
    out = _resolve_out(args.out)
    _write_json(out, {
        "subcommand": "de",
        "channel": {"kind": channel.kind, "param": _fmt(channel.param),
                    "cli_value": _fmt(param)},
        "J": args.J, "L": args.L, "block_baseline": args.block_baseline,
        "grid": {"delta": _fmt(args.delta), "rmax": _fmt(args.rmax)},
        "A": result.trace.A, "B_br": result.trace.B_br,
        "b_max": result.trace.b_max,
        "argmax": result.trace.argmax,
        "breakout_iteration": result.trace.breakout_iteration,
        "pb_levels": {str(k): v for k, v in result.trace.pb_levels.items()},
        "contraction": result.trace.contraction,
        "dominance_violations_eq5": result.trace.dominance_violations_eq5,
        "dominance_violations_linear": result.trace.dominance_violations_linear,
        "initialization": result.trace.initialization,
        "converged_certified": result.converged_certified,
        "converged_practical": result.converged_practical,
        "stalled": result.stalled,
        "iterations": result.iterations,
        "updates": result.updates,
    })
    _write_manifest(out, "de", args, started, [out])
    if args.strict and not result.converged_certified:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_window(args) -> int:
    started = time.time()
    params = EnsembleParams(args.J, 2, args.L)
    channel, param = _make_channel(args, float(design_rate(args.J, args.L)))
    de_cfg = DEConfig(params, channel, delta=args.delta, rmax=args.rmax,
                      max_updates=args.max_updates)
    trace_levels = tuple(int(t) for t in args.trace_levels.split(",")) \
        if args.trace_levels else ()
    cfg = WindowConfig(de_cfg, args.W, B0=args.B0,
                       max_updates=args.max_updates,
                       trace_levels=trace_levels)
    report = run_windowed(cfg)
    plateau = profile_updates(report)
    out = _resolve_out(args.out)
    _write_json(out, {
        "subcommand": "window",
        "channel": {"kind": channel.kind, "param": _fmt(channel.param),
                    "cli_value": _fmt(param)},
        "J": args.J, "L": args.L, "W": args.W,
        "B0": report.B0, "B_br": report.B_br,
        "verdict": report.verdict,
        "stall_position": report.stall_position,
        "shifts": report.shifts,
        "total_updates": report.total_updates,
        "updates_per_level": report.updates_per_level,
        "level_traces": {str(t): tr for t, tr in report.level_traces.items()},
        "plateau": {
            "empty": plateau.empty, "start_level": plateau.start_level,
            "end_level": plateau.end_level, "mean": plateau.mean,
            "max_relative_deviation": plateau.max_relative_deviation,
        },
    })
    _write_manifest(out, "window", args, started, [out])
    if args.strict and report.verdict != CONVERGED:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_threshold(args) -> int:
    started = time.time()
    if args.target_rate is not None:
        L = L_for_target_rate(args.J, args.target_rate)
    elif args.L is not None:
        L = args.L
    else:
        raise _UsageError("one of --L or --target-rate is required")
    engine, width = "parallel", None
    if args.engine.startswith("window:"):
        engine, width = "window", int(args.engine.split(":", 1)[1])
    elif args.engine != "parallel":
        raise _UsageError(f"unknown engine {args.engine!r}")
    kind = "bec" if args.channel == "bec" else "biawgn"
    q = ThresholdQuery(EnsembleParams(args.J, 2, L), kind, args.lo, args.hi,
                       tol=args.tol, engine=engine, window_width=width,
                       certificate=args.certificate,
                       max_updates=args.max_updates,
                       delta=args.delta, rmax=args.rmax,
                       block_baseline=args.block_baseline)
    result = bisect_threshold(q)
    out = _resolve_out(args.out)
    _write_json(out, {
        "subcommand": "threshold",
        "channel": kind, "J": args.J, "L": L,
        "rate": q.rate,
        "engine": args.engine,
        "certificate": result.certificate,
        "threshold": result.threshold,
        "sigma": result.sigma,
        "bracket": list(result.bracket),
        "tolerance": q.tol,
        "updates": result.updates,
        "probes": [{"value": _fmt(p.value), "converged": p.converged,
                    "verdict": p.verdict, "updates": p.updates}
                   for p in result.probes],
    })
    _write_manifest(out, "threshold", args, started, [out])
    return EXIT_OK


def _cmd_export(args) -> int:
    started = time.time()
    out = _resolve_out(args.out)
    src = args.input
    if src.endswith(".alist"):
        matrix = import_alist(src)
        export_alist(matrix, out)
    elif src.endswith(".json"):
        with open(src) as fh:
            payload = json.load(fh)
        if payload.get("subcommand") != "window":
            raise _UsageError("export supports alist files and window reports")
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["series", "level", "updates", "value"])
            for lvl, count in enumerate(payload["updates_per_level"], start=1):
                w.writerow(["updates_per_level", lvl, "", count])
            for lvl, pairs in sorted(payload.get("level_traces", {}).items(),
                                     key=lambda kv: int(kv[0])):
                for upd, pb in pairs:
                    w.writerow(["pb_trace", lvl, upd, f"{pb:.17g}"])
    else:
        raise _UsageError("export supports .alist and window-report .json inputs")
    _write_manifest(out, "export", args, started, [out])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> _Parser:
    parser = _Parser(prog="scldpc", description=__doc__)
    parser.add_argument("--config", help="key=value file with flag defaults")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("construct", help="sample a code and write its alist")
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--json", help="optional metadata JSON path")
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("simulate", help="Monte-Carlo BER/FER simulation")
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--channel", required=True, choices=("bec", "awgn"))
    p.add_argument("--param", type=float, required=True,
                   help="erasure probability (bec) or Eb/N0 in dB (awgn)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--schedule", default="parallel")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("de", help="density evolution, parallel schedule")
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    _channel_args(p)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--rmax", type=float, default=30.0)
    p.add_argument("--max-updates", type=int, default=100_000)
    p.add_argument("--pb-stride", type=int, default=10)
    p.add_argument("--block-baseline", action="store_true")
    p.add_argument("--strict", action="store_true",
                   help="exit 3 unless convergence is certified")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_de)

    p = sub.add_parser("window", help="sliding-window DE schedule")
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--W", type=int, required=True)
    _channel_args(p)
    p.add_argument("--B0", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--rmax", type=float, default=30.0)
    p.add_argument("--max-updates", type=int, default=10_000_000)
    p.add_argument("--trace-levels", default="",
                   help="comma-separated levels whose P_b is sampled")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_window)

    p = sub.add_parser("threshold", help="bisection threshold search")
    p.add_argument("--channel", required=True, choices=("bec", "awgn"))
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--L", type=int)
    p.add_argument("--target-rate", type=float)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--engine", default="parallel",
                   help="parallel or window:W")
    p.add_argument("--certificate", default="breakout",
                   choices=("breakout", "practical"))
    p.add_argument("--max-updates", type=int, default=3_000_000)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--rmax", type=float, default=30.0)
    p.add_argument("--block-baseline", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("export", help="re-export artifacts (alist/CSV)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)

    return parser


def _apply_config(parser: _Parser, argv: list) -> list:
    """Read --config key=value defaults without consuming other flags."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    try:
        path = argv[idx + 1]
    except IndexError:
        raise _UsageError("--config requires a file path")
    defaults = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise _UsageError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            defaults[key.strip().replace("-", "_")] = value.strip()
    parser.set_defaults(**defaults)
    for p in parser._subparsers._group_actions[0].choices.values():
        known = {a.dest for a in p._actions}
        p.set_defaults(**{k: _coerce(p, k, v) for k, v in defaults.items()
                          if k in known})
        for action in p._actions:
            # a config-supplied value satisfies an otherwise required flag
            if action.dest in defaults:
                action.required = False
    return argv[:idx] + argv[idx + 2:]


def _coerce(subparser, dest: str, value: str):
    for action in subparser._actions:
        if action.dest == dest and action.type is not None:
            return action.type(value)
        if action.dest == dest and isinstance(action, argparse._StoreTrueAction):
            return value.lower() in ("1", "true", "yes")
    return value


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, GridError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (AlistError, BracketError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
