"""Command line entry point: ``bakerlab run | maps | selftest``."""
import argparse
import csv
from datetime import datetime, timezone
from enum import Enum
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from . import classify, inner, maps
from .errors import BakerLabError, ConfigError, InvalidParam, UnknownMap
from .experiments import run_experiment
from .parallel import default_threads

REPORT_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3


def thresholds():
    out = dict(classify.THRESHOLDS)
    out.update(parabolic_derivative_tol=inner.PARABOLIC_DERIV_TOL,
               parabolic3_second_derivative_tol=inner.PARABOLIC3_SECOND_TOL,
               attracting_q_tol=inner.ATTRACTING_Q_TOL)
    return out


def to_plain(x):
    """JSON-safe copy: numpy scalars unwrapped, complex as [re, im], non-finite floats as strings."""
    if isinstance(x, dict):
        return {str(k): to_plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [to_plain(v) for v in x.tolist()]
    if isinstance(x, Enum):
        return to_plain(x.value)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [to_plain(x.real), to_plain(x.imag)]
    return x


def build_report(cfg, threads):
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    res = run_experiment(cfg, threads)
    report = {
        "report_version": REPORT_VERSION,
        "version": __version__,
        "experiment": cfg["experiment"],
        "config": res.config,
        "seed": res.config["seed"],
        "result": res.result,
        "thresholds": thresholds(),
        # the only non-reproducible block
        "runtime": {"wall_time_s": time.perf_counter() - t0, "threads": threads, "started_at": started},
    }
    return to_plain(report), res.tables


def dumps(report):
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_tables(tables, out_dir, prefix):
    paths = []
    for name, (comment, header, rows) in tables.items():
        path = os.path.join(out_dir, f"{prefix}-{name}.csv")
        with open(path, "w", newline="") as fh:
            fh.write(f"# {comment}\n")
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        paths.append(path)
    return paths


def cmd_run(args):
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    report, tables = build_report(cfg, args.threads)
    out_dir = args.out or cfg.get("output", {}).get("dir")
    text = dumps(report)
    if out_dir is None:
        sys.stdout.write(text)
        return EXIT_OK
    os.makedirs(out_dir, exist_ok=True)
    prefix = cfg["experiment"]
    path = os.path.join(out_dir, f"{prefix}-report.json")
    with open(path, "w") as fh:
        fh.write(text)
    written = [path]
    if cfg.get("output", {}).get("csv", True):
        written += write_tables(tables, out_dir, prefix)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_maps(args):
    for line in maps.list_maps():
        print(line)
    return EXIT_OK


def cmd_selftest(args):
    from . import acceptance
    ok = True
    for number, passed, detail, seconds in acceptance.run_all(only=args.only):
        ok &= passed
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({seconds:.1f}s) {detail}", flush=True)
    return EXIT_OK if ok else EXIT_FAIL


def _threads(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("thread count must be positive")
    return n


def parser():
    p = argparse.ArgumentParser(prog="bakerlab", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--threads", type=_threads, default=None,
                   help="worker threads (default: BAKERLAB_THREADS or CPU count)")
    r.add_argument("--out", default=None, help="directory for the report and CSV tables")
    r.set_defaults(func=cmd_run)
    m = sub.add_parser("maps", help="list the map catalog")
    m.set_defaults(func=cmd_maps)
    s = sub.add_parser("selftest", help="run the acceptance criteria")
    s.add_argument("--only", type=int, nargs="*", default=None, help="criterion numbers to run")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    args = parser().parse_args(argv)
    if getattr(args, "threads", 1) is None:
        try:
            args.threads = default_threads()
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, UnknownMap, InvalidParam) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BakerLabError, ArithmeticError, ValueError) as exc:
        print(f"compute error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
