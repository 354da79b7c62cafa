"""Command line entry point: ``ieqfem run|mms|bench``.

Exit codes: 0 success, 2 configuration error, 3 solver or domain error,
4 identity-check failure (``--strict``).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .assembly import set_threads
from .config import load_config
from .driver import format_bench, run_bench, run_mms, run_simulation
from .errors import ConfigError, IdentityCheckError, IeqFemError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IDENTITY = 0, 2, 3, 4


def _parser():
    ap = argparse.ArgumentParser(prog="ieqfem", description="IEQ finite element solver for Cahn-Hilliard and Allen-Cahn.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the simulation described by a TOML file")
    r.add_argument("config")
    r.add_argument("--strict", action="store_true", help="check the energy laws and mass balance every step")

    m = sub.add_parser("mms", help="convergence study with a manufactured solution")
    m.add_argument("equation", choices=("ch", "ac"))
    m.add_argument("--scheme", default="bdf1", choices=("bdf1", "cn", "bdf2"))
    m.add_argument("--method", type=int, default=2, choices=(1, 2, 3))
    m.add_argument("--mode", default="temporal", choices=("temporal", "spatial"))
    m.add_argument("--levels", type=int, default=4)
    m.add_argument("--degree", type=int, choices=(1, 2))
    m.add_argument("--reference", default="fine", choices=("fine", "exact"),
                   help="temporal mode: measure against a fine-step solution or the exact one")

    b = sub.add_parser("bench", help="time methods 1-3 on the same problem")
    b.add_argument("config")
    b.add_argument("--methods", default="1,2,3")
    b.add_argument("--repeats", type=int, default=1)
    return ap


def _methods(text):
    try:
        out = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma separated list of 1, 2, 3; got {text!r}", key="--methods") from None
    if not out or any(m not in (1, 2, 3) for m in out):
        raise ConfigError(f"expected a comma separated list of 1, 2, 3; got {text!r}", key="--methods")
    return out


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        set_threads()
    except ValueError as exc:
        print(f"error: THREADS: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.strict:
                cfg = replace(cfg, time=replace(cfg.time, strict=True))
            res = run_simulation(cfg)
            last = res.rows[-1]
            print(f"{res.state.step} steps, t = {res.state.time:.6g}, energy = {last.energy:.12e}, mass = {last.mass:.12e}")
            if res.margin_counterexamples:
                print(f"warning: projected energy rose at steps {res.margin_counterexamples} although the "
                      "sufficient condition held", file=sys.stderr)
        elif args.command == "mms":
            if args.equation == "ch" and args.scheme == "cn":
                raise ConfigError("the Crank-Nicolson scheme is only available for ac", key="--scheme")
            if args.levels < 2:
                raise ConfigError("need at least two levels", key="--levels")
            table = run_mms(args.equation, args.scheme, args.method, args.mode, args.levels,
                            degree=args.degree, reference=args.reference)
            print(table.format())
        else:
            cfg = load_config(args.config)
            rows = run_bench(cfg, _methods(args.methods), repeats=max(1, args.repeats))
            print(format_bench(rows))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IdentityCheckError as exc:
        print(f"identity check failed: {exc}", file=sys.stderr)
        return EXIT_IDENTITY
    except (IeqFemError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
