"""Command-line front end.

    rotorlab evolve <config>             time evolution, observables and Wigner snapshots
    rotorlab steady <config>             steady state and its distance from the Gibbs state
    rotorlab sweep-temperature <config>  steady-state vs Gibbs distance over a temperature grid
    rotorlab oracle-checks               acceptance suite with pass/fail report
    rotorlab emit-plots <dir>            matplotlib scripts for a run directory
    rotorlab preset <name>               print a pinned scenario config

Exit codes: 0 success, 1 failed checks, 2 config error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .classical import CFLError
from .config import PRESETS, ConfigError, load, preset_text
from .liouvillian import LeakageError
from .plots import MissingArtifact, emit_plots
from .propagator import ConvergenceError, NumericalAbort
from .state import TruncationError

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

NUMERICAL_ERRORS = (NumericalAbort, ConvergenceError, TruncationError, LeakageError, CFLError)

log = logging.getLogger("rotorlab")


def _load_task(path, expected: str):
    cfg = load(path)
    if cfg.task != expected:
        raise ConfigError(f"config task is {cfg.task!r}; this subcommand runs {expected!r} configs")
    return cfg


def cmd_evolve(args) -> int:
    from .scenario import run_evolve
    cfg = _load_task(args.config, "evolve")
    res = run_evolve(cfg, args.out)
    d = res.manifest["diagnostics"]
    print(f"wrote {len(res.files)} CSV files to {res.directory} "
          f"(M={res.manifest['resolved']['M']}, leakage max {d['leakage_max']:.2e}, "
          f"positivity min {d['positivity_min']:.2e})")
    return EXIT_OK


def cmd_steady(args) -> int:
    from .scenario import run_steady
    cfg = _load_task(args.config, "steady")
    res = run_steady(cfg, args.out)
    d = res.manifest["diagnostics"]
    print(f"steady state at M={res.manifest['resolved']['M']}: d1 to Gibbs {d['d1_gibbs']:.6g}, "
          f"residual {d['residual']:.2e}; wrote {res.directory}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .scenario import run_sweep
    cfg = _load_task(args.config, "sweep")
    res = run_sweep(cfg, args.out, args.workers)
    failed = res.manifest["diagnostics"]["failed_points"]
    for name, fit in res.manifest["fits"].items():
        slope = "n/a" if fit["slope"] is None else f"{fit['slope']:.3f}"
        print(f"{name} {fit['window']}: slope {slope}")
    if failed:
        print(f"{len(failed)} point(s) failed: {failed}", file=sys.stderr)
    print(f"wrote {res.directory / 'sweep.csv'}")
    n_points = len(res.manifest["resolved"]["temperatures"])
    return EXIT_NUMERICAL if len(failed) == n_points else EXIT_OK


def cmd_oracle_checks(args) -> int:
    from .acceptance import report_json, run_suite
    echo = (lambda s: print(s, file=sys.stderr, flush=True)) if args.json else (lambda s: print(s, flush=True))
    results = run_suite(args.only, echo=echo)
    if args.json:
        print(report_json(results))
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report_json(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def cmd_emit_plots(args) -> int:
    scripts = emit_plots(args.directory)
    for name, inputs in scripts.items():
        print(f"{name}: {', '.join(inputs)}")
    return EXIT_OK


def cmd_preset(args) -> int:
    sys.stdout.write(preset_text(args.name))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rotorlab", description="Open planar-rotor dynamics in phase space.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("evolve", help="run a time evolution config")
    s.add_argument("config")
    s.add_argument("-o", "--out", help="output directory (default: outputs.directory or runs/<name>)")
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("steady", help="find the steady state of a config")
    s.add_argument("config")
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_steady)

    s = sub.add_parser("sweep-temperature", help="steady-state vs Gibbs distance over temperature")
    s.add_argument("config")
    s.add_argument("-o", "--out")
    s.add_argument("-j", "--workers", type=int, help="worker processes (default: $ROTORLAB_WORKERS or all cores)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("oracle-checks", help="run the acceptance suite")
    s.add_argument("--only", type=int, nargs="+", metavar="N", help="run only these check numbers")
    s.add_argument("--json", action="store_true", help="print the JSON report on stdout")
    s.add_argument("--report", help="also write the JSON report to this file")
    s.set_defaults(func=cmd_oracle_checks)

    s = sub.add_parser("emit-plots", help="write plot scripts for a run directory")
    s.add_argument("directory")
    s.set_defaults(func=cmd_emit_plots)

    s = sub.add_parser("preset", help="print a pinned preset config")
    s.add_argument("name", choices=PRESETS)
    s.set_defaults(func=cmd_preset)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, MissingArtifact) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # parameter combinations the schema cannot see, e.g. dt above the stability limit
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
