"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 solver failure or
infeasible problem, 3 data or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .classify import LfdClassifier, evaluate
from .core import BadCovariance, Infeasible, InvalidRadius, LfdSolution, SolverFailure, WdlfdError
from .harness.config import ConfigError, load_config
from .harness.data import DataIOError, ParseError, load_csv, load_distribution, save_distribution, trial_seed
from .harness.pipeline import emit_results, learn, make_data, run_sweep
from .lfd import solve_lfd, solve_lfd_penalized, solve_lfd_separated
from .transport import barycenter, wasserstein

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_DATA = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_json(data, path):
    try:
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from exc


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from exc


def cmd_ot(args):
    value = wasserstein(load_distribution(args.a), load_distribution(args.b), args.exponent)
    print(repr(value))


def cmd_barycenter(args):
    sources = [load_distribution(p) for p in args.sources.split(",") if p]
    if not sources:
        raise ConfigError("--sources needs at least one file")
    save_distribution(barycenter(sources).trimmed(), args.out)


def cmd_lfd(args):
    q1, q2 = load_distribution(args.q1), load_distribution(args.q2)
    if args.gamma_sep is not None and args.lambda_pen is not None:
        raise ConfigError("use at most one of --gamma-sep and --lambda")
    if args.gamma_sep is not None:
        sol = solve_lfd_separated(q1, q2, args.theta1, args.theta2, args.gamma_sep, args.exponent)
    elif args.lambda_pen is not None:
        sol = solve_lfd_penalized(q1, q2, args.theta1, args.theta2, args.lambda_pen, args.exponent)
    else:
        sol = solve_lfd(q1, q2, args.theta1, args.theta2, args.exponent)
    _write_json(sol.to_dict(), args.out)
    print(f"objective {sol.objective!r}")


def cmd_learn_radii(args):
    config = load_config(args.config)
    size = int(config.source_sizes[0]) if args.source_size is None else args.source_size
    data = make_data(config, trial_seed(config.seed, size, args.trial), size)
    trace, _, _ = learn(config, data.sources)
    _write_json(trace.to_dict(), args.out)
    last = trace.iterations[-1]
    print(f"iterations {len(trace.iterations)} accepted {trace.accepted} "
          f"theta1 {last.theta1!r} theta2 {last.theta2!r} p_value {last.p_value!r}")


def cmd_classify(args):
    data = _read_json(args.solution)
    if isinstance(data, dict) and "final" in data:
        data = data["final"]
    try:
        sol = LfdSolution.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"not a solution document: {exc}", 1) from exc
    ev = evaluate(LfdClassifier(sol, args.k), load_csv(args.test))
    print(f"accuracy {ev.accuracy!r}")
    print("confusion (rows: true 1, 2; columns: predicted 1, 2)")
    for row in ev.confusion:
        print(" ".join(str(int(c)) for c in row))


def cmd_synth(args):
    config = load_config(args.config)
    if args.workers is not None:
        config = replace(config, workers=args.workers)
    results = run_sweep(config)
    summary = emit_results(results, args.out, args.summary)
    for size, entry in summary.items():
        parts = " ".join(f"{m} {v['mean']:.4f}" for m, v in entry.items())
        print(f"size {size}: {parts}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wdlfd", description="Robust two-class testing with least-favorable distributions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ot", help="Wasserstein distance between two distributions")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--exponent", type=int, choices=(1, 2), default=1)
    p.set_defaults(func=cmd_ot)

    p = sub.add_parser("barycenter", help="fixed-support W2 barycenter")
    p.add_argument("--sources", required=True, help="comma-separated CSV files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_barycenter)

    p = sub.add_parser("lfd", help="least-favorable pair for two reference distributions")
    p.add_argument("--q1", required=True)
    p.add_argument("--q2", required=True)
    p.add_argument("--theta1", type=float, required=True)
    p.add_argument("--theta2", type=float, required=True)
    p.add_argument("--gamma-sep", type=float, dest="gamma_sep")
    p.add_argument("--lambda", type=float, dest="lambda_pen")
    p.add_argument("--exponent", type=int, choices=(1, 2), default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lfd)

    p = sub.add_parser("learn-radii", help="radius learning on one trial of a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--source-size", type=int, dest="source_size")
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=cmd_learn_radii)

    p = sub.add_parser("classify", help="score a labeled CSV with a saved solution")
    p.add_argument("--solution", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--k", type=int, default=3)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("synth", help="run the experiment sweep of a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--summary")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigError, InvalidRadius, BadCovariance) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverFailure, Infeasible) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataIOError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except WdlfdError as exc:
        # invalid inputs read from data files (bad weights, sizes, ...)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
