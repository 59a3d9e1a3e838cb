"""Command-line entry point: ``gausshardy <subcommand> [action] [options]``.

Exit codes: 0 success, 1 I/O error, 2 invalid parameters, 3 convergence
failure (partial results, if any, are still written and flagged in ``meta``).
"""

from __future__ import annotations

import argparse
import sys

from . import config
from .errors import InvalidInputError, PreconditionError
from .experiments import SUBCOMMANDS, ExperimentConfig, emit_report, run_experiment
from .quadrature import ConvergenceError

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_CONVERGENCE = 0, 1, 2, 3

_HELP = {
    "mehler": "Mehler kernel: closed form vs series, semigroup law, stochasticity",
    "impow": "imaginary-power kernel: cross-validation, normalization, lemma grid, isometry",
    "hormander": "Hormander constants, atom images, implication checks, mean-value identity",
    "iinf": "kernel mass outside 2B_y along y",
    "diverge": "logarithmic divergence of the imaginary-power kernel mass",
    "hardy": "H1 vs h1 atomic bounds, BMO oscillation of x^2, greedy decompositions",
    "tree": "radial kernels on homogeneous trees",
    "isoperimetric": "boundary-shell ratios and doubling constants of the Gauss measure",
}


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gausshardy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, actions in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("action", nargs="?", choices=actions, default=actions[0],
                       help=f"default: {actions[0]}")
        p.add_argument("--u", type=float, default=1.0, help="imaginary exponent (default 1)")
        p.add_argument("--r", type=float, default=1.0, help="shift r > 0 (default 1)")
        p.add_argument("--tol", type=float, default=None, help="quadrature tolerance")
        p.add_argument("--grid", type=float, default=None, help="experiment size parameter")
        p.add_argument("--ys", type=_floats, default=None, help="comma-separated y values")
        p.add_argument("--t", type=_floats, default=None, help="comma-separated times")
        p.add_argument("--q", type=int, default=2, help="tree branching number (default 2)")
        p.add_argument("--kernel", default=None, help="kernel name or tree kernel spec")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default: ${config.THREADS_ENV} or 1)")
        p.add_argument("--timing", action="store_true", help="add runtime_ms to meta")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = args.threads if args.threads is not None else config.thread_count(1)
        cfg = ExperimentConfig(args.subcommand, args.action, u=args.u, r=args.r, tol=args.tol,
                               grid=args.grid, ys=args.ys, t=args.t, q=args.q,
                               kernel=args.kernel, out=args.out, format=args.format,
                               threads=threads, timing=args.timing)
        result = run_experiment(cfg)
    except ConvergenceError as exc:
        print(f"gausshardy: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (InvalidInputError, PreconditionError, ValueError) as exc:
        print(f"gausshardy: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        text = emit_report(result, cfg.format, cfg.out, timing=cfg.timing)
    except OSError as exc:
        print(f"gausshardy: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    if cfg.out is None:
        sys.stdout.write(text)
    print(f"gausshardy: {result.experiment} done in {result.runtime_ms:.0f} ms", file=sys.stderr)
    if result.partial:
        print(f"gausshardy: {len(result.failures)} item(s) did not converge", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
