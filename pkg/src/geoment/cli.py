"""Command-line entry point: ``geoment <command> [options]``.

Exit status is 0 on success, 2 for invalid arguments and 3 when one of the
checks embedded in a command fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiments as ex
from .mixed import AlgorithmConfig
from .tensor import InvalidArgument

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CHECK_FAILED = 3

# per-command algorithm defaults: (epsilon, restarts, ensemble_size)
DEFAULTS = {
    "validate-2q": (1e-15, 5, None),
    "table-iso": (1e-15, 5, None),
    "table-4q": (1e-15, 5, 16),
    "curve-iso3": (1e-7, 3, 64),
    "xx-temp": (1e-7, 3, 64),
    "xx-field": (1e-7, 3, 64),
    "additivity": (1e-7, 2, None),
}


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("algorithm")
    g.add_argument("--epsilon", type=_positive_float, help="stop when the fidelity gain is <= epsilon")
    g.add_argument("--restarts", type=_positive_int)
    g.add_argument("--ensemble-size", type=_positive_int, help="decomposition size (default d^2)")
    g.add_argument("--max-iters", type=_positive_int, default=50000)
    g.add_argument("--inner-sweeps", type=_positive_int, default=10,
                   help="sweep cap of the pure-state step for three or more parties")
    g.add_argument("--seed", type=int, default=0)
    o = common.add_argument_group("output")
    o.add_argument("--grid-step", type=_positive_float, default=0.05)
    o.add_argument("--full-grid", action="store_true", help="use a 0.01 grid")
    o.add_argument("--out", help="write records here (default stdout)")
    o.add_argument("--format", choices=["csv", "json"], default="csv")
    o.add_argument("--svg", help="write a figure of the sweep to this path")
    o.add_argument("--no-timing", action="store_true",
                   help="leave wall_ms empty so reruns are byte-identical")
    o.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
    o.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="geoment",
        description="Upper bounds on the geometric measure of entanglement.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-2q", parents=[common],
                       help="random two-qubit states against the closed form")
    p.add_argument("--count", type=_positive_int, default=100)

    p = sub.add_parser("table-iso", parents=[common], help="isotropic d x d states")
    p.add_argument("--dim", type=int, default=2)

    p = sub.add_parser("table-4q", parents=[common], help="four-qubit states with decaying coherences")
    p.add_argument("--family", choices=sorted(ex.FOUR_QUBIT_FAMILIES), default="CL4")
    p.add_argument("--no-zero", action="store_true", help="omit the t = 0 row")

    sub.add_parser("curve-iso3", parents=[common], help="three-qubit isotropic curve")

    for name, helptext in (("xx-temp", "XX ring, E~_G against temperature"),
                           ("xx-field", "XX ring, E~_G against field")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--J", type=float, default=0.5)
        p.add_argument("--fields", type=_float_list, default=[0.0, 0.5, 1.0, 1.5])
        p.add_argument("--temperatures", type=_float_list, default=[0.05, 0.2, 0.5])
        p.add_argument("--t-max", type=_positive_float, default=2.0)
        p.add_argument("--b-max", type=_positive_float, default=2.0)

    p = sub.add_parser("additivity", parents=[common], help="F_s of tensor products of two-qubit pairs")
    p.add_argument("--pairs", type=_positive_int, default=20)
    return parser


def config_from_args(args) -> AlgorithmConfig:
    eps, restarts, size = DEFAULTS[args.command]
    return AlgorithmConfig(
        epsilon=args.epsilon if args.epsilon is not None else eps,
        restarts=args.restarts if args.restarts is not None else restarts,
        ensemble_size=args.ensemble_size if args.ensemble_size is not None else size,
        max_iterations=args.max_iters,
        inner_max_sweeps=args.inner_sweeps,
        seed=args.seed,
    )


def run_command(args) -> ex.SweepResult:
    config = config_from_args(args)
    step = 0.01 if args.full_grid else args.grid_step
    common = {"jobs": args.jobs, "timing": not args.no_timing}
    cmd = args.command
    if cmd == "validate-2q":
        return ex.run_two_qubit_validation(args.count, config, **common)
    if cmd == "table-iso":
        return ex.run_isotropic_table(args.dim, config, grid_step=step, **common)
    if cmd == "table-4q":
        return ex.run_four_qubit_table(args.family, config, grid_step=step,
                                       include_zero=not args.no_zero, **common)
    if cmd == "curve-iso3":
        return ex.run_isotropic3_curve(config, grid_step=step, **common)
    if cmd in ("xx-temp", "xx-field"):
        return ex.run_xx_sweeps("temperature" if cmd == "xx-temp" else "field", config,
                                J=args.J, fields=args.fields, temperatures=args.temperatures,
                                grid_step=step, t_max=args.t_max, b_max=args.b_max, **common)
    if cmd == "additivity":
        return ex.run_additivity_study(args.pairs, config, **common)
    raise InvalidArgument(f"unknown command {cmd}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = run_command(args)
    except InvalidArgument as err:
        print(f"geoment: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    body = ex.to_csv(result) if args.format == "csv" else ex.to_json(result)
    summary = json.dumps(ex.summary_dict(result), indent=2, default=ex._json_default)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(body)
        print(summary)
    else:
        sys.stdout.write(body)
        print(summary, file=sys.stderr)
    if args.svg:
        from .plotting import save_sweep
        save_sweep(result, args.svg)
    for c in result.checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}", file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
