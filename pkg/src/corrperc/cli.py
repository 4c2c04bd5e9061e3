"""Command-line front end; every command writes versioned CSV.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 validation failure.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager
from typing import IO

import numpy as np

from . import analytics as an
from . import coloured_oracle as co
from .joint_dist import (
    CSV_VERSION_LINE,
    DistributionError,
    JointDegreeDistribution,
    build_family,
    dump_triplets,
    load_custom,
    percolate_joint,
)
from .mc_sim import SamplingError, run_ensemble, sample_graph, write_edge_list, write_ensemble_csv
from .pool import ordered_map
from .validation import run_suite

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3

CURVE_COLUMNS = ("pi", "s", "w", "r", "p0", "supercritical")
THRESHOLD_COLUMNS = ("N", "t", "pi_c")


class InputError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None


@contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _family_params(args) -> dict:
    params = {}
    for name in ("eps", "tau", "rate"):
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    return params


def _distribution(args, N: int | None = None, t: float | None = None) -> JointDegreeDistribution:
    N = args.N if N is None else N
    t = args.t if t is None else t
    if args.input is not None:
        if N is None:
            raise InputError("--N is required with --in")
        return load_custom(args.input, N)
    if args.family is None:
        raise InputError("give --family or --in")
    if N is None:
        raise InputError("--N is required")
    return build_family(args.family, t, N, **_family_params(args))


def _add_distribution_args(p: argparse.ArgumentParser, with_t: bool = True) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--family", choices=("bimodal", "exponential", "powerlaw"))
    src.add_argument("--in", dest="input", metavar="CSV", help="j,k,weight triplet file")
    p.add_argument("--N", type=int, help="maximum degree")
    if with_t:
        p.add_argument("--t", type=float, default=0.0, help="assortative coupling in [0, 1]")
    p.add_argument("--eps", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--out", help="output path (default stdout)")


def cmd_dist(args) -> int:
    e = _distribution(args)
    if args.percolate is not None:
        e = percolate_joint(e, args.percolate)
    with _output(args.out) as fh:
        dump_triplets(e, fh)
    return EXIT_OK


def write_curve_csv(points, fh: IO[str]) -> None:
    fh.write(CSV_VERSION_LINE + "\n")
    fh.write(",".join(CURVE_COLUMNS) + "\n")
    for pt in points:
        fh.write(",".join(_fmt(getattr(pt, c)) for c in CURVE_COLUMNS) + "\n")


def cmd_analyze(args) -> int:
    e = _distribution(args)
    grid = an.pi_grid(args.pi_start, args.pi_stop, args.pi_step)
    points = ordered_map(lambda pi: an.analyze_point(e, float(pi)), grid)
    with _output(args.out) as fh:
        write_curve_csv(points, fh)
    failed = [pt for pt in points if pt.error and pt.error != "no finite components"]
    for pt in failed:
        print(f"pi={pt.pi}: {pt.error}", file=sys.stderr)
    return EXIT_OK


def cmd_threshold(args) -> int:
    Ns = _int_list(args.N_list)
    ts = _float_list(args.t_list)
    if Ns != sorted(Ns):
        raise InputError("--N-list must be ascending")
    jobs = [(N, t) for t in ts for N in Ns]

    def one(job):
        N, t = job
        res = an.find_threshold(_distribution(args, N=N, t=t), step=args.scan_step,
                                width=args.bisect_width)
        return N, t, res.pi_c

    rows = ordered_map(one, jobs)
    with _output(args.out) as fh:
        fh.write(CSV_VERSION_LINE + "\n")
        fh.write(",".join(THRESHOLD_COLUMNS) + "\n")
        for N, t, pi_c in rows:
            fh.write(f"{N},{_fmt(t)},{'' if pi_c is None else _fmt(pi_c)}\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    e = _distribution(args)
    if (args.pi is None) == (args.pi_grid is None):
        raise InputError("give exactly one of --pi or --pi-grid")
    pis = [args.pi] if args.pi is not None else _float_list(args.pi_grid)
    rows = run_ensemble(e, args.nodes, pis, args.replicas, seed=args.seed)
    with _output(args.out) as fh:
        write_ensemble_csv(rows, fh)
    if args.edges:
        g = sample_graph(e, args.nodes, seed=(args.seed, 0))
        with open(args.edges, "w") as fh:
            write_edge_list(g, fh)
    return EXIT_OK


def cmd_validate(args) -> int:
    checks = run_suite(args.suite)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name}" + (f" ({c.detail})" if c.detail else ""))
    n_fail = sum(not c.passed for c in checks)
    print(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return EXIT_OK if n_fail == 0 else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrperc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="write a joint degree-degree table")
    _add_distribution_args(p)
    p.add_argument("--percolate", type=float, metavar="PI", help="apply bond percolation first")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("analyze", help="giant and finite component curves over a retention grid")
    _add_distribution_args(p)
    p.add_argument("--pi-start", type=float, default=0.001)
    p.add_argument("--pi-stop", type=float, default=1.0)
    p.add_argument("--pi-step", type=float, default=an.DEFAULT_SCAN_STEP)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("threshold", help="critical retention probability across N and t")
    _add_distribution_args(p, with_t=False)
    p.add_argument("--N-list", required=True, help="ascending comma-separated maximum degrees")
    p.add_argument("--t-list", default="0", help="comma-separated couplings")
    p.add_argument("--scan-step", type=float, default=an.DEFAULT_SCAN_STEP)
    p.add_argument("--bisect-width", type=float, default=an.DEFAULT_BISECT_WIDTH)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("simulate", help="Monte Carlo ensemble of percolated graphs")
    _add_distribution_args(p)
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--pi", type=float)
    p.add_argument("--pi-grid", help="comma-separated retention probabilities")
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--edges", metavar="PATH", help="also dump replica 0's unpercolated edge list")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="run the built-in consistency checks")
    p.add_argument("--suite", choices=("moments", "oracle", "mc", "all"), default="all")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, DistributionError, SamplingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (an.ConvergenceError, an.CriticalityError, co.ConvergenceError, co.CriticalityError,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
