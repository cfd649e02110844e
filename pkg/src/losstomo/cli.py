"""Command-line front end: simulate, estimate, bench."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bench import GridError, parse_grid, run_grid
from .estimators import le_xi, mvwa, nem, pcem
from .params import parse_rates, serialize_rates
from .simulator import SimConfig, sample_theta, simulate
from .statistics import DataError, internal_views, parse_data, serialize_data
from .topology import TopologyError, parse_topology

ESTIMATE_HEADER = "link_id,theta_hat,xi_hat,flag,estimable"


class CliError(Exception):
    """User-facing failure: bad input file, bad flag combination."""


def _load_topology(path: str):
    return parse_topology(Path(path).read_text(encoding="utf-8"))


def _fmt(value) -> str:
    return "" if value is None else repr(value)


def estimate_csv(result) -> str:
    lines = [ESTIMATE_HEADER]
    for i in sorted(result.theta_hat):
        est = result.theta_hat[i] is not None
        lines.append(f"{i},{_fmt(result.theta_hat[i])},{_fmt(result.xi_hat[i])},"
                     f"{result.flags[i]},{'yes' if est else 'no'}")
    return "\n".join(lines) + "\n"


def _cmd_simulate(args) -> int:
    net = _load_topology(args.topology)
    if (args.beta is None) == (args.theta is None):
        raise CliError("exactly one of --beta or --theta is required")
    cfg = SimConfig(net, args.probes, args.seed, replicate=args.replicate)
    if args.beta is not None:
        try:
            a, b = (float(x) for x in args.beta.split(","))
        except ValueError:
            raise CliError(f"--beta expects 'a,b', got {args.beta!r}") from None
        rng = np.random.Generator(np.random.Philox(
            seed=np.random.SeedSequence((args.seed, args.replicate, 0xA11CE))))
        theta = sample_theta(a, b, net, rng)
        cfg.beta = (a, b)
    else:
        kind, values = parse_rates(Path(args.theta).read_text(encoding="utf-8"))
        if kind != "theta":
            raise CliError(f"--theta file carries {kind!r} rates, expected theta")
        missing = sorted(set(net.links) - set(values))
        if missing:
            raise CliError(f"--theta file lacks links {missing}")
        from .params import LossRates
        theta = LossRates(values)
    patterns = simulate(cfg, theta)
    Path(args.out).write_text(serialize_data(patterns), encoding="utf-8")
    if args.theta_out:
        Path(args.theta_out).write_text(serialize_rates("theta", theta.theta),
                                        encoding="utf-8")
    return 0


def _cmd_estimate(args) -> int:
    net = _load_topology(args.topology)
    patterns = parse_data(Path(args.data).read_text(encoding="utf-8"), net)
    if args.method in ("le-xi", "pcem"):
        views, report = internal_views(patterns, net)
        if args.method == "le-xi":
            result = le_xi(views, net, workers=args.threads, report=report)
        else:
            result = pcem(views, net, theta0=args.init, tol=args.tol,
                          max_iter=args.max_iter, report=report)
    elif args.method == "nem":
        result = nem(patterns, net, theta0=args.init, tol=args.tol,
                     max_iter=args.max_iter)
    elif args.method == "mvwa":
        result = mvwa(patterns, net)
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown method {args.method!r}")
    Path(args.out).write_text(estimate_csv(result), encoding="utf-8")
    return 0


def _cmd_bench(args) -> int:
    net = _load_topology(args.topology)
    grid = parse_grid(Path(args.grid).read_text(encoding="utf-8"),
                      master_seed=args.seed)
    report = run_grid(grid, net, workers=args.workers)
    Path(args.out).write_text(report.to_csv(), encoding="utf-8")
    print(report.summary())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="losstomo",
        description="Link-level loss estimation from end-to-end multicast probes.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate probe data under known rates")
    sim.add_argument("--topology", required=True)
    sim.add_argument("--beta", help="a,b: draw per-link rates from Beta(a,b)")
    sim.add_argument("--theta", help="loss-rate file with explicit per-link rates")
    sim.add_argument("--probes", type=int, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--replicate", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.add_argument("--theta-out", help="also write the rates that were used")
    sim.set_defaults(fn=_cmd_simulate)

    est = sub.add_parser("estimate", help="estimate loss rates from probe data")
    est.add_argument("--topology", required=True)
    est.add_argument("--data", required=True)
    est.add_argument("--method", required=True, choices=("le-xi", "pcem", "nem", "mvwa"))
    est.add_argument("--tol", type=float, default=1e-6)
    est.add_argument("--max-iter", type=int, default=10000)
    est.add_argument("--init", type=float, default=0.03)
    est.add_argument("--threads", type=int, default=1)
    est.add_argument("--out", required=True)
    est.set_defaults(fn=_cmd_estimate)

    ben = sub.add_parser("bench", help="run a replicated method-comparison grid")
    ben.add_argument("--topology", required=True)
    ben.add_argument("--grid", required=True)
    ben.add_argument("--out", required=True)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--workers", type=int, default=1)
    ben.set_defaults(fn=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.fn(args)
    except (CliError, TopologyError, DataError, GridError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"run 'losstomo {args.command} --help' for usage", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
