"""Command-line entry point: ``ocbas {pcs,smoke-table,dist}``."""

from __future__ import annotations

import argparse
import io
import logging
import sys

import numpy as np

from . import __version__
from .allocation import Policy, PolicyConfig
from .core import format_float
from .harness import ExperimentPlan, format_rows, run_pcs_experiment, write_csv
from .renewal import DiscretePmf, PosteriorSpec, count_distribution, posterior_cdf
from .testbeds import (
    DEFAULT_HORIZON,
    CorrelatedTwoPoint,
    SmokeTestbed,
    SyntheticTestbed,
    TruncatedGaussian,
    UniformSpread,
    estimate_design_means,
    symmetry_orbits,
    write_design_table,
)

TESTBEDS = ("synthetic-uniform", "synthetic-tgauss", "correlated", "smoke")


class UsageError(Exception):
    pass


def _budget_grid(text: str) -> list[int]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (int(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad budget grid {text!r}; use start:stop:step") from None


def _policies(text: str) -> list[Policy]:
    try:
        return [Policy(v.strip().lower()) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"policies must be among ea,ocba,ocbas; got {text!r}") from None


def _time_pmf(text: str) -> DiscretePmf:
    """Parse ``const:V``, ``uniform:LO,HI``, ``tgauss:I,J`` or ``twopoint``."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "const":
            return DiscretePmf.point_mass(int(arg))
        if kind == "uniform":
            lo, hi = (int(v) for v in arg.split(","))
            return DiscretePmf.uniform(lo, hi)
        if kind == "tgauss":
            i, j = (int(v) for v in arg.split(","))
            return TruncatedGaussian(j).pmf(i)
        if kind == "twopoint":
            return CorrelatedTwoPoint(0.5).pmf(1)
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"bad time model {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ocbas", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    pcs = sub.add_parser(
        "pcs",
        help="estimate PCS curves for EA/OCBA/OCBAS",
        description=(
            "Estimate the probability of correct selection on a testbed. Defaults: "
            "OCBA n0=5, delta_n=10 and OCBAS/EA T0=50, delta_T=100 on the synthetic "
            "testbeds; OCBA n0=20, delta_n=10 and T0=200, delta_T=100 on smoke."
        ),
    )
    pcs.add_argument("--testbed", choices=TESTBEDS, required=True)
    pcs.add_argument("--spread", type=int, default=10, help="spread index j for synthetic testbeds (1..10)")
    pcs.add_argument("--p", type=float, default=0.5, help="time/noise correlation for 'correlated'")
    pcs.add_argument("--budgets", type=_budget_grid, default=_budget_grid("1000:10000:1000"),
                     help="start:stop:step, inclusive (default 1000:10000:1000)")
    pcs.add_argument("--policies", type=_policies, default=list(Policy), help="default ea,ocba,ocbas")
    pcs.add_argument("--macro-reps", type=int, default=1000)
    pcs.add_argument("--seed", type=int, default=0)
    pcs.add_argument("--workers", type=int, default=1)
    pcs.add_argument("--horizon", type=int, default=DEFAULT_HORIZON, help="smoke censoring bound")
    pcs.add_argument("--n0", type=int, help="OCBA warm-up replications (5; smoke 20)")
    pcs.add_argument("--delta-n", type=int, help="OCBA replications per iteration (10)")
    pcs.add_argument("--t0", type=int, help="EA/OCBAS warm-up time per design (50; smoke 200)")
    pcs.add_argument("--delta-t", type=int, help="EA/OCBAS time per iteration (100)")
    pcs.add_argument("--out", help="CSV path (default: standard output)")
    pcs.set_defaults(func=cmd_pcs)

    smoke = sub.add_parser("smoke-table", help="mean detection time of the 16 sensor placements",
                           description="Estimate mean response times of the 16 symmetry-distinct placements.")
    smoke.add_argument("--reps", type=int, default=100000)
    smoke.add_argument("--seed", type=int, default=0)
    smoke.add_argument("--workers", type=int, default=1)
    smoke.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    smoke.add_argument("--all-sources", action="store_true",
                       help="draw fires on all 121 lattice points instead of the 81 interior ones")
    smoke.add_argument("--list-orbits", action="store_true", help="print orbit representatives and sizes, then exit")
    smoke.add_argument("--out", help="CSV path (default: standard output)")
    smoke.set_defaults(func=cmd_smoke_table)

    dist = sub.add_parser("dist", help="exact distribution of completed replications",
                          description="Print Pr{n=c} for a duration model and budget, optionally the posterior CDF.")
    dist.add_argument("--time", type=_time_pmf, required=True,
                      help="const:V | uniform:LO,HI | tgauss:I,J | twopoint")
    dist.add_argument("--budget", type=int, required=True)
    dist.add_argument("--posterior", action="store_true")
    dist.add_argument("--mean", type=float, default=0.0)
    dist.add_argument("--sigma", type=float, default=1.0)
    dist.add_argument("--grid", type=int, default=41, help="number of CDF grid points")
    dist.set_defaults(func=cmd_dist)
    return parser


def _testbed(args) -> SyntheticTestbed | SmokeTestbed:
    if args.testbed == "synthetic-uniform":
        return SyntheticTestbed(UniformSpread(args.spread))
    if args.testbed == "synthetic-tgauss":
        return SyntheticTestbed(TruncatedGaussian(args.spread))
    if args.testbed == "correlated":
        return SyntheticTestbed(CorrelatedTwoPoint(args.p))
    return SmokeTestbed(horizon=args.horizon)


def _open_out(path):
    return open(path, "w", newline="") if path else None


def cmd_pcs(args) -> int:
    if args.macro_reps < 1 or args.workers < 1:
        raise UsageError("--macro-reps and --workers must be >= 1")
    try:
        testbed = _testbed(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    smoke = args.testbed == "smoke"
    policies = {}
    try:
        for pol in args.policies:
            cfg = PolicyConfig.defaults(pol, max(args.budgets), smoke=smoke)
            if pol is Policy.OCBA:
                warmup = cfg.warmup if args.n0 is None else args.n0
                inc = cfg.increment if args.delta_n is None else args.delta_n
            else:
                warmup = cfg.warmup if args.t0 is None else args.t0
                inc = cfg.increment if args.delta_t is None else args.delta_t
                if min(args.budgets) < testbed.k * warmup:
                    raise ValueError(f"budget {min(args.budgets)} is below the warm-up total {testbed.k * warmup}")
            policies[pol] = PolicyConfig(pol, warmup, inc, cfg.total_budget)
        plan = ExperimentPlan(testbed, policies, args.budgets, args.macro_reps, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = run_pcs_experiment(plan, workers=args.workers)
    if args.out:
        write_csv(result, args.out)
        for row in format_rows(result):
            print("\t".join(row))
    else:
        write_csv(result, sys.stdout)
    if result.errors:
        for (pol, budget), msg in result.errors.items():
            print(f"error: {pol.value} T={budget}: {msg}", file=sys.stderr)
        return 1
    return 0


def cmd_smoke_table(args) -> int:
    if args.list_orbits:
        orbits = symmetry_orbits()
        for rep, orbit in orbits.items():
            print(f"{','.join(map(str, rep))}\t{len(orbit)}")
        print(f"total\t{sum(len(o) for o in orbits.values())}")
        return 0
    if args.reps < 1 or args.workers < 1:
        raise UsageError("--reps and --workers must be >= 1")
    testbed = SmokeTestbed(horizon=args.horizon, interior_fire=not args.all_sources)
    rows = estimate_design_means(args.reps, args.seed, testbed, workers=args.workers)
    fh = _open_out(args.out)
    try:
        write_design_table(rows, fh or sys.stdout)
    finally:
        if fh:
            fh.close()
    return 0


def cmd_dist(args) -> int:
    if args.budget < 0:
        raise UsageError("--budget must be >= 0")
    f = args.time
    p = count_distribution(f, args.budget)
    out = io.StringIO()
    out.write("c,prob\n")
    for c, pc in enumerate(p):
        out.write(f"{c},{format_float(pc)}\n")
    if args.posterior:
        if args.sigma <= 0 or args.grid < 2:
            raise UsageError("--sigma must be > 0 and --grid >= 2")
        spec = PosteriorSpec(args.mean, args.sigma, f, args.budget)
        half = 4.0 * args.sigma * np.sqrt(f.mean / max(args.budget, 1))
        xs = np.linspace(args.mean - half, args.mean + half, args.grid)
        out.write("x,cdf\n")
        for x, g in zip(xs, posterior_cdf(spec, xs)):
            out.write(f"{format_float(x)},{format_float(g)}\n")
    sys.stdout.write(out.getvalue())
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except Exception as exc:
        print(f"ocbas: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
