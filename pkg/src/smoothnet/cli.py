"""``smoothnet`` command line: build, run, sweep, bounds, verify.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bounds, engine, experiment, verification
from .network import (
    ScheduleError, build_ccc, build_periodic, load_schedule, random_orientation,
    random_perfect_round, save_schedule,
)
from .perturbation import sample_plan

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _add_network(p: argparse.ArgumentParser, orientation: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--ccc", type=int, metavar="LOG_N", help="cube-connected cycles on 2**LOG_N wires")
    g.add_argument("--periodic", metavar="FILE", help="schedule file holding one round, repeated --periods times")
    g.add_argument("--schedule", metavar="FILE", help="schedule file used as is")
    p.add_argument("--periods", type=int, default=1)
    if orientation:
        p.add_argument("--orientation", choices=("up", "down", "random"), default="up")
        p.add_argument("--orientation-seed", type=int, default=0)


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", choices=experiment.INPUT_KINDS, default="uniform")
    p.add_argument("--m", type=int, default=None, help="uniform range {0..m-1}; default n")
    p.add_argument("--c", type=int, default=0, help="constant load per wire")
    p.add_argument("--K", type=int, default=1, help="tokens on wire 0 for single-hot input")
    p.add_argument("--input-file", default=None, help="one integer load per line")


def _config(args, alphas) -> experiment.ExperimentConfig:
    return experiment.ExperimentConfig(
        ccc_log_n=args.ccc, periodic_path=args.periodic, periods=args.periods,
        schedule_path=args.schedule, orientation=getattr(args, "orientation", "up"),
        orientation_seed=getattr(args, "orientation_seed", 0), alphas=alphas,
        trials=getattr(args, "trials", 1), input_kind=args.input, input_m=args.m, input_c=args.c,
        input_K=args.K, input_file=args.input_file, base_seed=args.seed,
        out_csv=getattr(args, "out", None), out_svg=getattr(args, "svg", None),
        mode=getattr(args, "mode", None),
    )


def _schedule_from(args):
    if args.ccc is not None:
        s = build_ccc(args.ccc, "up" if args.orientation == "random" else args.orientation)
        return random_orientation(s, args.orientation_seed) if args.orientation == "random" else s
    if args.periodic is not None:
        return build_periodic(load_schedule(args.periodic), args.periods)
    return load_schedule(args.schedule)


# --- subcommands ----------------------------------------------------------------------


def cmd_build(args) -> int:
    if args.random_round:
        n, d = args.random_round
        rng = np.random.default_rng(args.seed)
        sched = build_periodic(random_perfect_round(n, d, rng), args.periods, n)
    elif args.ccc is not None or args.periodic or args.schedule:
        sched = _schedule_from(args)
    else:
        raise UsageError("build needs --ccc, --periodic, --schedule or --random-round")
    save_schedule(sched, args.out)
    print(f"wrote {args.out}: n={sched.n} T={sched.T} balancers={sched.num_balancers}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _config(args, [args.alpha])
    schedule = config.build_schedule()
    loads = experiment.make_input(config, schedule.n, args.seed)
    plan = sample_plan(schedule, args.alpha, args.seed)
    y, trace = engine.run_discrete(schedule, plan, loads, capture_trace=True)
    xi = engine.run_ideal(schedule, loads, args.mode)
    mu = loads.sum() / schedule.n
    odd = sum(int(o.sum()) for o in trace.odd)
    print(f"n={schedule.n} T={schedule.T} balancers={schedule.num_balancers} alpha={args.alpha} seed={args.seed}")
    print(f"input: sum={int(loads.sum())} mean={mu:.6g} discrepancy={int(engine.discrepancy(loads))}")
    print(f"flipped={plan.flip_fraction():.4f} odd_balancers={odd}")
    print(f"output: sum={int(y.sum())} max={int(y.max())} min={int(y.min())} "
          f"discrepancy={int(engine.discrepancy(y))}")
    print(f"ideal discrepancy={float(engine.discrepancy(xi)):.6g}")
    if args.trace:
        trace.write_csv(args.trace)
        print(f"trace written to {args.trace}")
    if args.output:
        engine.write_loads(args.output, y)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _config(args, experiment.parse_alpha_range(args.alpha))
    result = experiment.run_sweep(config, threads=args.threads)
    experiment.emit_csv(result.rows, args.out)
    if args.svg:
        experiment.emit_summary_svg(result.summary, args.svg)
    print("alpha,trials,mean,stddev,lower,upper")
    for s in result.summary:
        lo = "" if s.lower is None else f"{s.lower:.4f}"
        hi = "" if s.upper is None else f"{s.upper:.4f}"
        print(f"{s.alpha:g},{s.trials},{s.mean:.4f},{s.stddev:.4f},{lo},{hi}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    kind = args.kind
    if kind == "theorem1":
        schedule = _schedule_from(args)
        t2 = schedule.T if args.t2 is None else args.t2
        report = bounds.theorem1_bound(schedule, args.alpha, args.t1, t2, args.K)
        print(report.to_kv())
        print(report.csv_header())
        print(report.to_csv_row())
    elif kind == "periodic":
        pb = bounds.periodic_bound(load_schedule(args.round), args.alpha, args.K, args.n)
        print(pb.to_kv())
        print(pb.report.csv_header())
        print(pb.report.to_csv_row())
    elif kind == "ccc-lower":
        print(f"log_n={args.log_n} alpha={args.alpha} lower={bounds.ccc_lower_bound(args.log_n, args.alpha)!r}")
    else:
        lo, hi = bounds.empirical_bounds(args.log_n, args.alpha)
        print(f"log_n={args.log_n} alpha={args.alpha} lower={lo!r} upper={hi!r}")
    return EXIT_OK


def cmd_verify(args) -> int:
    check = args.check
    reports, stats = [], None
    if check == "lemma3":
        orients = ("up", "down", "random") if args.orientation == "all" else (args.orientation,)
        for o in orients:
            rep, st = verification.verify_odd_half(args.ccc, o, args.trials, args.seed, args.tolerance,
                                                   args.inputs, args.orientation_seed)
            reports.append(rep)
            stats = st if stats is None else stats
    elif check == "independence":
        rep, stats = verification.verify_odd_independence(
            args.ccc, args.orientation, args.wire, args.trials, args.seed, args.threshold,
            args.max_pairs, args.orientation_seed)
        reports.append(rep)
    elif check == "eq3":
        reports.append(verification.verify_eq3_identity(args.n, args.T, args.cases, args.seed))
    elif check == "ccc-structure":
        logs = range(1, args.ccc + 1) if args.all else (args.ccc,)
        reports.extend(verification.verify_ccc_structure(k) for k in logs)
    else:
        schedule = _schedule_from(args)
        reports.append(verification.verify_remark2_symmetry(schedule, args.alpha, args.trials, args.seed))
    for r in reports:
        print(r.line())
    if getattr(args, "detail", None) and stats is not None:
        stats.write_csv(args.detail)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


# --- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoothnet", description="Smoothed analysis of balancing networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="write a schedule file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--ccc", type=int, metavar="LOG_N")
    g.add_argument("--periodic", metavar="FILE")
    g.add_argument("--schedule", metavar="FILE")
    g.add_argument("--random-round", type=int, nargs=2, metavar=("N", "D"),
                   help="D random perfect matchings on N wires")
    p.add_argument("--periods", type=int, default=1)
    p.add_argument("--orientation", choices=("up", "down", "random"), default="up")
    p.add_argument("--orientation-seed", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("run", help="one perturbed run, reported verbosely")
    _add_network(p)
    _add_input(p)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("exact", "float"), default=None)
    p.add_argument("--trace", help="per-balancer CSV trace")
    p.add_argument("--output", help="write final loads, one per line")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="discrepancy over a range of alphas")
    _add_network(p)
    _add_input(p)
    p.add_argument("--alpha", default="0:0.5:0.1", help="start:stop:step or comma list")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True, help="CSV of per-trial results")
    p.add_argument("--svg", help="summary chart")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="evaluate discrepancy bounds")
    bsub = p.add_subparsers(dest="kind", required=True)
    b = bsub.add_parser("theorem1")
    _add_network(b)
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--t1", type=int, required=True)
    b.add_argument("--t2", type=int, default=None, help="default T")
    b.add_argument("--K", type=float, required=True)
    b = bsub.add_parser("periodic")
    b.add_argument("--round", required=True, help="schedule file holding one period")
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--K", type=float, required=True)
    b.add_argument("--n", type=int, default=None)
    for name in ("ccc-lower", "empirical"):
        b = bsub.add_parser(name)
        b.add_argument("--log-n", type=int, required=True)
        b.add_argument("--alpha", type=float, required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify", help="run a verification check")
    vsub = p.add_subparsers(dest="check", required=True)
    v = vsub.add_parser("lemma3", help="every balancer odd with probability 1/2")
    v.add_argument("--ccc", type=int, required=True, metavar="LOG_N")
    v.add_argument("--orientation", choices=("up", "down", "random", "all"), default="up")
    v.add_argument("--orientation-seed", type=int, default=0)
    v.add_argument("--trials", type=int, default=20000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tolerance", type=float, default=0.015)
    v.add_argument("--inputs", choices=("uniform", "constant"), default="uniform")
    v.add_argument("--detail", help="per-balancer CSV")
    v = vsub.add_parser("independence", help="pairwise decorrelation of Odd indicators")
    v.add_argument("--ccc", type=int, required=True, metavar="LOG_N")
    v.add_argument("--orientation", choices=("up", "down", "random"), default="up")
    v.add_argument("--orientation-seed", type=int, default=0)
    v.add_argument("--wire", type=int, default=0)
    v.add_argument("--trials", type=int, default=20000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--threshold", type=float, default=0.03)
    v.add_argument("--max-pairs", type=int, default=500)
    v.add_argument("--detail", help="per-balancer CSV")
    v = vsub.add_parser("eq3", help="exact unfolding of the rounding errors")
    v.add_argument("--n", type=int, default=16)
    v.add_argument("--T", type=int, default=8)
    v.add_argument("--cases", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v = vsub.add_parser("ccc-structure", help="closed-form CCC products")
    v.add_argument("--ccc", type=int, required=True, metavar="LOG_N")
    v.add_argument("--all", action="store_true", help="check every log_n from 1 up to LOG_N")
    v = vsub.add_parser("remark2", help="orientation flip symmetry")
    _add_network(v)
    v.add_argument("--alpha", type=float, required=True)
    v.add_argument("--trials", type=int, default=10000)
    v.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ScheduleError, ValueError, OSError) as exc:
        print(f"smoothnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
