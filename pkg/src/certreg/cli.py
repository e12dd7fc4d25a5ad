"""Command-line entry point: ``certreg {run,cert,solve-psmc,oracle}``."""
from __future__ import annotations

import argparse
import json
import sys
import tempfile

from . import oracle as oracles
from .harness import METHODS, ExperimentConfig, ThresholdSpec, emit_results, run_experiment
from .median import VoteSet, WeightedVoteSet
from .overlap import DEFAULT_TIME_LIMIT, greedy_partial_cover, read_instance, solve_ilp_bb


def _floats(text: str) -> list:
    return [float(v) for v in text.replace(",", " ").split()]


def _ints(text: str) -> list:
    return [int(v) for v in text.replace(",", " ").split()]


def _emit(curve, out, fmt):
    if out:
        emit_results(curve, out, fmt)
        return
    with tempfile.NamedTemporaryFile("r", suffix="." + fmt) as tmp:
        emit_results(curve, tmp.name, fmt)
        sys.stdout.write(open(tmp.name).read())


def cmd_run(args):
    config = ExperimentConfig.from_json(args.config)
    _emit(run_experiment(config), args.out, args.format)


def cmd_cert(args):
    config = ExperimentConfig(
        dataset=args.data, target=args.target, method=args.method, q=args.q, d=args.d,
        seed=args.seed, trials=args.trials, test_samples=args.samples,
        threshold=ThresholdSpec(args.threshold_mode, args.xi), time_limit=args.time_limit,
        r_cap=args.r_cap, lam=args.lam, k=args.k, radius=args.radius, p=args.p,
        test_dataset=args.test_data, log_target=args.log_target)
    _emit(run_experiment(config), args.out, args.format)


def cmd_solve_psmc(args):
    inst = read_instance(args.instance)
    sol = solve_ilp_bb(inst, args.time_limit, args.node_limit)
    report = {"certified_R": sol.certified_R, "exact": sol.exact,
              "incumbent_cost": sol.incumbent_cost, "lower_bound": sol.lower_bound,
              "node_count": sol.node_count, "elapsed": round(sol.elapsed, 6),
              "allocation": list(sol.allocation) if sol.allocation is not None else None}
    if args.greedy:
        g = greedy_partial_cover(inst)
        report["greedy"] = {"G": g.G, "bound": g.bound, "factor": g.factor}
    print(json.dumps(report, indent=2))


def cmd_oracle(args):
    if args.kind == "overlap":
        if not args.instance:
            raise SystemExit("overlap oracle needs --instance")
        res = oracles.oracle_overlap(read_instance(args.instance))
    else:
        votes = VoteSet(_floats(args.votes), args.xi)
        if args.kind == "swap":
            res = oracles.oracle_swap(votes)
        elif args.kind == "insert-delete":
            res = oracles.oracle_insert_delete(votes)
        else:
            if not args.costs:
                raise SystemExit("weighted-swap oracle needs --costs")
            res = oracles.oracle_weighted_swap(WeightedVoteSet(votes, _ints(args.costs)))
    print(json.dumps({"R": res.optimal_R, "robust": res.robust, "witness": res.witness}))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="certreg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def outputs(p):
        p.add_argument("--out", help="write the curve here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("run", help="run an experiment from a JSON config")
    p.add_argument("--config", required=True)
    outputs(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cert", help="run an experiment configured by flags")
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--target", required=True, help="target column name")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--d", type=int)
    p.add_argument("--xi", type=float, default=0.0)
    p.add_argument("--threshold-mode", choices=("absolute", "fraction", "binary"),
                   default="absolute")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
    p.add_argument("--r-cap", type=int, default=2)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--k", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--test-data")
    p.add_argument("--log-target", action="store_true")
    outputs(p)
    p.set_defaults(func=cmd_cert)

    p = sub.add_parser("solve-psmc", help="solve a partial set multicover instance file")
    p.add_argument("instance")
    p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
    p.add_argument("--node-limit", type=int)
    p.add_argument("--greedy", action="store_true", help="also report the greedy cover bound")
    p.set_defaults(func=cmd_solve_psmc)

    p = sub.add_parser("oracle", help="brute-force robustness of small instances")
    p.add_argument("kind", choices=("swap", "insert-delete", "weighted-swap", "overlap"))
    p.add_argument("--votes", help="comma-separated vote values")
    p.add_argument("--xi", type=float, default=0.0)
    p.add_argument("--costs", help="comma-separated integer costs")
    p.add_argument("--instance", help="cover instance file (overlap)")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as err:
        print(f"certreg: error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
