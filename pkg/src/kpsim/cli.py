"""Command-line entry points: simulate, experiment, nashify, verify.

Exit codes: 0 success, 1 usage or domain error, 2 step cap exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import coalitions, dynamics, experiments, formats, nashification, oracle
from .errors import KpsimError
from .model import MODELS, POLICIES, Instance, State
from .rng import SplitMix64, derive_seeds


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="kpsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one dynamics instance to equilibrium")
    sim.add_argument("--model", choices=MODELS, default="identical")
    sim.add_argument("--policy", choices=POLICIES, required=True)
    sim.add_argument("--priority", choices=dynamics.PRIORITIES, required=True)
    sim.add_argument("--n", type=int)
    sim.add_argument("--m", default="n/2", help="machine count, an integer or n/K")
    sim.add_argument("--dist", choices=experiments.DISTRIBUTIONS)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--max-steps", type=int, default=dynamics.DEFAULT_MAX_STEPS)
    sim.add_argument("--coalitions", action="store_true")
    sim.add_argument("--coalition-priority", choices=coalitions.COALITION_PRIORITIES)
    sim.add_argument("--init", choices=("concentrated", "random"), default="concentrated")
    sim.add_argument("--trace", metavar="PATH")
    sim.add_argument("--instance", metavar="PATH", help="instance JSON; overrides --dist/--n/--m")

    exp = sub.add_parser("experiment", help="run a sweep from a JSON config")
    exp.add_argument("--config", required=True, metavar="PATH")
    exp.add_argument("--out", required=True, metavar="DIR")
    exp.add_argument("--jobs", type=int, default=1)

    nash = sub.add_parser("nashify", help="steer an assignment to a pure NE")
    nash.add_argument("--instance", required=True, metavar="PATH")
    nash.add_argument("--assignment", required=True, metavar="PATH")
    nash.add_argument("--out", required=True, metavar="PATH")

    ver = sub.add_parser("verify", help="exhaustive checks on a small instance")
    ver.add_argument("--instance", required=True, metavar="PATH")
    ver.add_argument("--policy", choices=POLICIES, required=True)
    ver.add_argument("--budget", type=int, default=oracle.DEFAULT_BUDGET)
    return parser


def _default_seed(value):
    if value is not None:
        return value
    env = os.environ.get("SSLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise _UsageError(f"SSLAB_SEED must be an integer, got {env!r}") from None
    return 0


def _simulate(args) -> int:
    seed = _default_seed(args.seed)
    weight_seed, init_seed, priority_seed = derive_seeds(seed, 3)

    if args.instance is not None:
        instance = formats.load_instance(args.instance)
    else:
        if args.dist is None or args.n is None:
            raise _UsageError("simulate needs --instance, or --dist with --n")
        if args.model != "identical":
            raise _UsageError("--dist generates weights for identical machines only; "
                              "use --instance for related/unrelated models")
        weights = experiments.gen_weights(args.dist, args.n, weight_seed)
        instance = Instance("identical", _parse_m(args.m, args.n), tuple(weights))

    if args.coalitions:
        if instance.model != "identical" or args.policy != "makespan":
            raise _UsageError("--coalitions needs identical machines and --policy makespan")
    elif args.coalition_priority is not None:
        raise _UsageError("--coalition-priority needs --coalitions")

    if args.init == "random":
        state = State.random(instance, SplitMix64(init_seed))
    else:
        state = State.concentrated(instance)

    if args.priority == "random":
        algo = dynamics.PriorityAlgorithm("random", seed=priority_seed)
    else:
        algo = dynamics.PriorityAlgorithm(args.priority)

    if args.coalitions:
        cpriority = args.coalition_priority or "mip"
        result = coalitions.run_coalitional(instance, state, algo, cpriority, args.max_steps)
        steps, flips, reached = result.single_moves, result.flips, result.reached_ne
    else:
        run = dynamics.run_to_ne(instance, state, args.policy, algo, args.max_steps)
        steps, flips, reached = run.steps, 0, run.reached_ne
        result = run

    if args.trace is not None:
        formats.write_trace_csv(result.trace, args.trace)

    makespan = dynamics.max_load(instance, dynamics.raw_loads(instance, result.final_state))
    print(
        f"steps={steps} flips={flips} ne={'true' if reached else 'false'} "
        f"makespan={formats.fmt_cost(makespan)}"
    )
    return 0 if reached else 2


def _parse_m(text, n):
    try:
        return experiments.resolve_m(int(text), n)
    except ValueError:
        pass
    return experiments.resolve_m(text, n)


def _experiment(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise KpsimError(f"config file {args.config}: invalid JSON ({exc})") from None
    try:
        config = experiments.ExperimentConfig.from_dict(data)
    except TypeError as exc:
        raise KpsimError(f"config file {args.config}: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = experiments.run_experiment(config, jobs=max(1, args.jobs))
    formats.write_experiment_csv(config, rows, out / "results.csv")

    classes: dict = {}
    usable = [row for row in rows if row.capped_runs == 0]
    series = [(row.n, row.mean_steps) for row in usable]
    classes["steps"] = _classify_or_reason(series)
    if config.coalition is not None:
        classes["flips"] = _classify_or_reason([(row.n, row.mean_flips) for row in usable])
    formats.write_summary(classes, out / "summary.txt")
    return 0


def _classify_or_reason(series):
    try:
        return experiments.classify_growth(series)
    except KpsimError as exc:
        return str(exc)


def _nashify(args) -> int:
    instance = formats.load_instance(args.instance)
    state = formats.load_assignment_csv(args.assignment, instance)
    result = nashification.nashify(instance, state)
    formats.write_assignment_csv(result.final_state, args.out)
    print(
        f"moves={result.moves} makespan "
        f"{formats.fmt_cost(result.initial_makespan)}->"
        f"{formats.fmt_cost(result.final_makespan)}"
    )
    return 0


def _verify(args) -> int:
    instance = formats.load_instance(args.instance)
    graph = oracle.build_graph(instance, args.policy, args.budget)
    equilibria = oracle.verify_ne_oracle(instance, args.policy, args.budget)
    search = oracle.longest_improvement_path(instance, args.policy, args.budget, graph=graph)
    states = instance.m ** instance.n
    longest = "n/a" if search.cyclic else str(search.length)
    print(
        f"states={states} ne_states={len(equilibria)} "
        f"longest_path={longest} cyclic={'true' if search.cyclic else 'false'}"
    )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _simulate(args)
        if args.command == "experiment":
            return _experiment(args)
        if args.command == "nashify":
            return _nashify(args)
        return _verify(args)
    except _UsageError as exc:
        print(f"kpsim: error: {exc}", file=sys.stderr)
        return 1
    except (KpsimError, OSError) as exc:
        print(f"kpsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
