"""Sequential best-response dynamics with pluggable priority algorithms.

One user moves per step: the priority algorithm (max-weight, min-weight,
least-recently-selected, or seeded random) picks among the users that can
strictly improve, and the chosen user migrates to its best response. The
run records a trace of every migration together with the potential (sum of
user costs) and the makespan after the step.

The per-step search is implemented as bulk passes over machines so a step
costs O(n + m) for load-based policies on identical machines and O(n * m)
otherwise; `model.best_response` is the simple per-user reference that the
bulk passes must agree with.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Optional

from .errors import CostOverflowError, DomainError
from .model import (
    WEIGHT_MAX,
    Cost,
    Instance,
    State,
    check_cost,
)
from .rng import SplitMix64

PRIORITIES = ("maw", "miw", "fifo", "random")

DEFAULT_MAX_STEPS = 10**7


@dataclass(frozen=True)
class PriorityAlgorithm:
    """Rule choosing which improving user migrates next."""

    tag: str
    seed: int | None = None

    def __post_init__(self):
        if self.tag not in PRIORITIES:
            raise DomainError(f"unknown priority algorithm {self.tag!r}")
        if self.tag == "random" and self.seed is None:
            raise DomainError("random priority needs a seed")
        if self.tag != "random" and self.seed is not None:
            raise DomainError(f"priority {self.tag!r} does not take a seed")


class SelectionHistory:
    """Least-recently-selected order for the fifo priority rule.

    Users never selected rank first (by ascending id); each selection moves
    the user to the back of the order.
    """

    def __init__(self):
        self._last: dict[int, int] = {}
        self._tick = 0

    def rank(self, user: int) -> tuple[int, int]:
        return (self._last.get(user, -1), user)

    def record(self, user: int) -> None:
        self._tick += 1
        self._last[user] = self._tick


@dataclass(frozen=True)
class TraceEvent:
    """One migration (or pair exchange) in a run trace."""

    step: int
    mover: int
    source: int
    target: int
    cost_before: Cost
    cost_after: Cost
    potential: Cost
    makespan: Cost
    move_type: str = "single"
    mover_b: int | None = None


@dataclass
class RunResult:
    steps: int
    reached_ne: bool
    final_state: State
    trace: list[TraceEvent]


class Move(NamedTuple):
    user: int
    source: int
    cost: Cost
    target: int
    new_cost: Cost


# --- bulk per-step computation ---------------------------------------------


def raw_loads(instance: Instance, state: State) -> list[int]:
    """Unscaled per-machine weight totals."""
    loads = []
    for j, queue in enumerate(state.queues):
        loads.append(check_cost(sum(instance.weight_on(k, j) for k in queue)))
    return loads


def max_load(instance: Instance, loads: list[int]) -> Cost:
    """Makespan: the maximum (speed-scaled) machine load."""
    if instance.model == "related":
        return max(Fraction(load, s) for load, s in zip(loads, instance.speeds))
    return max(loads)


@lru_cache(maxsize=256)
def _service_order(instance, policy):
    """Global service order for sjf/ljf on weight-based instances.

    Depends only on the (immutable) weights, so it is cached per instance
    and policy for the run loop.
    """
    weights = instance.weights
    if policy == "sjf":
        order = sorted(range(len(weights)), key=lambda u: (weights[u], u))
    else:
        order = sorted(range(len(weights)), key=lambda u: (-weights[u], u))
    return tuple(order)


def _view_load_identical(instance, state, policy, loads):
    n, m = instance.n, instance.m
    weights = instance.weights
    assignment = state.assignment
    if policy == "makespan":
        costs = [loads[assignment[u]] for u in range(n)]
    else:
        costs: list[Cost] = [0] * n
        for queue in state.queues:
            acc = 0
            for u in queue:
                acc += weights[u]
                costs[u] = acc
    moves: list[tuple] = []
    if m == 1:
        return costs, moves
    min1 = min2 = (WEIGHT_MAX + 1, -1)
    for j, load in enumerate(loads):
        key = (load, j)
        if key < min1:
            min1, min2 = key, min1
        elif key < min2:
            min2 = key
    for u in range(n):
        source = assignment[u]
        target = min2[1] if source == min1[1] else min1[1]
        new_cost = check_cost(loads[target] + weights[u])
        if new_cost < costs[u]:
            moves.append((u, source, costs[u], target, new_cost))
    return costs, moves


def _view_load_general(instance, state, policy, loads):
    """makespan/fifo on related or unrelated machines: O(n*m) scan."""
    n, m = instance.n, instance.m
    assignment = state.assignment
    related = instance.model == "related"
    speeds = instance.speeds

    def scaled(value, j):
        return Fraction(value, speeds[j]) if related else value

    if policy == "makespan":
        costs = [scaled(loads[assignment[u]], assignment[u]) for u in range(n)]
    else:
        costs = [0] * n
        for j, queue in enumerate(state.queues):
            acc = 0
            for u in queue:
                acc += instance.weight_on(u, j)
                costs[u] = scaled(acc, j)
    moves: list[tuple] = []
    for u in range(n):
        source = assignment[u]
        best = None
        best_cost = costs[u]
        for j in range(m):
            if j == source:
                continue
            cost = scaled(check_cost(loads[j] + instance.weight_on(u, j)), j)
            if cost < best_cost:
                best, best_cost = j, cost
        if best is not None:
            moves.append((u, source, costs[u], best, best_cost))
    return costs, moves


def _view_order_weighted(instance, state, policy, loads):
    """sjf/ljf on identical or related machines.

    Walks users in global service order, keeping one prefix pointer per
    machine, so every (user, machine) completion time comes out of a single
    O(n*m) sweep.
    """
    n, m = instance.n, instance.m
    weights = instance.weights
    assignment = state.assignment
    related = instance.model == "related"
    speeds = instance.speeds
    sign = 1 if policy == "sjf" else -1

    order = _service_order(instance, policy)
    keys = [(sign * weights[u], u) for u in range(n)]
    residents: list[list[int]] = [[] for _ in range(m)]
    for u in order:
        residents[assignment[u]].append(u)
    ptr = [0] * m
    prefix = [0] * m
    sizes = [len(r) for r in residents]
    # prefixes never exceed machine loads, so one bound covers every value
    risky = max(loads) + max(weights) > WEIGHT_MAX if loads else False

    costs: list[Cost] = [0] * n
    improving: list[tuple] = []
    for u in order:
        key = keys[u]
        wu = weights[u]
        source = assignment[u]
        cur = None
        best = -1
        best_cost = None
        for j in range(m):
            p = ptr[j]
            if p < sizes[j]:
                served = residents[j]
                acc = prefix[j]
                while p < sizes[j] and keys[served[p]] < key:
                    acc += weights[served[p]]
                    p += 1
                ptr[j] = p
                prefix[j] = acc
            raw = prefix[j] + wu
            if risky:
                check_cost(raw)
            value = Fraction(raw, speeds[j]) if related else raw
            if j == source:
                cur = value
            elif best_cost is None or value < best_cost:
                best, best_cost = j, value
        costs[u] = cur
        if best >= 0 and best_cost < cur:
            improving.append((u, source, cur, best, best_cost))
    improving.sort()
    return costs, improving


def _view_order_unrelated(instance, state, policy, loads):
    """sjf/ljf on unrelated machines: per-machine sorted prefixes + bisect."""
    n, m = instance.n, instance.m
    matrix = instance.cost_matrix
    assignment = state.assignment
    sign = 1 if policy == "sjf" else -1

    keys: list[list[tuple[int, int]]] = []
    prefixes: list[list[int]] = []
    for j, queue in enumerate(state.queues):
        ks = sorted((sign * matrix[k][j], k) for k in queue)
        acc = [0]
        for sk, k in ks:
            acc.append(acc[-1] + matrix[k][j])
        keys.append(ks)
        prefixes.append(acc)

    costs: list[Cost] = [0] * n
    moves: list[tuple] = []
    for u in range(n):
        source = assignment[u]
        pos = bisect.bisect_left(keys[source], (sign * matrix[u][source], u))
        cost = check_cost(prefixes[source][pos] + matrix[u][source])
        costs[u] = cost
        best = None
        best_cost = cost
        for j in range(m):
            if j == source:
                continue
            pos = bisect.bisect_left(keys[j], (sign * matrix[u][j], u))
            hyp = check_cost(prefixes[j][pos] + matrix[u][j])
            if hyp < best_cost:
                best, best_cost = j, hyp
        if best is not None:
            moves.append((u, source, cost, best, best_cost))
    return costs, moves


def _fast_pass_identical(instance, state, policy, loads):
    """Fused sweep for identical machines under makespan/fifo.

    Returns (potential, makespan, moves) with moves as raw tuples in queue
    order; one pass over the queues replaces the separate cost, move, and
    potential computations of `step_view` on the hot path.
    """
    weights = instance.weights
    m = instance.m
    potential_sum = 0
    moves: list[tuple] = []
    if m == 1:
        queue = state.queues[0]
        if policy == "makespan":
            potential_sum = loads[0] * len(queue)
        else:
            acc = 0
            for u in queue:
                acc += weights[u]
                potential_sum += acc
        return check_cost(potential_sum), loads[0], moves
    min1 = min2 = (WEIGHT_MAX + 1, -1)
    for j, load in enumerate(loads):
        key = (load, j)
        if key < min1:
            min1, min2 = key, min1
        elif key < min2:
            min2 = key
    for j, queue in enumerate(state.queues):
        load = loads[j]
        tgt_load, target = min2 if j == min1[1] else min1
        if policy == "makespan":
            potential_sum += load * len(queue)
            gap = load - tgt_load
            if gap > 0:
                for u in queue:
                    wu = weights[u]
                    if wu < gap:
                        moves.append((u, j, load, target, check_cost(tgt_load + wu)))
        else:
            acc = 0
            for u in queue:
                ahead = acc
                wu = weights[u]
                acc += wu
                potential_sum += acc
                if tgt_load < ahead:
                    moves.append((u, j, acc, target, check_cost(tgt_load + wu)))
    moves.sort()
    return check_cost(potential_sum), max(loads), moves


def _view(instance, state, policy, loads=None):
    """(costs, improving move tuples) for one step; internal hot-path form."""
    if policy not in ("makespan", "sjf", "ljf", "fifo"):
        raise DomainError(f"unknown cost policy {policy!r}")
    if loads is None:
        loads = raw_loads(instance, state)
    if policy in ("makespan", "fifo"):
        if instance.model == "identical":
            return _view_load_identical(instance, state, policy, loads)
        return _view_load_general(instance, state, policy, loads)
    if instance.model == "unrelated":
        return _view_order_unrelated(instance, state, policy, loads)
    return _view_order_weighted(instance, state, policy, loads)


def step_view(instance, state, policy, loads=None):
    """Current costs of every user plus all improving best-response moves.

    Moves come back in ascending user id; each names the lowest-index
    machine among the strictly best targets.
    """
    costs, moves = _view(instance, state, policy, loads)
    return costs, [Move(*mv) for mv in moves]


# --- public operations ------------------------------------------------------


def improving_users(instance, state, policy) -> list[int]:
    """Users with a strictly improving move, ascending by id."""
    _, moves = _view(instance, state, policy)
    return [mv[0] for mv in moves]


def potential(instance, state, policy) -> Cost:
    """Sum of all users' current costs under the active policy."""
    costs, _ = _view(instance, state, policy)
    total = sum(costs)
    if total > WEIGHT_MAX:
        raise CostOverflowError(f"potential exceeds 128 bits: {total}")
    return total


def select_user(candidates, weights, algo, history=None, rng=None) -> int:
    """Apply a priority algorithm to a non-empty candidate list.

    `weights` maps user id to the weight the rule compares (weight on the
    current machine for unrelated instances).
    """
    if not candidates:
        raise DomainError("no candidates to select from")
    if algo.tag == "maw":
        return min(candidates, key=lambda u: (-weights[u], u))
    if algo.tag == "miw":
        return min(candidates, key=lambda u: (weights[u], u))
    if algo.tag == "fifo":
        if history is None:
            raise DomainError("fifo priority needs a selection history")
        return min(candidates, key=history.rank)
    if rng is None:
        raise DomainError("random priority needs a generator")
    return rng.choice(candidates)


def _candidate_weights(instance, state, moves):
    if instance.model == "unrelated":
        return {mv[0]: instance.cost_matrix[mv[0]][mv[1]] for mv in moves}
    return instance.weights


def apply_move(instance, state, loads, move: Move) -> None:
    """Execute a chosen move, keeping the load cache in sync."""
    loads[move.source] -= instance.weight_on(move.user, move.source)
    state.migrate(move.user, move.target)
    loads[move.target] = check_cost(
        loads[move.target] + instance.weight_on(move.user, move.target)
    )


def step(
    instance,
    state,
    policy,
    algo,
    history=None,
    rng=None,
    step_index: int = 0,
) -> Optional[TraceEvent]:
    """Perform one dynamics step in place; None when already at equilibrium."""
    loads = raw_loads(instance, state)
    _, moves = _view(instance, state, policy, loads)
    if not moves:
        return None
    weights = _candidate_weights(instance, state, moves)
    chosen = select_user([mv[0] for mv in moves], weights, algo, history, rng)
    move = Move(*next(mv for mv in moves if mv[0] == chosen))
    if history is not None:
        history.record(chosen)
    apply_move(instance, state, loads, move)
    return TraceEvent(
        step=step_index,
        mover=move.user,
        source=move.source,
        target=move.target,
        cost_before=move.cost,
        cost_after=move.new_cost,
        potential=potential(instance, state, policy),
        makespan=max_load(instance, loads),
    )


def run_to_ne(
    instance,
    initial: State,
    policy: str,
    algo: PriorityAlgorithm,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> RunResult:
    """Iterate best-response steps until pure NE or the step cap.

    The input state is not mutated. The potential/makespan recorded on each
    event describe the state right after that event's move.
    """
    if max_steps < 1:
        raise DomainError(f"max_steps must be >= 1, got {max_steps}")
    state = initial.copy()
    loads = raw_loads(instance, state)
    history = SelectionHistory() if algo.tag == "fifo" else None
    rng = SplitMix64(algo.seed) if algo.tag == "random" else None
    fast = instance.model == "identical" and policy in ("makespan", "fifo")

    trace: list[TraceEvent] = []
    pending: Optional[tuple] = None
    reached = False
    while True:
        if fast:
            total, makespan, moves = _fast_pass_identical(instance, state, policy, loads)
        else:
            costs, moves = _view(instance, state, policy, loads)
            total = sum(costs)
            if total > WEIGHT_MAX:
                raise CostOverflowError(f"potential exceeds 128 bits: {total}")
            makespan = max_load(instance, loads)
        if pending is not None:
            trace.append(TraceEvent(*pending, potential=total, makespan=makespan))
            pending = None
        if not moves:
            reached = True
            break
        if len(trace) >= max_steps:
            break
        weights = _candidate_weights(instance, state, moves)
        chosen = select_user([mv[0] for mv in moves], weights, algo, history, rng)
        move = Move(*next(mv for mv in moves if mv[0] == chosen))
        if history is not None:
            history.record(chosen)
        apply_move(instance, state, loads, move)
        pending = (len(trace), move.user, move.source, move.target, move.cost, move.new_cost)
    return RunResult(len(trace), reached, state, trace)
