"""Pairwise coalition dynamics on identical machines under the makespan policy.

Two users on different machines may exchange machines (a 2-flip) when the
exchange strictly lowers the larger of the two machine loads. Single
improving moves always take precedence; flips fire only at unilateral
equilibria, so the flip count is well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dynamics import (
    DEFAULT_MAX_STEPS,
    Move,
    PriorityAlgorithm,
    SelectionHistory,
    TraceEvent,
    _fast_pass_identical,
    apply_move,
    raw_loads,
    select_user,
)
from .errors import DomainError, UnsupportedConfigError
from .model import Instance, State, check_cost
from .rng import SplitMix64

COALITION_PRIORITIES = ("map", "mip")


@dataclass(frozen=True)
class FlipMove:
    """An improving pair exchange; user_a sits on the heavier machine."""

    user_a: int
    user_b: int
    machine_a: int
    machine_b: int
    pair_key: int  # weight difference w_a - w_b, positive for improving flips


@dataclass
class CoalitionRunResult:
    single_moves: int
    flips: int
    reached_ne: bool
    final_state: State
    trace: list[TraceEvent]


def improving_flips(instance: Instance, state: State, loads=None) -> list[FlipMove]:
    """All pair exchanges that strictly lower the two machines' max load.

    With user a on the heavier machine A and b on B, the swap improves
    exactly when 0 < w_a - w_b < load(A) - load(B). Output is normalized
    (heavier-machine user first) and sorted by user ids.
    """
    if instance.model != "identical":
        raise UnsupportedConfigError(
            f"coalition dynamics support identical machines only, got {instance.model!r}"
        )
    if loads is None:
        loads = raw_loads(instance, state)
    weights = instance.weights
    flips: list[FlipMove] = []
    for hi in range(instance.m):
        for lo in range(instance.m):
            if hi == lo:
                continue
            gap = loads[hi] - loads[lo]
            if gap < 2:  # integer weights: need w_a - w_b in (0, gap)
                continue
            for a in state.queues[hi]:
                wa = weights[a]
                for b in state.queues[lo]:
                    diff = wa - weights[b]
                    if 0 < diff < gap:
                        flips.append(FlipMove(a, b, hi, lo, diff))
    flips.sort(key=lambda f: (f.user_a, f.user_b))
    return flips


def select_flip(flips: list[FlipMove], cpriority: str) -> FlipMove:
    """Pick the flip with the max (map) or min (mip) weight difference."""
    if not flips:
        raise DomainError("no flips to select from")
    if cpriority not in COALITION_PRIORITIES:
        raise DomainError(f"unknown coalition priority {cpriority!r}")
    if cpriority == "map":
        return min(flips, key=lambda f: (-f.pair_key, f.user_a, f.user_b))
    return min(flips, key=lambda f: (f.pair_key, f.user_a, f.user_b))


def apply_flip(instance: Instance, state: State, loads, flip: FlipMove) -> None:
    state.migrate(flip.user_a, flip.machine_b)
    state.migrate(flip.user_b, flip.machine_a)
    diff = instance.weights[flip.user_a] - instance.weights[flip.user_b]
    loads[flip.machine_a] -= diff
    loads[flip.machine_b] = check_cost(loads[flip.machine_b] + diff)


def run_coalitional(
    instance: Instance,
    initial: State,
    algo: PriorityAlgorithm,
    cpriority: str,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> CoalitionRunResult:
    """Run singles-first coalition dynamics to a pairwise-stable NE.

    Terminal states admit neither an improving unilateral move nor an
    improving 2-flip. Flip trace rows carry the two machines' max load
    before/after as their cost columns.
    """
    if instance.model != "identical":
        raise UnsupportedConfigError(
            f"coalition dynamics support identical machines only, got {instance.model!r}"
        )
    if cpriority not in COALITION_PRIORITIES:
        raise DomainError(f"unknown coalition priority {cpriority!r}")
    if max_steps < 1:
        raise DomainError(f"max_steps must be >= 1, got {max_steps}")

    state = initial.copy()
    loads = raw_loads(instance, state)
    history = SelectionHistory() if algo.tag == "fifo" else None
    rng = SplitMix64(algo.seed) if algo.tag == "random" else None
    weights = instance.weights

    trace: list[TraceEvent] = []
    singles = flips = 0
    reached = False
    while True:
        _, _, moves = _fast_pass_identical(instance, state, "makespan", loads)
        if moves:
            if len(trace) >= max_steps:
                break
            chosen = select_user([mv[0] for mv in moves], weights, algo, history, rng)
            move = Move(*next(mv for mv in moves if mv[0] == chosen))
            if history is not None:
                history.record(chosen)
            apply_move(instance, state, loads, move)
            singles += 1
            trace.append(
                TraceEvent(
                    step=len(trace),
                    mover=move.user,
                    source=move.source,
                    target=move.target,
                    cost_before=move.cost,
                    cost_after=move.new_cost,
                    potential=_makespan_potential(state, loads),
                    makespan=max(loads),
                )
            )
            continue
        candidates = improving_flips(instance, state, loads)
        if not candidates:
            reached = True
            break
        if len(trace) >= max_steps:
            break
        flip = select_flip(candidates, cpriority)
        before = max(loads[flip.machine_a], loads[flip.machine_b])
        apply_flip(instance, state, loads, flip)
        after = max(loads[flip.machine_a], loads[flip.machine_b])
        flips += 1
        trace.append(
            TraceEvent(
                step=len(trace),
                mover=flip.user_a,
                source=flip.machine_a,
                target=flip.machine_b,
                cost_before=before,
                cost_after=after,
                potential=_makespan_potential(state, loads),
                makespan=max(loads),
                move_type="flip",
                mover_b=flip.user_b,
            )
        )
    return CoalitionRunResult(singles, flips, reached, state, trace)


def _makespan_potential(state: State, loads) -> int:
    """Sum of user costs under makespan: each resident pays the full load."""
    return check_cost(sum(len(q) * load for q, load in zip(state.queues, loads)))
