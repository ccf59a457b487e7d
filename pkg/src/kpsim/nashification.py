"""Unselfish convergence: steer any assignment to a pure NE without
raising the makespan.

Realized as max-weight best-response dynamics under the makespan policy:
every best-response move lands on a machine whose new load is below the
mover's old cost, so the makespan never increases, and on identical
machines each user moves at most once (at most n migrations).
"""

from __future__ import annotations

from dataclasses import dataclass

from .dynamics import DEFAULT_MAX_STEPS, PriorityAlgorithm, max_load, raw_loads, run_to_ne
from .errors import KpsimError, UnsupportedConfigError
from .model import Cost, Instance, State


@dataclass
class NashifyResult:
    moves: int
    final_state: State
    initial_makespan: Cost
    final_makespan: Cost


def nashify(
    instance: Instance,
    initial: State,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> NashifyResult:
    """Drive `initial` to a pure NE; makespan is never allowed to grow."""
    if instance.model == "unrelated":
        raise UnsupportedConfigError("nashification supports identical and related machines")
    initial_makespan = max_load(instance, raw_loads(instance, initial))
    result = run_to_ne(instance, initial, "makespan", PriorityAlgorithm("maw"), max_steps)
    if not result.reached_ne:
        raise KpsimError(f"nashification did not converge within {max_steps} steps")
    final_makespan = max_load(instance, raw_loads(instance, result.final_state))
    return NashifyResult(result.steps, result.final_state, initial_makespan, final_makespan)
