"""File formats: instance JSON, assignment CSV, trace CSV, experiment CSV.

All values are written exactly: integers as-is, rationals as `p/q` fraction
strings when the denominator is not 1. Output is deterministic byte-for-byte
given the same inputs.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .dynamics import TraceEvent
from .errors import DomainError
from .model import Instance, State

TRACE_HEADER = "step,mover,source,target,cost_before,cost_after,potential,makespan,move_type"
EXPERIMENT_HEADER = (
    "n,policy,priority,coalition,dist,mean_steps,max_steps_observed,mean_flips,capped_runs"
)
ASSIGNMENT_HEADER = "user,machine"


def fmt_cost(value) -> str:
    """Exact text for an integer or Fraction cost."""
    if isinstance(value, Fraction) and value.denominator == 1:
        return str(value.numerator)
    return str(value)


def fmt_mean(value: float) -> str:
    return f"{value:.10g}"


# --- instance JSON -----------------------------------------------------------

_REQUIRED_KEYS = {
    "identical": {"model", "m", "weights"},
    "related": {"model", "weights", "speeds"},
    "unrelated": {"model", "cost_matrix"},
}


def instance_to_dict(instance: Instance) -> dict:
    if instance.model == "identical":
        return {"model": "identical", "m": instance.m, "weights": list(instance.weights)}
    if instance.model == "related":
        return {
            "model": "related",
            "weights": list(instance.weights),
            "speeds": list(instance.speeds),
        }
    return {"model": "unrelated", "cost_matrix": [list(row) for row in instance.cost_matrix]}


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise DomainError("instance file must hold a JSON object")
    model = data.get("model")
    if model not in _REQUIRED_KEYS:
        raise DomainError(f"instance field 'model': expected one of "
                          f"{sorted(_REQUIRED_KEYS)}, got {model!r}")
    required = _REQUIRED_KEYS[model]
    missing = required - set(data)
    if missing:
        raise DomainError(f"instance field {sorted(missing)[0]!r}: missing")
    extra = set(data) - required
    if extra:
        raise DomainError(
            f"instance field {sorted(extra)[0]!r}: must be absent for {model} instances"
        )
    if model == "identical":
        return Instance("identical", data["m"], tuple(data["weights"]))
    if model == "related":
        return Instance(
            "related",
            len(data["speeds"]),
            tuple(data["weights"]),
            tuple(data["speeds"]),
        )
    matrix = data["cost_matrix"]
    if not matrix or not matrix[0]:
        raise DomainError("instance field 'cost_matrix': must be a non-empty matrix")
    return Instance("unrelated", len(matrix[0]), cost_matrix=tuple(map(tuple, matrix)))


def load_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise DomainError(f"instance file {path}: invalid JSON ({exc})") from None
    return instance_from_dict(data)


def dump_instance(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance)) + "\n", encoding="utf-8")


# --- assignment CSV ----------------------------------------------------------


def write_assignment_csv(state: State, path) -> None:
    lines = [ASSIGNMENT_HEADER]
    lines += [f"{user},{machine}" for user, machine in enumerate(state.assignment)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_assignment_csv(path, instance: Instance) -> State:
    """Read `user,machine` rows into a state with canonical queues."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0].strip() != ASSIGNMENT_HEADER:
        raise DomainError(f"assignment file {path}: expected header '{ASSIGNMENT_HEADER}'")
    assignment = [-1] * instance.n
    for line in lines[1:]:
        parts = line.strip().split(",")
        if len(parts) != 2:
            raise DomainError(f"assignment file {path}: bad row {line!r}")
        try:
            user, machine = int(parts[0]), int(parts[1])
        except ValueError:
            raise DomainError(f"assignment file {path}: bad row {line!r}") from None
        instance.check_user(user)
        instance.check_machine(machine)
        if assignment[user] != -1:
            raise DomainError(f"assignment file {path}: user {user} listed twice")
        assignment[user] = machine
    if -1 in assignment:
        raise DomainError(
            f"assignment file {path}: user {assignment.index(-1)} missing"
        )
    return State.from_assignment(instance, assignment)


# --- trace CSV ---------------------------------------------------------------


def trace_row(event: TraceEvent) -> str:
    mover = str(event.mover) if event.mover_b is None else f"{event.mover}+{event.mover_b}"
    return ",".join(
        (
            str(event.step),
            mover,
            str(event.source),
            str(event.target),
            fmt_cost(event.cost_before),
            fmt_cost(event.cost_after),
            fmt_cost(event.potential),
            fmt_cost(event.makespan),
            event.move_type,
        )
    )


def write_trace_csv(events, path) -> None:
    lines = [TRACE_HEADER]
    lines += [trace_row(event) for event in events]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- experiment outputs ------------------------------------------------------


def write_experiment_csv(config, rows, path) -> None:
    lines = [EXPERIMENT_HEADER]
    coalition = config.coalition or ""
    for row in rows:
        lines.append(
            ",".join(
                (
                    str(row.n),
                    config.policy,
                    config.priority,
                    coalition,
                    config.dist,
                    fmt_mean(row.mean_steps),
                    str(row.max_steps_observed),
                    fmt_mean(row.mean_flips),
                    str(row.capped_runs),
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_summary(classes: dict, path) -> None:
    """`classes` maps a series label to a GrowthClass (or an explanation str)."""
    lines = []
    for label, growth in classes.items():
        if isinstance(growth, str):
            lines.append(f"{label}: class=inconclusive ({growth})")
        else:
            lines.append(
                f"{label}: class={growth.tag} fit={growth.fit:.6g} "
                f"r2={growth.r_squared:.6g}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
