"""Core game types and cost policies for selfish load balancing.

An instance is n weighted users choosing among m machines (identical,
related, or unrelated). Each machine charges its residents according to a
cost policy: the full load (makespan) or a completion time under
shortest-first, longest-first, or arrival-order service. All arithmetic is
exact: integer weights, `Fraction` costs on related machines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .errors import CostOverflowError, DomainError

MODELS = ("identical", "related", "unrelated")
POLICIES = ("makespan", "sjf", "ljf", "fifo")

WEIGHT_MAX = (1 << 128) - 1

Cost = Union[int, Fraction]


def check_weight(value: int, what: str = "weight") -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise DomainError(f"{what} must be an integer, got {value!r}")
    if value < 1:
        raise DomainError(f"{what} must be >= 1, got {value}")
    if value > WEIGHT_MAX:
        raise DomainError(f"{what} exceeds 128 bits: {value}")
    return value


def check_cost(value: int) -> int:
    """Guard a cost/potential accumulator against exceeding 128 bits."""
    if value > WEIGHT_MAX:
        raise CostOverflowError(f"cost accumulator exceeds 128 bits: {value}")
    return value


@dataclass(frozen=True)
class Instance:
    """A load-balancing game: machine model plus weights/speeds/cost matrix.

    Exactly one of `weights` (identical/related) and `cost_matrix`
    (unrelated) is populated; `speeds` only for related machines. Speeds are
    positive integers (scale them to a common denominator beforehand if they
    are rational), which keeps every cost an exact `Fraction`.
    """

    model: str
    m: int
    weights: tuple[int, ...] = ()
    speeds: tuple[int, ...] = ()
    cost_matrix: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.model not in MODELS:
            raise DomainError(f"unknown machine model {self.model!r}")
        if self.m < 1:
            raise DomainError(f"m must be >= 1, got {self.m}")
        object.__setattr__(self, "weights", tuple(self.weights))
        object.__setattr__(self, "speeds", tuple(self.speeds))
        object.__setattr__(
            self, "cost_matrix", tuple(tuple(row) for row in self.cost_matrix)
        )
        if self.model == "unrelated":
            if self.weights or self.speeds:
                raise DomainError("unrelated instances take a cost matrix only")
            if not self.cost_matrix:
                raise DomainError("unrelated instances need a cost matrix")
            for i, row in enumerate(self.cost_matrix):
                if len(row) != self.m:
                    raise DomainError(
                        f"cost matrix row {i} has {len(row)} entries, expected {self.m}"
                    )
                for entry in row:
                    check_weight(entry, f"cost_matrix[{i}]")
        else:
            if self.cost_matrix:
                raise DomainError(f"{self.model} instances do not take a cost matrix")
            if not self.weights:
                raise DomainError(f"{self.model} instances need weights")
            for w in self.weights:
                check_weight(w)
            if self.model == "related":
                if len(self.speeds) != self.m:
                    raise DomainError(
                        f"expected {self.m} speeds, got {len(self.speeds)}"
                    )
                for s in self.speeds:
                    if not isinstance(s, int) or s < 1:
                        raise DomainError(f"speeds must be positive integers, got {s!r}")
            elif self.speeds:
                raise DomainError("identical instances do not take speeds")

    @property
    def n(self) -> int:
        return len(self.cost_matrix) if self.model == "unrelated" else len(self.weights)

    def weight_on(self, user: int, machine: int) -> int:
        """Weight user contributes to (and is charged on) `machine`."""
        if self.model == "unrelated":
            return self.cost_matrix[user][machine]
        return self.weights[user]

    def check_user(self, user: int) -> int:
        if not 0 <= user < self.n:
            raise DomainError(f"unknown user id {user}")
        return user

    def check_machine(self, machine: int) -> int:
        if not 0 <= machine < self.m:
            raise DomainError(f"unknown machine id {machine}")
        return machine


@dataclass
class State:
    """Assignment of users to machines plus per-machine arrival queues.

    `queues[j]` lists the users on machine j oldest-first; `stamps[i]` is
    the arrival stamp user i received at its last placement, strictly
    increasing along every queue.
    """

    assignment: list[int]
    queues: list[list[int]]
    stamps: list[int] = field(default_factory=list)
    arrival_counter: int = 0

    @classmethod
    def concentrated(cls, instance: Instance) -> "State":
        """All users on machine 0, queued in id order."""
        n = instance.n
        queues = [[] for _ in range(instance.m)]
        queues[0] = list(range(n))
        return cls([0] * n, queues, list(range(n)), n - 1 if n else 0)

    @classmethod
    def from_assignment(cls, instance: Instance, assignment) -> "State":
        """State with the given assignment and canonical (id-ordered) queues."""
        assignment = list(assignment)
        if len(assignment) != instance.n:
            raise DomainError(
                f"assignment covers {len(assignment)} users, expected {instance.n}"
            )
        queues = [[] for _ in range(instance.m)]
        for user, machine in enumerate(assignment):
            instance.check_machine(machine)
            queues[machine].append(user)
        n = instance.n
        return cls(assignment, queues, list(range(n)), n - 1 if n else 0)

    @classmethod
    def random(cls, instance: Instance, rng) -> "State":
        """Uniform random assignment, canonical queues."""
        return cls.from_assignment(
            instance, [rng.next_below(instance.m) for _ in range(instance.n)]
        )

    def copy(self) -> "State":
        return State(
            list(self.assignment),
            [list(q) for q in self.queues],
            list(self.stamps),
            self.arrival_counter,
        )

    def migrate(self, user: int, target: int) -> None:
        """Move `user` to the tail of `target`'s queue with a fresh stamp."""
        source = self.assignment[user]
        self.queues[source].remove(user)
        self.queues[target].append(user)
        self.assignment[user] = target
        self.arrival_counter += 1
        self.stamps[user] = self.arrival_counter


def validate_state(instance: Instance, state: State) -> None:
    """Raise DomainError unless the queues partition the users consistently."""
    if len(state.assignment) != instance.n:
        raise DomainError("assignment length does not match instance")
    if len(state.queues) != instance.m:
        raise DomainError("queue count does not match machine count")
    seen = set()
    for machine, queue in enumerate(state.queues):
        last_stamp = -1
        for user in queue:
            instance.check_user(user)
            if user in seen:
                raise DomainError(f"user {user} queued twice")
            seen.add(user)
            if state.assignment[user] != machine:
                raise DomainError(
                    f"user {user} queued on machine {machine} but assigned to "
                    f"{state.assignment[user]}"
                )
            if state.stamps and state.stamps[user] <= last_stamp:
                raise DomainError(f"queue {machine} is out of arrival order")
            if state.stamps:
                last_stamp = state.stamps[user]
    if len(seen) != instance.n:
        raise DomainError("queues do not cover every user")


def raw_load(instance: Instance, state: State, machine: int) -> int:
    """Unscaled total weight on a machine (no speed division)."""
    return check_cost(
        sum(instance.weight_on(k, machine) for k in state.queues[machine])
    )


def machine_load(instance: Instance, state: State, machine: int) -> Cost:
    """Total load of a machine: resident weight sum, speed-scaled if related."""
    instance.check_machine(machine)
    load = raw_load(instance, state, machine)
    if instance.model == "related":
        return Fraction(load, instance.speeds[machine])
    return load


def _precedes(instance, policy, machine, k, user) -> bool:
    """Whether resident k is served before `user` on `machine` under policy."""
    wk = instance.weight_on(k, machine)
    wu = instance.weight_on(user, machine)
    if policy == "sjf":
        return (wk, k) < (wu, user)
    return (-wk, k) < (-wu, user)  # ljf


def user_cost(
    instance: Instance,
    state: State,
    user: int,
    machine: int,
    policy: str,
) -> Cost:
    """Cost charged to `user` on `machine` under `policy`.

    If the user is not currently on `machine` the cost is hypothetical: the
    user is taken to join the tail of the queue (FIFO) or its slot in the
    service order (SJF/LJF). Residents of the user's own machine other than
    the user itself never include it twice.
    """
    instance.check_user(user)
    instance.check_machine(machine)
    if policy not in POLICIES:
        raise DomainError(f"unknown cost policy {policy!r}")

    residents = [k for k in state.queues[machine] if k != user]
    own = instance.weight_on(user, machine)

    if policy == "makespan":
        total = own + sum(instance.weight_on(k, machine) for k in residents)
    elif policy == "fifo":
        if state.assignment[user] == machine:
            ahead = state.queues[machine][: state.queues[machine].index(user)]
        else:
            ahead = residents  # hypothetical join at the tail
        total = own + sum(instance.weight_on(k, machine) for k in ahead)
    else:  # sjf / ljf completion time
        total = own + sum(
            instance.weight_on(k, machine)
            for k in residents
            if _precedes(instance, policy, machine, k, user)
        )
    check_cost(total)
    if instance.model == "related":
        return Fraction(total, instance.speeds[machine])
    return total


def best_response(
    instance: Instance,
    state: State,
    user: int,
    policy: str,
):
    """Best strictly-improving machine for `user`, or None.

    Scans machines in index order, so ties among equally good targets go to
    the lowest index; a move is returned only if it beats the current cost
    strictly.
    """
    instance.check_user(user)
    current = state.assignment[user]
    current_cost = user_cost(instance, state, user, current, policy)
    best = None
    best_cost = current_cost
    for j in range(instance.m):
        if j == current:
            continue
        cost = user_cost(instance, state, user, j, policy)
        if cost < best_cost:
            best, best_cost = j, cost
    if best is None:
        return None
    return best, best_cost


def is_pure_ne(instance: Instance, state: State, policy: str) -> bool:
    """True iff no user has a strictly improving unilateral move."""
    return all(
        best_response(instance, state, user, policy) is None
        for user in range(instance.n)
    )
