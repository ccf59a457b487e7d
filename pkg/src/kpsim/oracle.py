"""Brute-force ground truth for small instances.

Everything here recomputes costs from first principles (explicit service
orders, exhaustive deviation checks) so it can vouch for the main model and
dynamics code rather than reuse it. State space: for queue-independent
policies a node is the assignment tuple; under FIFO a node also carries the
queue contents, explored only as reachable from canonical (id-ordered)
queue states.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetError, DomainError
from .model import State, best_response

DEFAULT_BUDGET = 10**6


def enumerate_states(n: int, m: int, budget: int = DEFAULT_BUDGET):
    """All m^n assignments, lexicographic, user 0 most significant."""
    if n < 1 or m < 1:
        raise DomainError("need n >= 1 and m >= 1")
    if m**n > budget:
        raise BudgetError(f"state space {m}^{n} exceeds budget {budget}")
    return itertools.product(range(m), repeat=n)


def service_cost(instance, assignment, user, machine, policy):
    """Cost of `user` on `machine` computed by laying out the full service order.

    Queues are the canonical ascending-id order; a user not currently on the
    machine joins at the tail (FIFO) or in its sorted slot (SJF/LJF).
    """
    residents = [k for k in range(instance.n) if assignment[k] == machine and k != user]
    own_machine = assignment[user] == machine
    if policy == "makespan":
        order = residents + [user]
    elif policy == "fifo":
        order = sorted(residents + [user]) if own_machine else residents + [user]
    elif policy == "sjf":
        order = sorted(residents + [user], key=lambda k: (instance.weight_on(k, machine), k))
    elif policy == "ljf":
        order = sorted(residents + [user], key=lambda k: (-instance.weight_on(k, machine), k))
    else:
        raise DomainError(f"unknown cost policy {policy!r}")
    total = 0
    for k in order:
        total += instance.weight_on(k, machine)
        if k == user and policy != "makespan":
            break
    if instance.model == "related":
        return Fraction(total, instance.speeds[machine])
    return total


def has_improving_deviation(instance, assignment, user, policy) -> bool:
    current = service_cost(instance, assignment, user, assignment[user], policy)
    return any(
        service_cost(instance, assignment, user, j, policy) < current
        for j in range(instance.m)
        if j != assignment[user]
    )


def verify_ne_oracle(instance, policy, budget: int = DEFAULT_BUDGET):
    """Assignments where no unilateral deviation helps, by exhaustive check."""
    equilibria = []
    for assignment in enumerate_states(instance.n, instance.m, budget):
        if not any(
            has_improving_deviation(instance, assignment, user, policy)
            for user in range(instance.n)
        ):
            equilibria.append(assignment)
    return equilibria


# --- best-response configuration graph --------------------------------------


@dataclass
class ConfigurationGraph:
    """Directed graph of best-response moves over explored states.

    Node keys are assignment tuples, or (assignment, queues) pairs under
    FIFO. Sinks (no outgoing edges) are exactly the pure NE states.
    """

    policy: str
    nodes: list
    edges: dict  # node -> list of (mover, target, successor node)


@dataclass
class PathSearchResult:
    cyclic: bool
    length: int | None
    path: list | None  # witness node sequence, start to sink


def _fifo_node(state: State):
    return tuple(state.assignment), tuple(tuple(q) for q in state.queues)


def _state_from_fifo_node(instance, node) -> State:
    assignment, queues = node
    stamps = [0] * instance.n
    tick = 0
    mutable_queues = [list(q) for q in queues]
    for queue in mutable_queues:
        for user in queue:
            stamps[user] = tick
            tick += 1
    return State(list(assignment), mutable_queues, stamps, tick)


def _successors(instance, policy, node):
    if policy == "fifo":
        state = _state_from_fifo_node(instance, node)
    else:
        state = State.from_assignment(instance, list(node))
    result = []
    for user in range(instance.n):
        move = best_response(instance, state, user, policy)
        if move is None:
            continue
        target, _ = move
        following = state.copy()
        following.migrate(user, target)
        if policy == "fifo":
            result.append((user, target, _fifo_node(following)))
        else:
            result.append((user, target, tuple(following.assignment)))
    return result


def build_graph(instance, policy, budget: int = DEFAULT_BUDGET) -> ConfigurationGraph:
    """Explore best-response moves from every start state.

    Non-FIFO policies enumerate all m^n assignments up front. FIFO starts
    from every assignment with canonical queues and explores the reachable
    queue states, since costs depend on arrival order.
    """
    if policy == "fifo":
        starts = [
            _fifo_node(State.from_assignment(instance, list(assignment)))
            for assignment in enumerate_states(instance.n, instance.m, budget)
        ]
        edges: dict = {}
        frontier = list(starts)
        while frontier:
            node = frontier.pop()
            if node in edges:
                continue
            if len(edges) >= budget:
                raise BudgetError(f"reachable queue states exceed budget {budget}")
            succ = _successors(instance, policy, node)
            edges[node] = succ
            frontier.extend(s for _, _, s in succ)
        return ConfigurationGraph(policy, list(edges), edges)
    nodes = list(enumerate_states(instance.n, instance.m, budget))
    edges = {node: _successors(instance, policy, node) for node in nodes}
    return ConfigurationGraph(policy, nodes, edges)


def longest_improvement_path(
    instance,
    policy,
    budget: int = DEFAULT_BUDGET,
    graph: ConfigurationGraph | None = None,
) -> PathSearchResult:
    """Longest best-response path to a sink, over all start states.

    The length upper-bounds the step count of any priority algorithm on the
    instance. A reachable cycle is reported instead of a length.
    """
    if graph is None:
        graph = build_graph(instance, policy, budget)
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict = {}
    longest: dict = {}
    best_succ: dict = {}
    for start in graph.nodes:
        if color.get(start) == BLACK:
            continue
        color[start] = GRAY
        stack = [(start, iter(graph.edges[start]))]
        while stack:
            node, edge_iter = stack[-1]
            descended = False
            for _, _, succ in edge_iter:
                c = color.get(succ, WHITE)
                if c == GRAY:
                    return PathSearchResult(cyclic=True, length=None, path=None)
                if c == WHITE:
                    color[succ] = GRAY
                    stack.append((succ, iter(graph.edges[succ])))
                    descended = True
                    break
            if descended:
                continue
            stack.pop()
            length = 0
            choice = None
            for _, _, succ in graph.edges[node]:
                if longest[succ] + 1 > length:
                    length = longest[succ] + 1
                    choice = succ
            longest[node] = length
            best_succ[node] = choice
            color[node] = BLACK
    start = max(graph.nodes, key=lambda node: longest[node])
    path = [start]
    while best_succ[path[-1]] is not None:
        path.append(best_succ[path[-1]])
    return PathSearchResult(cyclic=False, length=longest[start], path=path)
