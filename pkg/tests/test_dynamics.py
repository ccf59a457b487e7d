import pytest
from hypothesis import given, settings, strategies as st

from kpsim.dynamics import (
    PriorityAlgorithm,
    SelectionHistory,
    improving_users,
    potential,
    raw_loads,
    run_to_ne,
    select_user,
    step,
    step_view,
)
from kpsim.errors import DomainError
from kpsim.model import Instance, State, best_response, is_pure_ne, validate_state

POLICIES = ("makespan", "sjf", "ljf", "fifo")


def identical(weights, m):
    return Instance("identical", m, tuple(weights))


# --- priority algorithm ------------------------------------------------------


def test_priority_algorithm_validation():
    PriorityAlgorithm("maw")
    PriorityAlgorithm("random", seed=1)
    with pytest.raises(DomainError):
        PriorityAlgorithm("best")
    with pytest.raises(DomainError):
        PriorityAlgorithm("random")
    with pytest.raises(DomainError):
        PriorityAlgorithm("maw", seed=3)


def test_select_user_maw_miw():
    weights = {0: 5, 1: 2, 2: 9}
    candidates = [0, 1, 2]
    assert select_user(candidates, weights, PriorityAlgorithm("maw")) == 2
    assert select_user(candidates, weights, PriorityAlgorithm("miw")) == 1


def test_select_user_ties_break_to_lowest_id():
    weights = {0: 5, 1: 5, 2: 1, 3: 1}
    assert select_user([0, 1, 2, 3], weights, PriorityAlgorithm("maw")) == 0
    assert select_user([0, 1, 2, 3], weights, PriorityAlgorithm("miw")) == 2


def test_select_user_fifo_is_least_recently_selected():
    history = SelectionHistory()
    algo = PriorityAlgorithm("fifo")
    weights = {1: 1, 3: 1, 4: 1}
    # never-selected rank by ascending id
    assert select_user([3, 1], weights, algo, history) == 1
    history.record(1)
    assert select_user([3, 1], weights, algo, history) == 3
    history.record(3)
    # 1 is now the least recently selected
    assert select_user([3, 1], weights, algo, history) == 1
    history.record(1)
    assert select_user([1, 3, 4], weights, algo, history) == 4


def test_select_user_empty_candidates():
    with pytest.raises(DomainError):
        select_user([], {}, PriorityAlgorithm("maw"))


def test_select_user_random_is_seed_deterministic():
    from kpsim.rng import SplitMix64

    picks1 = []
    rng = SplitMix64(11)
    for _ in range(10):
        picks1.append(select_user([2, 5, 7], {}, PriorityAlgorithm("random", seed=11), rng=rng))
    rng = SplitMix64(11)
    picks2 = [
        select_user([2, 5, 7], {}, PriorityAlgorithm("random", seed=11), rng=rng)
        for _ in range(10)
    ]
    assert picks1 == picks2
    assert set(picks1) <= {2, 5, 7}


# --- improving_users / step --------------------------------------------------


def test_improving_users_empty_at_ne():
    inst = identical([3, 2, 3], 2)
    state = State.from_assignment(inst, [0, 0, 1])
    assert improving_users(inst, state, "makespan") == []


def test_improving_users_both_when_stacked():
    inst = identical([1, 1], 2)
    state = State.from_assignment(inst, [0, 0])
    assert improving_users(inst, state, "makespan") == [0, 1]


def test_step_returns_none_at_ne():
    inst = identical([3], 2)
    state = State.from_assignment(inst, [1])
    assert step(inst, state, "makespan", PriorityAlgorithm("maw")) is None


def test_step_example_maw_makespan():
    inst = identical([3, 3, 2], 2)
    state = State.concentrated(inst)
    event = step(inst, state, "makespan", PriorityAlgorithm("maw"))
    assert (event.mover, event.source, event.target) == (0, 0, 1)
    assert (event.cost_before, event.cost_after) == (8, 3)
    assert event.makespan == 5
    validate_state(inst, state)


def test_run_to_ne_zero_steps_on_ne_input():
    inst = identical([3, 2, 3], 2)
    state = State.from_assignment(inst, [0, 0, 1])
    result = run_to_ne(inst, state, "makespan", PriorityAlgorithm("maw"))
    assert result.steps == 0 and result.reached_ne
    assert result.final_state.assignment == [0, 0, 1]


def test_run_to_ne_does_not_mutate_input():
    inst = identical([1, 1], 2)
    state = State.from_assignment(inst, [0, 0])
    run_to_ne(inst, state, "makespan", PriorityAlgorithm("maw"))
    assert state.assignment == [0, 0]


def test_run_to_ne_cap_exhaustion_is_flagged():
    inst = identical([3, 3, 2, 2, 1], 3)
    state = State.concentrated(inst)
    result = run_to_ne(inst, state, "makespan", PriorityAlgorithm("maw"), max_steps=1)
    assert result.steps == 1 and not result.reached_ne


def test_run_to_ne_matches_single_stepping():
    inst = identical([4, 2, 7, 1, 3, 3], 3)
    for policy in POLICIES:
        for tag in ("maw", "miw", "fifo", "random"):
            algo = PriorityAlgorithm(tag, seed=5) if tag == "random" else PriorityAlgorithm(tag)
            full = run_to_ne(inst, State.concentrated(inst), policy, algo)

            from kpsim.rng import SplitMix64

            state = State.concentrated(inst)
            history = SelectionHistory()
            rng = SplitMix64(5) if tag == "random" else None
            events = []
            while True:
                event = step(inst, state, policy, algo, history, rng, step_index=len(events))
                if event is None:
                    break
                events.append(event)
            assert [e.mover for e in events] == [e.mover for e in full.trace]
            assert [e.potential for e in events] == [e.potential for e in full.trace]
            assert [e.makespan for e in events] == [e.makespan for e in full.trace]
            assert state.assignment == full.final_state.assignment


# --- potential ----------------------------------------------------------------


def test_potential_single_user():
    inst = identical([5], 1)
    assert potential(inst, State.concentrated(inst), "makespan") == 5


def test_potential_fifo_prefix_sums():
    inst = identical([7, 4], 1)
    state = State.concentrated(inst)
    assert potential(inst, state, "fifo") == 7 + 11


def test_initial_fifo_potential_within_quadratic_bound():
    from kpsim.rng import SplitMix64

    rng = SplitMix64(3)
    for _ in range(50):
        n = 2 + rng.next_below(40)
        weights = [1 + rng.next_below(50) for _ in range(n)]
        inst = identical(weights, 2)
        state = State.concentrated(inst)
        w_max = max(weights)
        assert potential(inst, state, "fifo") <= (n * n + n) // 2 * w_max


# --- trace invariants ---------------------------------------------------------


def run_all(instance, policy, tag, seed=9):
    algo = PriorityAlgorithm(tag, seed=seed) if tag == "random" else PriorityAlgorithm(tag)
    return run_to_ne(instance, State.concentrated(instance), policy, algo)


def test_trace_events_strictly_improve_and_index_increases():
    inst = identical([9, 4, 4, 2, 1, 7], 3)
    for policy in POLICIES:
        result = run_all(inst, policy, "random")
        assert result.reached_ne
        assert [e.step for e in result.trace] == list(range(result.steps))
        for event in result.trace:
            assert event.cost_after < event.cost_before


def test_reached_ne_is_verified_by_predicate():
    inst = identical([9, 4, 4, 2, 1, 7], 3)
    for policy in POLICIES:
        result = run_all(inst, policy, "miw")
        assert is_pure_ne(inst, result.final_state, policy)
        validate_state(inst, result.final_state)


def test_fifo_potential_drops_by_at_least_one_each_step():
    inst = identical([5, 3, 8, 1, 1, 6, 2], 3)
    result = run_all(inst, "fifo", "random")
    values = [potential(inst, State.concentrated(inst), "fifo")] + [
        e.potential for e in result.trace
    ]
    assert all(b <= a - 1 for a, b in zip(values, values[1:]))


def test_fifo_no_user_cost_increases_across_steps():
    from kpsim.dynamics import step as one_step
    from kpsim.rng import SplitMix64

    inst = identical([5, 3, 8, 1, 1, 6, 2], 3)
    state = State.concentrated(inst)
    algo = PriorityAlgorithm("random", seed=2)
    rng = SplitMix64(2)
    while True:
        costs_before, _ = step_view(inst, state, "fifo")
        if one_step(inst, state, "fifo", algo, rng=rng) is None:
            break
        costs_after, _ = step_view(inst, state, "fifo")
        assert all(after <= before for before, after in zip(costs_before, costs_after))


def test_fifo_movers_never_move_twice_identical():
    inst = identical([5, 3, 8, 1, 1, 6, 2, 9, 4], 4)
    for tag in ("maw", "miw", "fifo", "random"):
        result = run_all(inst, "fifo", tag)
        movers = [e.mover for e in result.trace]
        assert len(movers) == len(set(movers))
        assert result.steps <= inst.n - 1


def test_makespan_never_increases_under_makespan_policy():
    inst = identical([5, 3, 8, 1, 1, 6, 2], 3)
    result = run_all(inst, "makespan", "random")
    values = [max(raw_loads(inst, State.concentrated(inst)))] + [
        e.makespan for e in result.trace
    ]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_stabilizing_pairs_select_each_user_at_most_once():
    inst = identical([5, 3, 8, 1, 1, 6, 2, 7], 4)
    for tag, policy in (("miw", "sjf"), ("maw", "ljf")):
        result = run_all(inst, policy, tag)
        movers = [e.mover for e in result.trace]
        assert len(movers) == len(set(movers))
        assert result.steps <= inst.n


def test_identical_seeds_give_identical_traces():
    inst = identical([5, 3, 8, 1, 1, 6, 2], 3)
    a = run_all(inst, "makespan", "random", seed=123)
    b = run_all(inst, "makespan", "random", seed=123)
    assert a.trace == b.trace
    c = run_all(inst, "makespan", "random", seed=124)
    assert a.trace != c.trace or a.final_state.assignment == c.final_state.assignment


# --- engine agrees with the per-user reference --------------------------------

engine_cases = st.tuples(
    st.integers(2, 6),
    st.integers(1, 4),
    st.sampled_from(POLICIES),
    st.randoms(use_true_random=False),
)


@settings(max_examples=120, deadline=None)
@given(engine_cases)
def test_step_view_matches_best_response_reference(case):
    n, m, policy, pyrandom = case
    weights = [pyrandom.randint(1, 12) for _ in range(n)]
    inst = identical(weights, m)
    state = State.from_assignment(inst, [pyrandom.randrange(m) for _ in range(n)])
    # shuffle queues to exercise fifo arrival orders
    for _ in range(n):
        user = pyrandom.randrange(n)
        state.migrate(user, pyrandom.randrange(m))
    _assert_view_matches_reference(inst, state, policy)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(2, 5),
    st.integers(2, 3),
    st.sampled_from(POLICIES),
    st.randoms(use_true_random=False),
)
def test_step_view_matches_reference_related_unrelated(n, m, policy, pyrandom):
    speeds = tuple(pyrandom.randint(1, 4) for _ in range(m))
    weights = tuple(pyrandom.randint(1, 12) for _ in range(n))
    related = Instance("related", m, weights, speeds)
    matrix = tuple(tuple(pyrandom.randint(1, 12) for _ in range(m)) for _ in range(n))
    unrelated = Instance("unrelated", m, cost_matrix=matrix)
    for inst in (related, unrelated):
        state = State.from_assignment(inst, [pyrandom.randrange(m) for _ in range(n)])
        for _ in range(n):
            state.migrate(pyrandom.randrange(n), pyrandom.randrange(m))
        _assert_view_matches_reference(inst, state, policy)


def _assert_view_matches_reference(inst, state, policy):
    from kpsim.model import user_cost

    costs, moves = step_view(inst, state, policy)
    by_user = {mv.user: mv for mv in moves}
    for user in range(inst.n):
        current = user_cost(inst, state, user, state.assignment[user], policy)
        assert costs[user] == current
        reference = best_response(inst, state, user, policy)
        if reference is None:
            assert user not in by_user
        else:
            assert user in by_user
            assert (by_user[user].target, by_user[user].new_cost) == reference


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(2, 4), st.randoms(use_true_random=False))
def test_fast_run_matches_stepping_on_load_policies(n, m, pyrandom):
    weights = [pyrandom.randint(1, 9) for _ in range(n)]
    inst = identical(weights, m)
    for policy in ("makespan", "fifo"):
        full = run_to_ne(inst, State.concentrated(inst), policy, PriorityAlgorithm("miw"))
        state = State.concentrated(inst)
        events = []
        while True:
            event = step(inst, state, policy, PriorityAlgorithm("miw"), step_index=len(events))
            if event is None:
                break
            events.append(event)
        assert [(e.mover, e.target, e.potential, e.makespan) for e in events] == [
            (e.mover, e.target, e.potential, e.makespan) for e in full.trace
        ]
