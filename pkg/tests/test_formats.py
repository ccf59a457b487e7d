from fractions import Fraction

import pytest

from kpsim.dynamics import PriorityAlgorithm, TraceEvent, run_to_ne
from kpsim.errors import DomainError
from kpsim.formats import (
    ASSIGNMENT_HEADER,
    TRACE_HEADER,
    dump_instance,
    fmt_cost,
    instance_from_dict,
    instance_to_dict,
    load_assignment_csv,
    load_instance,
    trace_row,
    write_assignment_csv,
    write_trace_csv,
)
from kpsim.model import Instance, State


def test_fmt_cost_integers_and_fractions():
    assert fmt_cost(5) == "5"
    assert fmt_cost(Fraction(7, 2)) == "7/2"
    assert fmt_cost(Fraction(6, 2)) == "3"


# --- instance JSON ---------------------------------------------------------------


def test_instance_json_round_trip(tmp_path):
    cases = [
        Instance("identical", 3, (4, 1, 2)),
        Instance("related", 2, (4, 1), (2, 3)),
        Instance("unrelated", 2, cost_matrix=((1, 2), (3, 4))),
    ]
    for instance in cases:
        path = tmp_path / "inst.json"
        dump_instance(instance, path)
        assert load_instance(path) == instance


def test_instance_json_rejects_extra_fields():
    with pytest.raises(DomainError) as err:
        instance_from_dict({"model": "identical", "m": 2, "weights": [1], "speeds": [1]})
    assert "speeds" in str(err.value)
    with pytest.raises(DomainError) as err:
        instance_from_dict({"model": "related", "weights": [1], "speeds": [1], "m": 1})
    assert "'m'" in str(err.value)


def test_instance_json_rejects_missing_fields_and_bad_model():
    with pytest.raises(DomainError):
        instance_from_dict({"model": "identical", "weights": [1]})
    with pytest.raises(DomainError):
        instance_from_dict({"model": "grid", "weights": [1]})


def test_identical_dict_shape():
    data = instance_to_dict(Instance("identical", 2, (3, 1)))
    assert data == {"model": "identical", "m": 2, "weights": [3, 1]}


def test_bad_json_reported(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(DomainError):
        load_instance(path)


# --- assignment CSV --------------------------------------------------------------


def test_assignment_round_trip(tmp_path):
    inst = Instance("identical", 3, (4, 1, 2, 9))
    state = State.from_assignment(inst, [2, 0, 2, 1])
    path = tmp_path / "assignment.csv"
    write_assignment_csv(state, path)
    text = path.read_text()
    assert text.splitlines()[0] == ASSIGNMENT_HEADER
    loaded = load_assignment_csv(path, inst)
    assert loaded.assignment == [2, 0, 2, 1]


def test_assignment_validation(tmp_path):
    inst = Instance("identical", 2, (4, 1))
    path = tmp_path / "assignment.csv"
    path.write_text("user,machine\n0,0\n")
    with pytest.raises(DomainError):
        load_assignment_csv(path, inst)  # user 1 missing
    path.write_text("user,machine\n0,0\n0,1\n1,0\n")
    with pytest.raises(DomainError):
        load_assignment_csv(path, inst)  # duplicate
    path.write_text("usr,machine\n0,0\n1,1\n")
    with pytest.raises(DomainError):
        load_assignment_csv(path, inst)  # header


# --- trace CSV -------------------------------------------------------------------


def test_trace_header_and_rows(tmp_path):
    inst = Instance("identical", 2, (3, 3, 2))
    result = run_to_ne(inst, State.concentrated(inst), "makespan", PriorityAlgorithm("maw"))
    path = tmp_path / "trace.csv"
    write_trace_csv(result.trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == TRACE_HEADER
    assert lines[1] == "0,0,0,1,8,3,13,5,single"


def test_flip_rows_encode_pair():
    event = TraceEvent(
        step=4, mover=1, source=0, target=2, cost_before=9, cost_after=7,
        potential=30, makespan=9, move_type="flip", mover_b=6,
    )
    assert trace_row(event) == "4,1+6,0,2,9,7,30,9,flip"


def test_trace_row_fraction_formatting():
    event = TraceEvent(
        step=0, mover=2, source=1, target=0, cost_before=Fraction(9, 4),
        cost_after=Fraction(3, 2), potential=Fraction(21, 4), makespan=Fraction(3, 1),
    )
    assert trace_row(event) == "0,2,1,0,9/4,3/2,21/4,3,single"
