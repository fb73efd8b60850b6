import itertools

import pytest
from hypothesis import given, settings

from engagesim.model import RelationState as S
from engagesim.relations import RELATION_TABLE, StateMatrix, compute_state_matrix, is_engaged, pair_state

from conftest import focus_maps

FIG4 = {"alex": "carla", "bob": "carla", "carla": "bob"}


def test_relation_table_rows():
    assert pair_state(False, False) == (S.PASSIVE, S.PASSIVE)
    assert pair_state(False, True) == (S.REQUESTED, S.BUILDUP)
    assert pair_state(True, False) == (S.BUILDUP, S.REQUESTED)
    assert pair_state(True, True) == (S.ENGAGED, S.ENGAGED)
    assert len(RELATION_TABLE) == 4


def test_fig4_state_matrix():
    m = compute_state_matrix(FIG4)
    assert m["bob", "carla"] is S.ENGAGED and m["carla", "bob"] is S.ENGAGED
    assert m["alex", "carla"] is S.BUILDUP
    assert m["carla", "alex"] is S.REQUESTED
    assert m["alex", "bob"] is S.PASSIVE and m["bob", "alex"] is S.PASSIVE


def test_all_self_focused_is_all_passive():
    m = compute_state_matrix({"a": "a", "b": "b", "c": "c"})
    assert set(m.states.values()) == {S.PASSIVE}
    assert m.nonpassive() == {}


def test_listener_pair_example():
    m = compute_state_matrix({"A": "B", "B": "A", "C": "A"})
    assert m["A", "B"] is S.ENGAGED
    assert (m["C", "A"], m["A", "C"]) == (S.BUILDUP, S.REQUESTED)
    assert m["C", "B"] is S.PASSIVE


def test_is_engaged_on_fig4():
    assert is_engaged("bob", FIG4)
    assert not is_engaged("alex", FIG4)
    assert not is_engaged("x", {"x": "x"})


def test_matrix_rejects_diagonal_and_strangers():
    m = compute_state_matrix({"a": "b", "b": "a"})
    with pytest.raises(KeyError):
        m["a", "a"]
    with pytest.raises(KeyError):
        m["a", "z"]
    assert ("a", "z") not in m and ("a", "b") in m
    assert len(m) == 2 and sorted(m) == [("a", "b"), ("b", "a")]


def test_matrix_equality_ignores_construction_order():
    a = StateMatrix(("x", "y"), {("x", "y"): S.BUILDUP, ("y", "x"): S.REQUESTED})
    b = StateMatrix(("y", "x"), {("y", "x"): S.REQUESTED, ("x", "y"): S.BUILDUP, ("x", "x"): S.PASSIVE})
    assert a == b


def test_focus_outside_the_map_counts_as_nobody():
    m = compute_state_matrix({"a": "ghost", "b": "b"})
    assert m.nonpassive() == {}


@settings(max_examples=300)
@given(focus_maps(1, 10))
def test_three_engagement_formulations_agree(fm):
    m = compute_state_matrix(fm)
    for e in fm:
        reciprocal = any(fm[e] == b and fm[b] == e for b in fm if b != e)
        via_matrix = any(m[e, b] is S.ENGAGED for b in fm if b != e)
        assert is_engaged(e, fm) == reciprocal == via_matrix


@settings(max_examples=300)
@given(focus_maps(1, 10))
def test_matrix_structure(fm):
    m = compute_state_matrix(fm)
    for a, b in itertools.permutations(fm, 2):
        assert (m[a, b] is S.ENGAGED) == (m[b, a] is S.ENGAGED)
        assert m[a, b] == pair_state(fm[a] == b, fm[b] == a)[0]
    for e in fm:
        active = [b for b in fm if b != e and m[e, b] in (S.BUILDUP, S.ENGAGED)]
        assert len(active) == (1 if fm[e] != e else 0)
    assert len(m.nonpassive()) <= 2 * len(fm)
