import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from engagesim.groups import (
    FFormation,
    Group,
    Region,
    UnionFind,
    classify_position,
    compute_f_formation,
    detect_groups,
)
from engagesim.model import RelationState
from engagesim.relations import compute_state_matrix

from conftest import focus_maps, person, world


def brute_force_components(fm):
    """Flood fill over the undirected external-focus edges."""
    adj = {e: set() for e in fm}
    for a, f in fm.items():
        if f != a and f in fm:
            adj[a].add(f)
            adj[f].add(a)
    seen, comps = set(), []
    for start in sorted(fm):
        if start in seen or not adj[start]:
            continue
        stack, comp = [start], set()
        while stack:
            x = stack.pop()
            if x in comp:
                continue
            comp.add(x)
            stack.extend(adj[x] - comp)
        seen |= comp
        comps.append(tuple(sorted(comp)))
    return sorted(comps)


def members(groups):
    return sorted(g.members for g in groups)


def test_reciprocal_pair_with_loner():
    gs = detect_groups({"A": "B", "B": "A", "C": "C"})
    assert members(gs) == [("A", "B")]
    assert gs[0].focus_edges == (("A", "B"), ("B", "A"))


def test_chain_forms_one_group():
    assert members(detect_groups({"A": "B", "B": "C", "C": "B"})) == [("A", "B", "C")]


def test_no_external_focus_no_groups():
    assert detect_groups({"a": "a", "b": "b"}) == []


def test_union_find_components():
    uf = UnionFind()
    for a, b in [(1, 2), (3, 4), (2, 3), (5, 5)]:
        uf.union(a, b)
    assert sorted(sorted(c) for c in uf.components()) == [[1, 2, 3, 4], [5]]


def test_pair_formation_dimensions():
    w = world(person("a", 0.0, 0.0), person("b", 2.0, 0.0))
    f = compute_f_formation(Group(("a", "b"), ()), w)
    assert f.o_center == (1.0, 0.0)
    assert f.o_radius == pytest.approx(0.7)
    assert f.p_outer_radius == pytest.approx(1.3)
    assert f.r_outer_radius == pytest.approx(2.3)


def test_triangle_formation_is_centered_on_centroid():
    h = math.sqrt(3.0)
    w = world(person("a", 0.0, 0.0), person("b", 2.0, 0.0), person("c", 1.0, h))
    f = compute_f_formation(Group(("a", "b", "c"), ()), w)
    assert f.o_center[0] == pytest.approx(1.0)
    assert f.o_center[1] == pytest.approx(h / 3)
    dists = [math.dist(f.o_center, e.position) for e in w.entities]
    assert max(dists) - min(dists) < 1e-12
    assert f.o_radius == pytest.approx(2 / h - 0.3)


def test_coincident_members_give_minimum_formation():
    w = world(person("a", 1.0, 1.0), person("b", 1.0, 1.0))
    f = compute_f_formation(Group(("a", "b"), ()), w)
    assert f.o_radius == 0.3
    assert f.p_outer_radius == pytest.approx(0.6)


def test_formation_needs_two_members():
    with pytest.raises(ValueError):
        compute_f_formation(Group(("a",), ()), world(person("a")))


def test_region_classification():
    f = FFormation((0.0, 0.0), 1.0, 2.0, 3.0)
    assert classify_position((0.0, 0.0), f) is Region.O
    assert classify_position((1.0, 0.0), f) is Region.O
    assert classify_position((1.5, 0.0), f) is Region.P
    assert classify_position((0.0, 2.5), f) is Region.R
    assert classify_position((3.5, 0.0), f) is Region.OUTSIDE


@settings(max_examples=300)
@given(focus_maps(1, 12))
def test_groups_match_brute_force(fm):
    assert members(detect_groups(fm)) == brute_force_components(fm)


@settings(max_examples=300)
@given(focus_maps(1, 12))
def test_groups_partition_focus_participants(fm):
    gs = detect_groups(fm)
    flat = [m for g in gs for m in g.members]
    assert len(flat) == len(set(flat))
    touched = {a for a, f in fm.items() if f != a} | {f for a, f in fm.items() if f != a}
    assert set(flat) == touched
    where = {m: i for i, g in enumerate(gs) for m in g.members}
    for (a, b), s in compute_state_matrix(fm).nonpassive().items():
        if s is RelationState.ENGAGED:
            assert where[a] == where[b]


@st.composite
def member_layouts(draw):
    n = draw(st.integers(2, 7))
    pts = [(draw(st.floats(-5, 5)), draw(st.floats(-5, 5))) for _ in range(n)]
    radii = [draw(st.floats(0.1, 0.5)) for _ in range(n)]
    return pts, radii


@settings(max_examples=200)
@given(member_layouts())
def test_formation_geometry(layout):
    pts, radii = layout
    ents = [person(f"m{i}", x, y, radius=r) for i, ((x, y), r) in enumerate(zip(pts, radii))]
    w = world(*ents)
    f = compute_f_formation(Group(tuple(w.ids), ()), w)
    assert f.o_radius >= 0.3
    assert f.o_radius <= f.p_outer_radius <= f.r_outer_radius
    assert f.r_outer_radius == pytest.approx(f.p_outer_radius + 1.0)
    for e in ents:
        d = math.dist(f.o_center, e.position)
        r = e.pose.body_radius
        # every body lies inside the P-space disk and reaches beyond the O-space
        assert d + r <= f.p_outer_radius + 1e-9
        assert d + r >= f.o_radius - 1e-9 or f.o_radius == 0.3


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_regions_nest(x, y):
    f = FFormation((0.5, -0.5), 0.8, 1.9, 2.9)
    d = math.dist((x, y), f.o_center)
    region = classify_position((x, y), f)
    expect = (
        Region.O if d <= 0.8 else Region.P if d <= 1.9 else Region.R if d <= 2.9 else Region.OUTSIDE
    )
    assert region is expect


def test_random_large_maps_match_brute_force():
    rng = random.Random(5)
    ids = [f"n{i:02d}" for i in range(64)]
    for _ in range(200):
        fm = {a: rng.choice(ids) if rng.random() < 0.6 else a for a in ids}
        assert members(detect_groups(fm)) == brute_force_components(fm)
