import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from engagesim.model import (
    CHANNEL_ORDER,
    Channel,
    ChannelSetting,
    DegenerateGeometryError,
    Entity,
    Goal,
    GoalKind,
    Pose,
    World,
    WorldValidationError,
    angle_between,
    normalize_angle,
    require_valid,
    select_goal,
    validate_world,
)

from conftest import person, thing, world


def rules(w):
    return sorted(v.rule for v in validate_world(w))


def test_channels_are_the_seven_signal_kinds():
    assert [c.value for c in Channel] == [
        "walking", "body", "gaze", "touch", "gesture", "talking", "bumping",
    ]
    assert list(CHANNEL_ORDER.values()) == list(range(7))


@pytest.mark.parametrize(
    "point, expected",
    [((1.0, 0.0), 0.0), ((-1.0, 0.0), math.pi), ((0.0, 1.0), math.pi / 2), ((0.0, -3.0), math.pi / 2)],
)
def test_angle_between_cardinal_directions(point, expected):
    assert angle_between(Pose((0.0, 0.0), 0.0), point) == pytest.approx(expected, abs=1e-12)


def test_angle_between_coincident_points_is_degenerate():
    with pytest.raises(DegenerateGeometryError):
        angle_between(Pose((1.0, 1.0)), (1.0, 1.0))


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_normalize_angle_range(a):
    n = normalize_angle(a)
    assert 0.0 <= n < 2 * math.pi
    assert math.isclose(math.cos(n), math.cos(a), abs_tol=1e-6)


@given(st.floats(0.0, 2 * math.pi, exclude_max=True), st.floats(-50, 50), st.floats(-50, 50))
def test_angle_between_is_within_zero_and_pi(h, x, y):
    if (x, y) == (0.0, 0.0):
        return
    assert 0.0 <= angle_between(Pose((0.0, 0.0), h), (x, y)) <= math.pi


def test_entity_defaults_to_self_focus_and_name():
    e = person("a")
    assert e.focus == "a" and e.name == "a"
    assert e.preference(Channel.GAZE) == 1.0


def test_fig4_world_is_valid(fig4):
    assert validate_world(fig4.world) == []
    assert [e.name for e in fig4.world.entities] == ["Alex", "Bob", "Carla"]


def test_duplicate_ids_are_reported():
    assert "duplicate-id" in rules(world(person("a"), person("a", 1.0)))


def test_object_with_gaze_is_reported():
    lamp = replace(thing("lamp"), channel_settings={Channel.GAZE: ChannelSetting(1.0, 1.0, "a")})
    assert rules(world(person("a"), lamp)) == ["object-channel"]


@pytest.mark.parametrize(
    "change, rule",
    [
        (dict(focus="ghost"), "dangling-focus"),
        (dict(fov_half_angle=0.0), "fov-range"),
        (dict(pose=Pose((0, 0), 0, -0.1)), "body-radius"),
        (dict(channel_settings={Channel.BODY: ChannelSetting(-1.0)}), "negative-magnitude"),
        (dict(channel_settings={Channel.BODY: ChannelSetting(1.0, -1.0)}), "negative-contribution"),
        (dict(channel_settings={Channel.GAZE: ChannelSetting(1.0, 1.0, "ghost")}), "dangling-target"),
        (dict(channel_settings={Channel.GAZE: ChannelSetting(1.0, 1.0, "a")}), "self-target"),
        (dict(channel_settings={Channel.BODY: ChannelSetting(1.0, 1.0, "b")}), "undirected-target"),
        (dict(channel_settings={Channel.WALKING: ChannelSetting(1.0)}), "automatic-channel"),
        (dict(goal=Goal(GoalKind.ENGAGE, "ghost")), "dangling-goal"),
        (dict(goal=Goal(GoalKind.ENGAGE, "a")), "self-goal"),
        (dict(goal=Goal(GoalKind.ENGAGE, "lamp")), "engage-object"),
    ],
)
def test_each_invariant_has_a_named_violation(change, rule):
    a = replace(person("a"), **change)
    assert rules(world(a, person("b", 2.0), thing("lamp", 5.0))) == [rule]


def test_object_focus_and_goal_are_reported():
    lamp = replace(thing("lamp"), focus="a", goal=Goal(GoalKind.ENGAGE, "a"))
    assert rules(world(person("a", 1.0), lamp)) == ["object-focus", "object-goal"]


def test_noise_out_of_range_is_reported():
    assert rules(world(person("a"), noise={Channel.TALKING: 1.5})) == ["noise-range"]


def test_require_valid_lists_every_violation():
    a = replace(person("a"), focus="ghost", fov_half_angle=4.0)
    with pytest.raises(WorldValidationError) as exc:
        require_valid(world(a))
    assert sorted(v.rule for v in exc.value.violations) == ["dangling-focus", "fov-range"]


def test_world_orders_entities_by_id():
    w = World((person("c"), person("a", 1.0), person("b", 2.0)))
    assert w.ids == ["a", "b", "c"]
    assert "b" in w and "z" not in w


def test_goal_selection_prefers_priority_then_declaration_order():
    g1 = Goal(GoalKind.ENGAGE, "x", priority=1)
    g2 = Goal(GoalKind.AVOID_FOCUS, priority=3)
    g3 = Goal(GoalKind.IDLE, priority=3)
    assert select_goal([g1, g2, g3]) is g2
    assert select_goal([]) is None


def test_environment_clamps_to_bounds():
    w = world(person("a"))
    assert w.environment.clamp((80.0, -90.0)) == (50.0, -50.0)


def test_pose_normalizes_heading():
    assert Pose((0, 0), -math.pi / 2).heading == pytest.approx(1.5 * math.pi)
    assert isinstance(Entity("x", Pose((1, 2))).position[0], float)
