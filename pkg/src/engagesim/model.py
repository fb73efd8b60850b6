"""Domain types shared by every stage of the engagement loop.

Entities live on a 2-D plane (meters, radians). Everything here is an
immutable value; the engine produces a new :class:`World` per tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Optional

TWO_PI = 2.0 * math.pi

Point = tuple[float, float]


class Channel(str, Enum):
    """The seven effort outputs an entity can produce."""

    WALKING = "walking"
    BODY = "body"
    GAZE = "gaze"
    TOUCH = "touch"
    GESTURE = "gesture"
    TALKING = "talking"
    BUMPING = "bumping"


CHANNEL_ORDER: dict[Channel, int] = {ch: i for i, ch in enumerate(Channel)}

# channels pointed at one specific receiver
DIRECTED = frozenset({Channel.GAZE, Channel.GESTURE, Channel.TALKING, Channel.TOUCH})
# emitted by the engine from movement / overlap, never set by the entity
AUTOMATIC = frozenset({Channel.WALKING, Channel.BUMPING})
SETTABLE = frozenset(Channel) - AUTOMATIC
OMNIDIRECTIONAL = frozenset({Channel.WALKING, Channel.BODY, Channel.BUMPING})
VISUAL = frozenset({Channel.BODY, Channel.GAZE, Channel.GESTURE, Channel.BUMPING})
AUDIO = frozenset({Channel.WALKING, Channel.TALKING})
CONTACT = frozenset({Channel.TOUCH, Channel.BUMPING})


class RelationState(str, Enum):
    PASSIVE = "passive"
    REQUESTED = "requested"
    BUILDUP = "buildup"
    ENGAGED = "engaged"


class GoalKind(str, Enum):
    ENGAGE = "engage"
    DISENGAGE = "disengage"
    AVOID_FOCUS = "avoid_focus"
    IDLE = "idle"


class DegenerateGeometryError(ValueError):
    """Raised when a direction is requested between coincident points."""


class WorldValidationError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        lines = "; ".join(str(v) for v in violations)
        super().__init__(f"{len(violations)} world violation(s): {lines}")


def normalize_angle(angle: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    a = math.fmod(angle, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    # fmod of a tiny negative can round up to exactly 2*pi
    if a >= TWO_PI:
        a = 0.0
    return a


def angle_diff(a: float, b: float) -> float:
    """Absolute angular difference in [0, pi]."""
    d = math.fmod(abs(a - b), TWO_PI)
    return TWO_PI - d if d > math.pi else d


def distance(p: Point, q: Point) -> float:
    return math.hypot(q[0] - p[0], q[1] - p[1])


def bearing(p: Point, q: Point) -> float:
    """Direction from p to q in radians (not normalized)."""
    if p[0] == q[0] and p[1] == q[1]:
        raise DegenerateGeometryError(f"no direction between coincident points {p}")
    return math.atan2(q[1] - p[1], q[0] - p[0])


@dataclass(frozen=True)
class Pose:
    position: Point
    heading: float = 0.0
    body_radius: float = 0.3

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "heading", normalize_angle(float(self.heading)))


def angle_between(pose_a: Pose, point_b: Point) -> float:
    """Angle between pose_a's heading and the direction towards point_b, in [0, pi]."""
    return angle_diff(pose_a.heading, bearing(pose_a.position, point_b))


@dataclass(frozen=True)
class ChannelSetting:
    """What an entity currently emits on one settable channel."""

    magnitude: float
    contribution: float = 1.0
    target: Optional[str] = None


@dataclass(frozen=True)
class EffortEmission:
    sender: str
    channel: Channel
    magnitude: float
    contribution: float
    target: Optional[str] = None
    # world-frame angle from sender to target; None for undirected channels
    direction: Optional[float] = None


@dataclass(frozen=True)
class Preference:
    owner: str
    values: Mapping[Channel, float] = field(default_factory=dict)

    def get(self, channel: Channel) -> float:
        return self.values.get(channel, 1.0)


@dataclass(frozen=True)
class Environment:
    noise: Mapping[Channel, float] = field(default_factory=dict)
    bounds: tuple[float, float, float, float] = (-50.0, -50.0, 50.0, 50.0)

    def noise_of(self, channel: Channel) -> float:
        return self.noise.get(channel, 0.0)

    def clamp(self, p: Point) -> Point:
        xmin, ymin, xmax, ymax = self.bounds
        return (min(max(p[0], xmin), xmax), min(max(p[1], ymin), ymax))


@dataclass(frozen=True)
class Goal:
    kind: GoalKind
    target: Optional[str] = None
    priority: int = 0
    politeness_bound: float = 2.0


def select_goal(goals: Iterable[Goal]) -> Optional[Goal]:
    """Highest priority wins; the first declared goal wins a priority tie."""
    best: Optional[Goal] = None
    for g in goals:
        if best is None or g.priority > best.priority:
            best = g
    return best


@dataclass(frozen=True)
class Entity:
    id: str
    pose: Pose
    name: str = ""
    fov_half_angle: float = math.pi / 2
    engageable: bool = True
    preferences: Optional[Preference] = None
    focus: Optional[str] = None
    goal: Optional[Goal] = None
    channel_settings: Mapping[Channel, ChannelSetting] = field(default_factory=dict)
    # set by the engine when the position changed during the last transition
    moved: bool = False

    def __post_init__(self) -> None:
        if not self.name:
            object.__setattr__(self, "name", self.id)
        if self.focus is None:
            object.__setattr__(self, "focus", self.id)
        if self.preferences is None:
            object.__setattr__(self, "preferences", Preference(self.id))

    @property
    def position(self) -> Point:
        return self.pose.position

    def preference(self, channel: Channel) -> float:
        return self.preferences.get(channel)

    def setting(self, channel: Channel) -> Optional[ChannelSetting]:
        return self.channel_settings.get(channel)


@dataclass(frozen=True)
class World:
    entities: tuple[Entity, ...]
    environment: Environment = field(default_factory=Environment)
    tick: int = 0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        # canonical id order: iteration order never depends on declaration order
        object.__setattr__(self, "entities", tuple(sorted(self.entities, key=lambda e: e.id)))

    @cached_property
    def by_id(self) -> dict[str, Entity]:
        return {e.id: e for e in self.entities}

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entities]

    def get(self, entity_id: str) -> Entity:
        return self.by_id[entity_id]

    def __contains__(self, entity_id: object) -> bool:
        return entity_id in self.by_id

    def with_entities(self, entities: Iterable[Entity], **changes) -> World:
        return replace(self, entities=tuple(entities), **changes)


@dataclass(frozen=True)
class Violation:
    entity: Optional[str]
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        who = self.entity if self.entity is not None else "<world>"
        return f"{who}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


def validate_world(world: World) -> list[Violation]:
    """Check every type invariant; an empty list means the world is well-formed."""
    out: list[Violation] = []
    seen: set[str] = set()
    for e in world.entities:
        if e.id in seen:
            out.append(Violation(e.id, "duplicate-id"))
        seen.add(e.id)
    if world.tick < 0:
        out.append(Violation(None, "negative-tick", str(world.tick)))
    for ch, n in world.environment.noise.items():
        if not 0.0 <= n <= 1.0:
            out.append(Violation(None, "noise-range", f"{ch.value}={n}"))
    xmin, ymin, xmax, ymax = world.environment.bounds
    if not (xmin < xmax and ymin < ymax):
        out.append(Violation(None, "bounds", str(world.environment.bounds)))

    for e in world.entities:
        if not e.pose.body_radius > 0.0:
            out.append(Violation(e.id, "body-radius", str(e.pose.body_radius)))
        if not 0.0 < e.fov_half_angle <= math.pi:
            out.append(Violation(e.id, "fov-range", str(e.fov_half_angle)))
        if e.focus not in seen:
            out.append(Violation(e.id, "dangling-focus", str(e.focus)))
        for ch, p in e.preferences.values.items():
            if p < 0.0:
                out.append(Violation(e.id, "negative-preference", f"{ch.value}={p}"))
        for ch, s in e.channel_settings.items():
            if ch in AUTOMATIC:
                out.append(Violation(e.id, "automatic-channel", ch.value))
            if s.magnitude < 0.0:
                out.append(Violation(e.id, "negative-magnitude", ch.value))
            if s.contribution < 0.0:
                out.append(Violation(e.id, "negative-contribution", ch.value))
            if ch in DIRECTED:
                if s.target is not None and s.target not in seen:
                    out.append(Violation(e.id, "dangling-target", f"{ch.value}->{s.target}"))
                if s.target == e.id:
                    out.append(Violation(e.id, "self-target", ch.value))
            elif s.target is not None:
                out.append(Violation(e.id, "undirected-target", ch.value))
        if not e.engageable:
            if e.focus != e.id:
                out.append(Violation(e.id, "object-focus", str(e.focus)))
            for ch, s in e.channel_settings.items():
                if ch is not Channel.BODY and s.magnitude > 0.0:
                    out.append(Violation(e.id, "object-channel", ch.value))
            if e.goal is not None and e.goal.kind is not GoalKind.IDLE:
                out.append(Violation(e.id, "object-goal", e.goal.kind.value))
        g = e.goal
        if g is not None and g.kind in (GoalKind.ENGAGE, GoalKind.DISENGAGE):
            if g.target is None or g.target not in seen:
                out.append(Violation(e.id, "dangling-goal", str(g.target)))
            elif g.target == e.id:
                out.append(Violation(e.id, "self-goal", g.kind.value))
            elif g.kind is GoalKind.ENGAGE and not world.get(g.target).engageable:
                out.append(Violation(e.id, "engage-object", g.target))
    return out


def require_valid(world: World) -> None:
    violations = validate_world(world)
    if violations:
        raise WorldValidationError(violations)
