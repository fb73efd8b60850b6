"""Goal-directed effort modulation.

Every engageable entity with a goal gets an :class:`EffortPlan` per tick:
new channel settings and optionally a movement. ``apply_plans`` is the only
place where a world turns into the next one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

from .focus import EiTable
from .groups import FFormation, Region, classify_position
from .model import (
    DIRECTED,
    SETTABLE,
    Channel,
    ChannelSetting,
    Entity,
    Goal,
    GoalKind,
    Pose,
    RelationState,
    World,
    bearing,
    distance,
    normalize_angle,
)
from .perception import SubjectiveView, required_effort, scalable_settings
from .signals import AlignmentModel

__all__ = [
    "LADDER",
    "DanglingGoalError",
    "EffortPlan",
    "Goal",
    "GoalKind",
    "Movement",
    "StrategyParams",
    "apply_plans",
    "approach_point",
    "plan_effort",
]

# ordered by how intrusive the channel is
LADDER: tuple[Channel, ...] = (
    Channel.BODY,
    Channel.GAZE,
    Channel.GESTURE,
    Channel.TALKING,
    Channel.TOUCH,
)


class DanglingGoalError(LookupError):
    pass


@dataclass(frozen=True)
class Movement:
    heading: float
    speed: float = 0.0


@dataclass(frozen=True)
class EffortPlan:
    entity: str
    settings: Mapping[Channel, ChannelSetting] = field(default_factory=dict)
    movement: Optional[Movement] = None
    required_effort: Optional[float] = None
    politeness_bound: Optional[float] = None
    reason: str = ""

    @property
    def total_magnitude(self) -> float:
        return math.fsum(
            s.magnitude
            for ch, s in self.settings.items()
            if ch in SETTABLE and (ch not in DIRECTED or s.target is not None)
        )


@dataclass(frozen=True)
class StrategyParams:
    idle_baseline: float = 0.05
    epsilon: float = 0.01
    speed: float = 0.5
    interaction_distance: float = 1.2
    maintenance_headroom: float = 0.1
    max_channel_magnitude: float = 1.0
    min_body_magnitude: float = 0.1


def _face(entity: Entity, point) -> Optional[Movement]:
    if point == entity.position:
        return None
    return Movement(bearing(entity.position, point), 0.0)


def approach_point(entity: Entity, target: Entity, interaction_distance: float):
    """Nearest spot inside ``target``'s field of view at conversational distance."""
    if entity.position == target.position:
        side = target.pose.heading
    else:
        side = bearing(target.position, entity.position)
    rel = math.remainder(side - target.pose.heading, 2.0 * math.pi)
    lim = 0.8 * target.fov_half_angle
    ang = target.pose.heading + min(max(rel, -lim), lim)
    x, y = target.position
    return (x + interaction_distance * math.cos(ang), y + interaction_distance * math.sin(ang))


def _move_towards(entity: Entity, point, speed: float) -> Optional[Movement]:
    d = distance(entity.position, point)
    if d <= 1e-9:
        return None
    return Movement(bearing(entity.position, point), min(speed, d))


def _scaled(settings: Mapping[Channel, ChannelSetting], total: float, cap: float):
    current = math.fsum(s.magnitude for s in settings.values())
    out = {}
    for ch, s in settings.items():
        out[ch] = replace(s, magnitude=min(cap, s.magnitude / current * total))
    return out


def _ladder_settings(entity: Entity, target: str, k: int) -> dict[Channel, ChannelSetting]:
    out = {}
    for ch in LADDER[:k]:
        old = entity.setting(ch)
        c = old.contribution if old is not None and old.contribution > 0.0 else 1.0
        out[ch] = ChannelSetting(1.0, c, target if ch in DIRECTED else None)
    return out


def _silence_others(entity: Entity, keep) -> dict[Channel, ChannelSetting]:
    return {
        ch: replace(s, magnitude=0.0)
        for ch, s in scalable_settings(entity).items()
        if ch not in keep
    }


def _plan_engage(entity, goal, view, world, model, params, table) -> EffortPlan:
    try:
        target = world.get(goal.target)
    except KeyError:
        raise DanglingGoalError(f"{entity.id} wants to engage missing entity {goal.target}") from None
    kappa = goal.politeness_bound
    eps = params.epsilon
    cap = params.max_channel_magnitude
    face = _face(entity, target.position)

    if view.estimated_states.get((entity.id, target.id)) is RelationState.ENGAGED:
        current = scalable_settings(entity)
        r = required_effort(entity, target, world, model, params.idle_baseline, eps, table=table)
        if current and math.isfinite(r):
            total = min(r * (1.0 + params.maintenance_headroom), kappa * r)
            settings = _scaled(current, total, cap)
            return EffortPlan(entity.id, settings, face, r, kappa, "maintain")

    chosen = None
    best = None
    for k in range(1, len(LADDER) + 1):
        cand = _ladder_settings(entity, target.id, k)
        r = required_effort(
            entity, target, world, model, params.idle_baseline, eps, settings=cand, table=table
        )
        if not math.isfinite(r):
            continue
        total = min(r * (1.0 + eps), kappa * r)
        if best is None or total / k < best[2] / best[0]:
            best = (k, r, total)
        if total / k <= cap:
            chosen = (k, r, total)
            break

    if chosen is not None:
        k, r, total = chosen
        settings = {ch: replace(s, magnitude=total / k) for ch, s in _ladder_settings(entity, target.id, k).items()}
        settings.update(_silence_others(entity, settings))
        return EffortPlan(entity.id, settings, face, r, kappa, "escalate")

    goal_point = approach_point(entity, target, params.interaction_distance)
    move = _move_towards(entity, goal_point, params.speed) or face
    if best is not None:
        k, r, total = best
        settings = {
            ch: replace(s, magnitude=min(cap, total / k))
            for ch, s in _ladder_settings(entity, target.id, k).items()
        }
        settings.update(_silence_others(entity, settings))
        return EffortPlan(entity.id, settings, move, r, kappa, "approach")
    # nothing reaches the target from here: keep presence and gaze, walk into view
    settings = {
        ch: replace(s, magnitude=0.5 * cap) for ch, s in _ladder_settings(entity, target.id, 2).items()
    }
    settings.update(_silence_others(entity, settings))
    return EffortPlan(entity.id, settings, move, math.inf, kappa, "repair")


def _plan_disengage(entity, goal, world) -> EffortPlan:
    if goal.target not in world:
        raise DanglingGoalError(f"{entity.id} wants to disengage missing entity {goal.target}")
    target = world.get(goal.target)
    others = sorted(
        (o for o in world.entities if o.id not in (entity.id, target.id)),
        key=lambda o: (not o.engageable, distance(entity.position, o.position), o.id),
    )
    settings = {}
    for ch, s in entity.channel_settings.items():
        if ch not in DIRECTED or s.target != target.id:
            continue
        if ch is Channel.GAZE and others:
            settings[ch] = replace(s, target=others[0].id)
        else:
            settings[ch] = replace(s, magnitude=0.0)
    move = None
    if entity.position != target.position:
        move = Movement(bearing(target.position, entity.position), 0.0)
    return EffortPlan(entity.id, settings, move, None, goal.politeness_bound, "disengage")


def _plan_avoid(entity, goal, world, params, formations: Sequence[FFormation]) -> EffortPlan:
    settings = {}
    for ch, s in entity.channel_settings.items():
        if ch in DIRECTED and s.magnitude > 0.0:
            settings[ch] = replace(s, magnitude=0.0)
        elif ch is Channel.BODY and s.magnitude > params.min_body_magnitude:
            settings[ch] = replace(s, magnitude=params.min_body_magnitude)

    near = [f for f in formations if classify_position(entity.position, f) is not Region.OUTSIDE]
    move = None
    if near:
        nearest = min(near, key=lambda f: distance(f.o_center, entity.position) - f.p_outer_radius)
        if nearest.o_center == entity.position:
            away = entity.pose.heading
        else:
            away = bearing(nearest.o_center, entity.position)
        steps = [0] + [s for k in range(1, 9) for s in (k, -k)]
        for k in steps[:16]:
            h = normalize_angle(away + k * math.pi / 8)
            x, y = entity.position
            end = world.environment.clamp(
                (x + params.speed * math.cos(h), y + params.speed * math.sin(h))
            )
            if end == entity.position:
                continue
            if all(classify_position(end, f) not in (Region.O, Region.P) for f in formations):
                move = Movement(h, params.speed)
                break
    return EffortPlan(entity.id, settings, move, None, goal.politeness_bound, "avoid")


def plan_effort(
    entity: Entity,
    view: Optional[SubjectiveView],
    world: World,
    model: AlignmentModel,
    params: StrategyParams = StrategyParams(),
    formations: Sequence[FFormation] = (),
    table: Optional[EiTable] = None,
) -> EffortPlan:
    """Next-tick settings for ``entity`` according to its active goal.

    ``table`` is the goal target's current EI table when the caller already
    has it; otherwise it is recomputed.
    """
    goal = entity.goal
    if not entity.engageable or goal is None:
        raise ValueError(f"{entity.id} has no goal to plan for")
    if goal.kind is GoalKind.ENGAGE:
        if view is None:
            raise ValueError("engaging needs the planner's subjective view")
        return _plan_engage(entity, goal, view, world, model, params, table)
    if goal.kind is GoalKind.DISENGAGE:
        return _plan_disengage(entity, goal, world)
    if goal.kind is GoalKind.AVOID_FOCUS:
        return _plan_avoid(entity, goal, world, params, formations)
    return EffortPlan(entity.id, reason="idle")


def apply_plans(world: World, plans: Iterable[EffortPlan]) -> World:
    """Advance to the next tick with every plan applied."""
    by_entity: dict[str, EffortPlan] = {}
    for p in plans:
        if p.entity in by_entity:
            raise ValueError(f"more than one plan for {p.entity}")
        if p.entity not in world:
            raise KeyError(p.entity)
        if not world.get(p.entity).engageable:
            raise ValueError(f"{p.entity} is an object and cannot follow a plan")
        by_entity[p.entity] = p

    out = []
    for e in world.entities:
        p = by_entity.get(e.id)
        if p is None:
            out.append(replace(e, moved=False) if e.moved else e)
            continue
        settings = dict(e.channel_settings)
        settings.update(p.settings)
        pose = e.pose
        moved = False
        if p.movement is not None:
            x, y = e.position
            pos = e.position
            if p.movement.speed > 0.0:
                h = p.movement.heading
                pos = world.environment.clamp(
                    (x + p.movement.speed * math.cos(h), y + p.movement.speed * math.sin(h))
                )
                moved = pos != e.position
            pose = Pose(pos, p.movement.heading, e.pose.body_radius)
        out.append(replace(e, channel_settings=settings, pose=pose, moved=moved))
    return world.with_entities(out, tick=world.tick + 1)
