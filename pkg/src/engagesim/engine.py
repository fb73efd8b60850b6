"""The closed loop: signals -> EI -> focus -> states -> views -> groups -> plans.

Every stage of a tick reads the same tick-start snapshot; the only mutation
is building the next :class:`World` at the end of :func:`step`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Optional, Sequence

from .focus import EiTable, compute_all_focus
from .groups import FFormation, Group, compute_f_formation, detect_groups
from .model import Channel, GoalKind, Pose, RelationState, World, require_valid
from .perception import (
    MiscommunicationEvent,
    PolitenessReport,
    SubjectiveView,
    build_subjective_view,
    detect_miscommunication,
    politeness_score,
)
from .relations import StateMatrix, compute_state_matrix
from .signals import AlignmentModel, compute_all_ei
from .strategy import EffortPlan, StrategyParams, apply_plans, plan_effort

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    def __init__(self, tick: int, cause: Exception):
        self.tick = tick
        self.cause = cause
        super().__init__(f"tick {tick}: {cause}")


@dataclass(frozen=True)
class EngineParams:
    idle_baseline: float = 0.05
    epsilon: float = 0.01
    kappa: float = 2.0
    hysteresis: float = 0.0
    r_width: float = 1.0
    min_o_radius: float = 0.3
    speed: float = 0.5
    interaction_distance: float = 1.2
    maintenance_headroom: float = 0.1
    max_channel_magnitude: float = 1.0
    min_body_magnitude: float = 0.1
    subjective_views: bool = True
    perception_radius: float = 0.0
    view_smoothing: float = 0.0
    gaze_follows_focus: bool = True

    def strategy(self) -> StrategyParams:
        return StrategyParams(
            idle_baseline=self.idle_baseline,
            epsilon=self.epsilon,
            speed=self.speed,
            interaction_distance=self.interaction_distance,
            maintenance_headroom=self.maintenance_headroom,
            max_channel_magnitude=self.max_channel_magnitude,
            min_body_magnitude=self.min_body_magnitude,
        )


@dataclass(frozen=True)
class EntitySnapshot:
    pose: Pose
    fov_half_angle: float
    engageable: bool


@dataclass
class TickRecord:
    tick: int
    ei_totals: dict[str, dict[str, float]]
    focus_map: dict[str, str]
    states: StateMatrix
    views: dict[str, SubjectiveView] = field(default_factory=dict)
    miscommunication: list[MiscommunicationEvent] = field(default_factory=list)
    politeness: list[PolitenessReport] = field(default_factory=list)
    groups: list[Group] = field(default_factory=list)
    formations: list[FFormation] = field(default_factory=list)
    plans: list[EffortPlan] = field(default_factory=list)
    entities: dict[str, EntitySnapshot] = field(default_factory=dict)


@dataclass(frozen=True)
class StopPredicate:
    """``engaged``: the pair is objectively Engaged; ``focus``: a focuses b."""

    kind: str
    a: str
    b: str

    def holds(self, record: TickRecord) -> bool:
        if self.kind == "engaged":
            return record.states.get((self.a, self.b)) is RelationState.ENGAGED
        if self.kind == "focus":
            return record.focus_map.get(self.a) == self.b
        raise ValueError(f"unknown stop predicate {self.kind!r}")


def _merge(goal_plan: Optional[EffortPlan], scripted: EffortPlan) -> EffortPlan:
    if goal_plan is None:
        return scripted
    settings = {**goal_plan.settings, **scripted.settings}
    movement = scripted.movement if scripted.movement is not None else goal_plan.movement
    return replace(goal_plan, settings=settings, movement=movement, reason=f"{goal_plan.reason}+script")


def _reveal(world: World, focus_map: Mapping[str, str], gaze_follows_focus: bool) -> World:
    """Store the new focus; gaze turns to it so others can read it."""
    out = []
    for e in world.entities:
        f = focus_map[e.id]
        changes = {"focus": f} if e.focus != f else {}
        gaze = e.setting(Channel.GAZE)
        if gaze_follows_focus and e.engageable and gaze is not None and gaze.magnitude > 0.0:
            target = None if f == e.id else f
            if gaze.target != target:
                changes["channel_settings"] = {
                    **e.channel_settings,
                    Channel.GAZE: replace(gaze, target=target),
                }
        out.append(replace(e, **changes) if changes else e)
    return world.with_entities(out)


def step(
    world: World,
    params: EngineParams = EngineParams(),
    model: AlignmentModel = AlignmentModel(),
    scripted: Sequence[EffortPlan] = (),
    previous_views: Optional[Mapping[str, SubjectiveView]] = None,
) -> tuple[World, TickRecord]:
    require_valid(world)
    tick = world.tick
    ids = world.ids

    totals = compute_all_ei(world, model).totals_matrix()
    tables: dict[str, EiTable] = {}
    for i, e in enumerate(world.entities):
        if e.engageable:
            row = dict(zip(ids, totals[i].tolist()))
            row[e.id] = params.idle_baseline
            tables[e.id] = EiTable(e.id, row)

    focus_map = compute_all_focus(world, tables, params.hysteresis)
    states = compute_state_matrix(focus_map, tick)

    def view_of(e, subjects=None) -> SubjectiveView:
        prev = previous_views.get(e.id) if previous_views else None
        return build_subjective_view(
            e,
            world,
            model,
            own_focus=focus_map[e.id],
            totals=tables[e.id].totals,
            perception_radius=params.perception_radius,
            previous=prev,
            smoothing=params.view_smoothing,
            subjects=subjects,
        )

    views: dict[str, SubjectiveView] = {}
    if params.subjective_views:
        views = {e.id: view_of(e) for e in world.entities if e.engageable}
    misc = detect_miscommunication(states, views.values())

    groups = detect_groups(focus_map)
    formations = [compute_f_formation(g, world, params.min_o_radius, params.r_width) for g in groups]

    politeness: list[PolitenessReport] = []
    plans: dict[str, EffortPlan] = {}
    sparams = params.strategy()
    for e in world.entities:
        g = e.goal
        if not e.engageable or g is None or g.kind is GoalKind.IDLE:
            continue
        if g.kind is GoalKind.ENGAGE:
            target = world.get(g.target)
            politeness.append(
                politeness_score(
                    e, target, world, model, params.idle_baseline, params.epsilon,
                    g.politeness_bound, table=tables[target.id],
                )
            )
        view = views.get(e.id)
        if view is None and g.kind is GoalKind.ENGAGE:
            # objective mode: the planner only needs its target's focus
            view = view_of(e, subjects=(g.target,))
        plans[e.id] = plan_effort(
            e, view, world, model, sparams, formations, table=tables.get(g.target or "")
        )
    for sp in scripted:
        plans[sp.entity] = _merge(plans.get(sp.entity), sp)

    plan_list = [plans[k] for k in sorted(plans)]
    next_world = apply_plans(_reveal(world, focus_map, params.gaze_follows_focus), plan_list)

    record = TickRecord(
        tick=tick,
        ei_totals={k: dict(t.totals) for k, t in tables.items()},
        focus_map=focus_map,
        states=states,
        views=views,
        miscommunication=misc,
        politeness=politeness,
        groups=groups,
        formations=formations,
        plans=plan_list,
        entities={
            e.id: EntitySnapshot(e.pose, e.fov_half_angle, e.engageable) for e in world.entities
        },
    )
    return next_world, record


def iter_run(
    world: World,
    ticks: int,
    params: EngineParams = EngineParams(),
    model: AlignmentModel = AlignmentModel(),
    script: Optional[Mapping[int, Sequence[EffortPlan]]] = None,
    stop: Optional[StopPredicate] = None,
) -> Iterator[TickRecord]:
    if ticks < 0:
        raise ValueError("ticks must be >= 0")
    script = script or {}
    views = None
    for _ in range(ticks):
        tick = world.tick
        try:
            world, record = step(world, params, model, script.get(tick, ()), views)
        except Exception as exc:  # noqa: BLE001 - re-raised with the tick index
            raise SimulationError(tick, exc) from exc
        views = record.views if params.view_smoothing > 0.0 else None
        yield record
        if stop is not None and stop.holds(record):
            log.info("stop predicate %s held at tick %d", stop, tick)
            return


def run(scenario, ticks: Optional[int] = None) -> list[TickRecord]:
    """Run a loaded scenario for ``ticks`` (default: its own tick limit)."""
    n = scenario.ticks if ticks is None else ticks
    return list(
        iter_run(scenario.world, n, scenario.params, scenario.model, scenario.script, scenario.stop)
    )

