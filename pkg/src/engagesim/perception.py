"""Subjective views, miscommunication, and the effort needed to gain focus.

Each observer estimates the focus of the entities it perceives by reading
where their directed emissions point, then derives its own state matrix.
Comparing those matrices with the objective one exposes miscommunication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Optional

from .focus import EiTable, aggregate_ei, compute_focus
from .model import (
    AUTOMATIC,
    DIRECTED,
    SETTABLE,
    Channel,
    ChannelSetting,
    EffortEmission,
    Entity,
    RelationState,
    World,
    angle_diff,
    bearing,
    distance,
)
from .relations import StateMatrix, compute_state_matrix
from .signals import AlignmentModel, emissions_of, in_field_of_view, received_ei

CANNOT_ATTRACT = math.inf
DEFAULT_EPSILON = 0.01
DEFAULT_KAPPA = 2.0


class NotPerceivedError(LookupError):
    """The observer has no perceptual access to the subject."""


class Politeness(str, Enum):
    INSUFFICIENT = "insufficient"
    POLITE = "polite"
    RUDE = "rude"


@dataclass(frozen=True)
class SubjectiveView:
    observer: str
    estimated_focus: Mapping[str, tuple[str, float]]
    estimated_states: StateMatrix
    last_update_tick: int = 0

    def focus_map(self) -> dict[str, str]:
        return {k: v[0] for k, v in self.estimated_focus.items()}


@dataclass(frozen=True)
class MiscommunicationEvent:
    tick: int
    observer: str
    pair: tuple[str, str]
    subjective_state: RelationState
    objective_state: RelationState


@dataclass(frozen=True)
class PolitenessReport:
    tick: int
    sender: str
    target: str
    used_effort: float
    required_effort: float
    classification: Politeness

    @property
    def reachable(self) -> bool:
        return math.isfinite(self.required_effort)


def perceived_by(
    observer: Entity,
    world: World,
    model: AlignmentModel,
    totals: Optional[Mapping[str, float]] = None,
    perception_radius: float = 0.0,
) -> list[str]:
    """Entities sending positive total EI to the observer, or within range."""
    if totals is None:
        totals = {}
        for ce in received_ei(observer, world, model):
            totals[ce.sender] = totals.get(ce.sender, 0.0) + ce.value
    out = []
    for e in world.entities:
        if e.id == observer.id:
            continue
        if totals.get(e.id, 0.0) > 0.0 or (
            perception_radius > 0.0
            and distance(observer.position, e.position) <= perception_radius
        ):
            out.append(e.id)
    return out


def _cue_visible(observer: Entity, subject: Entity, emission: EffortEmission) -> bool:
    if emission.channel is Channel.TALKING:
        return True
    if emission.channel is Channel.TOUCH and emission.target == observer.id:
        return True
    return in_field_of_view(observer, subject.position)


def _candidates(observer: Entity, world: World, perceived: Iterable[str]) -> list[tuple[str, tuple]]:
    out = [(c, world.get(c).position) for c in sorted(set(perceived)) if c != observer.id]
    out.append((observer.id, observer.position))
    return out


def _estimate(
    observer: Entity,
    subject: Entity,
    world: World,
    model: AlignmentModel,
    candidates: list[tuple[str, tuple]],
) -> tuple[str, float]:
    attributed: dict[str, float] = {}
    total = 0.0
    spos = subject.position
    for em in emissions_of(subject, world, model, automatic=False):
        if em.channel not in DIRECTED or not _cue_visible(observer, subject, em):
            continue
        total += em.magnitude
        half = model.params(em.channel).cone_half_angle
        best: Optional[tuple[float, float, str]] = None
        for cid, cpos in candidates:
            if cid == subject.id or cpos == spos:
                continue
            dev = angle_diff(em.direction, bearing(spos, cpos))
            if dev > half:
                continue
            key = (dev, distance(spos, cpos), cid)
            if best is None or key < best:
                best = key
        if best is not None:
            attributed[best[2]] = attributed.get(best[2], 0.0) + em.magnitude

    if not attributed or total <= 0.0:
        return subject.id, 0.0
    top = max(attributed.values())
    winner = min(k for k, v in attributed.items() if v == top)
    return winner, top / total


def estimate_focus_of(
    observer: Entity,
    subject: Entity,
    world: World,
    model: AlignmentModel,
    perceived: Optional[Iterable[str]] = None,
    perception_radius: float = 0.0,
) -> tuple[str, float]:
    """Guess ``subject``'s focus from the directed cues the observer can see.

    Each visible cue is attributed to the perceived entity lying closest to
    its pointing direction (within the channel's cone). The candidate with
    the largest attributed magnitude wins; confidence is its share of all
    visible directed magnitude. With no visible directed cue the subject
    looks self-focused, with confidence 0.
    """
    if perceived is None:
        perceived = perceived_by(observer, world, model, perception_radius=perception_radius)
    perceived = set(perceived)
    if subject.id not in perceived:
        raise NotPerceivedError(f"{observer.id} does not perceive {subject.id}")
    return _estimate(observer, subject, world, model, _candidates(observer, world, perceived))


def build_subjective_view(
    observer: Entity,
    world: World,
    model: AlignmentModel,
    own_focus: Optional[str] = None,
    totals: Optional[Mapping[str, float]] = None,
    perception_radius: float = 0.0,
    previous: Optional[SubjectiveView] = None,
    smoothing: float = 0.0,
    subjects: Optional[Iterable[str]] = None,
) -> SubjectiveView:
    """One observer's estimate of every perceived focus and the implied states.

    ``smoothing`` in [0, 1) blends each estimate with ``previous``: a new
    target only replaces the old one once its weighted confidence is higher.
    ``subjects`` limits the estimates to those entities (still only if
    perceived), which is all a planner needs for its own relations.
    """
    if not observer.engageable:
        raise ValueError(f"object {observer.id} holds no subjective view")
    perceived = perceived_by(observer, world, model, totals, perception_radius)
    estimates: dict[str, tuple[str, float]] = {
        observer.id: (own_focus if own_focus is not None else observer.focus, 1.0)
    }
    candidates = _candidates(observer, world, perceived)
    if subjects is not None:
        wanted = set(subjects)
        perceived = [s for s in perceived if s in wanted]
    for sid in perceived:
        target, conf = _estimate(observer, world.get(sid), world, model, candidates)
        if smoothing > 0.0 and previous is not None and sid in previous.estimated_focus:
            prev_t, prev_c = previous.estimated_focus[sid]
            if prev_t == target:
                conf = smoothing * prev_c + (1.0 - smoothing) * conf
            elif smoothing * prev_c > (1.0 - smoothing) * conf:
                target, conf = prev_t, smoothing * prev_c
            else:
                conf = (1.0 - smoothing) * conf
        estimates[sid] = (target, conf)
    states = compute_state_matrix({k: v[0] for k, v in estimates.items()}, world.tick)
    return SubjectiveView(observer.id, estimates, states, world.tick)


def detect_miscommunication(
    objective: StateMatrix, views: Iterable[SubjectiveView]
) -> list[MiscommunicationEvent]:
    events = []
    for view in sorted(views, key=lambda v: v.observer):
        for pair, sub in view.estimated_states.items():
            obj = objective.get(pair)
            if obj is not None and obj is not sub:
                events.append(MiscommunicationEvent(objective.tick, view.observer, pair, sub, obj))
    return events


def is_effective(
    pair: tuple[str, str],
    objective: StateMatrix,
    view_a: SubjectiveView,
    view_b: SubjectiveView,
) -> bool:
    engaged = RelationState.ENGAGED
    return (
        objective.get(pair) is engaged
        and view_a.estimated_states.get(pair) is engaged
        and view_b.estimated_states.get(pair) is engaged
    )


def scalable_settings(entity: Entity) -> dict[Channel, ChannelSetting]:
    """Settable channels that currently emit something."""
    return {
        ch: s
        for ch, s in entity.channel_settings.items()
        if ch in SETTABLE and s.magnitude > 0.0 and (ch not in DIRECTED or s.target is not None)
    }


def used_effort(entity: Entity) -> float:
    return math.fsum(s.magnitude for s in scalable_settings(entity).values())


def target_table(target: Entity, world: World, model: AlignmentModel, idle_baseline: float) -> EiTable:
    return aggregate_ei(target.id, received_ei(target, world, model), idle_baseline, world)


def required_effort(
    sender: Entity,
    target: Entity,
    world: World,
    model: AlignmentModel,
    idle_baseline: float = 0.05,
    epsilon: float = DEFAULT_EPSILON,
    settings: Optional[Mapping[Channel, ChannelSetting]] = None,
    table: Optional[EiTable] = None,
) -> float:
    """Smallest total magnitude that wins ``target``'s focus by ``epsilon``.

    Magnitude is spread over the sender's active channels in their current
    proportions (or those of ``settings``). EI is linear in magnitude, so the
    threshold is (competitor + epsilon - fixed) / EI-per-unit-magnitude, where
    the fixed part is what Walking/Bumping already deliver. A sender that
    already holds the focus with its actual settings never needs more than it
    is using. Returns
    ``CANNOT_ATTRACT`` when no magnitude can reach the target.
    """
    if not target.engageable:
        raise ValueError(f"{target.id} is an object and holds no focus")
    if table is None:
        table = target_table(target, world, model, idle_baseline)
    competitor = table.without(sender.id)

    probe = sender if settings is None else replace(sender, channel_settings=dict(settings))
    probe_world = world
    if probe is not sender:
        probe_world = world.with_entities(probe if e.id == sender.id else e for e in world.entities)
    fixed = 0.0
    scaled = 0.0
    for ce in received_ei(probe_world.get(target.id), probe_world, model, sender=probe):
        if ce.channel in AUTOMATIC:
            fixed += ce.value
        else:
            scaled += ce.value
    magnitude = used_effort(probe)
    need = competitor + epsilon - fixed

    if magnitude <= 0.0 or scaled <= 0.0:
        return 0.0 if need <= 0.0 else CANNOT_ATTRACT
    threshold = max(0.0, need / (scaled / magnitude))
    if settings is None and compute_focus(table, target.focus) == sender.id:
        return min(magnitude, threshold)
    return threshold


def classify_politeness(used: float, required: float, kappa: float) -> Politeness:
    if not math.isfinite(required) or used < required:
        return Politeness.INSUFFICIENT
    if used <= kappa * required:
        return Politeness.POLITE
    return Politeness.RUDE


def politeness_score(
    sender: Entity,
    target: Entity,
    world: World,
    model: AlignmentModel,
    idle_baseline: float = 0.05,
    epsilon: float = DEFAULT_EPSILON,
    kappa: float = DEFAULT_KAPPA,
    table: Optional[EiTable] = None,
) -> PolitenessReport:
    used = used_effort(sender)
    required = required_effort(sender, target, world, model, idle_baseline, epsilon, table=table)
    return PolitenessReport(
        world.tick, sender.id, target.id, used, required, classify_politeness(used, required, kappa)
    )
