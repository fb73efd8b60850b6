"""Effort emission and interpretation: EI = T * M * C * A * P.

``alignment`` and ``compute_channel_ei`` evaluate one sender/receiver pair
with plain floats. ``compute_all_ei`` evaluates a whole world at once with
numpy; the two routes are kept separate so each can check the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

import numpy as np

from .model import (
    AUTOMATIC,
    CHANNEL_ORDER,
    CONTACT,
    DIRECTED,
    VISUAL,
    Channel,
    EffortEmission,
    Entity,
    Environment,
    World,
    angle_between,
    angle_diff,
    bearing,
    distance,
)

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class ChannelParams:
    cone_half_angle: float = math.pi
    attenuation: float = 1.0
    # None: sum of both body radii plus contact_reach
    contact_threshold: Optional[float] = None
    contact_reach: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.cone_half_angle <= math.pi:
            raise ValueError(f"cone_half_angle must be in (0, pi], got {self.cone_half_angle}")
        if self.attenuation < 0.0:
            raise ValueError(f"attenuation must be >= 0, got {self.attenuation}")


DEFAULT_CHANNEL_PARAMS: dict[Channel, ChannelParams] = {
    Channel.WALKING: ChannelParams(math.pi, 2.0),
    Channel.BODY: ChannelParams(math.pi, 1.0),
    Channel.GAZE: ChannelParams(math.pi / 6, 1.0),
    Channel.TOUCH: ChannelParams(math.pi / 4, 0.0, contact_reach=0.3),
    Channel.GESTURE: ChannelParams(math.pi / 3, 1.0),
    Channel.TALKING: ChannelParams(math.pi, 2.0),
    Channel.BUMPING: ChannelParams(math.pi, 0.0, contact_reach=0.0),
}


@dataclass(frozen=True)
class AlignmentModel:
    channels: Mapping[Channel, ChannelParams] = field(
        default_factory=lambda: dict(DEFAULT_CHANNEL_PARAMS)
    )
    walking_magnitude: float = 0.3
    bumping_magnitude: float = 2.0

    def params(self, channel: Channel) -> ChannelParams:
        return self.channels.get(channel) or DEFAULT_CHANNEL_PARAMS[channel]


@dataclass(frozen=True)
class EiFactors:
    T: float
    M: float
    C: float
    A: float
    P: float


@dataclass(frozen=True)
class ChannelEi:
    receiver: str
    sender: str
    channel: Channel
    value: float
    factors: EiFactors


def cone_falloff(theta: float, half_angle: float) -> float:
    """Raised-cosine directivity: 1 on axis, 0 at and beyond the cone edge."""
    if theta >= half_angle:
        return 0.0
    return math.cos(theta / half_angle * HALF_PI)


def contact_threshold(params: ChannelParams, sender: Entity, receiver: Entity) -> float:
    if params.contact_threshold is not None:
        return params.contact_threshold
    return sender.pose.body_radius + receiver.pose.body_radius + params.contact_reach


def in_field_of_view(viewer: Entity, point: tuple[float, float]) -> bool:
    if viewer.position == point:
        return True
    return angle_between(viewer.pose, point) <= viewer.fov_half_angle


def alignment(
    sender: Entity, emission: EffortEmission, receiver: Entity, model: AlignmentModel
) -> float:
    ch = emission.channel
    params = model.params(ch)
    d = distance(sender.position, receiver.position)
    if ch in CONTACT and d > contact_threshold(params, sender, receiver):
        return 0.0
    directivity = 1.0
    if ch in DIRECTED and d > 0.0:
        theta = angle_diff(emission.direction, bearing(sender.position, receiver.position))
        directivity = cone_falloff(theta, params.cone_half_angle)
    gate = 1.0
    if ch in VISUAL and not in_field_of_view(receiver, sender.position):
        gate = 0.0
    return directivity * gate * (1.0 + d) ** (-params.attenuation)


def contrast(environment: Environment, channel: Channel) -> float:
    return 1.0 - environment.noise_of(channel)


def compute_channel_ei(
    emission: EffortEmission,
    sender: Entity,
    receiver: Entity,
    environment: Environment,
    model: AlignmentModel,
) -> ChannelEi:
    if sender.id == receiver.id:
        raise ValueError("an entity does not interpret its own emissions")
    if emission.sender != sender.id:
        raise ValueError(f"emission from {emission.sender} passed with sender {sender.id}")
    f = EiFactors(
        T=contrast(environment, emission.channel),
        M=emission.magnitude,
        C=emission.contribution,
        A=alignment(sender, emission, receiver, model),
        P=receiver.preference(emission.channel),
    )
    value = f.T * f.M * f.C * f.A * f.P
    return ChannelEi(receiver.id, sender.id, emission.channel, value, f)


def _overlaps(a: Entity, b: Entity) -> bool:
    return distance(a.position, b.position) < a.pose.body_radius + b.pose.body_radius


def emissions_of(
    entity: Entity, world: World, model: AlignmentModel, automatic: bool = True
) -> list[EffortEmission]:
    """Everything ``entity`` broadcasts this tick, in channel order.

    Settable channels emit when their magnitude is positive (directed ones
    also need a target). Walking fires after a move, Bumping while the body
    overlaps another one. Objects only ever show their Body. Pass
    ``automatic=False`` to skip Walking and Bumping.
    """
    out: list[EffortEmission] = []
    for ch in sorted(entity.channel_settings, key=CHANNEL_ORDER.__getitem__):
        s = entity.channel_settings[ch]
        if ch in AUTOMATIC or s.magnitude <= 0.0:
            continue
        if not entity.engageable and ch is not Channel.BODY:
            continue
        if ch in DIRECTED:
            if s.target is None or s.target not in world:
                continue
            tpos = world.get(s.target).position
            direction = (
                entity.pose.heading if tpos == entity.position else bearing(entity.position, tpos)
            )
            out.append(EffortEmission(entity.id, ch, s.magnitude, s.contribution, s.target, direction))
        else:
            out.append(EffortEmission(entity.id, ch, s.magnitude, s.contribution))
    if entity.engageable and automatic:
        if entity.moved and model.walking_magnitude > 0.0:
            out.append(EffortEmission(entity.id, Channel.WALKING, model.walking_magnitude, 1.0))
        if model.bumping_magnitude > 0.0 and any(
            o.id != entity.id and _overlaps(entity, o) for o in world.entities
        ):
            out.append(EffortEmission(entity.id, Channel.BUMPING, model.bumping_magnitude, 1.0))
    out.sort(key=lambda em: CHANNEL_ORDER[em.channel])
    return out


def received_ei(
    receiver: Entity, world: World, model: AlignmentModel, sender: Optional[Entity] = None
) -> list[ChannelEi]:
    """Scalar route: every ChannelEi arriving at ``receiver`` (optionally from one sender)."""
    senders = [sender] if sender is not None else world.entities
    out = []
    for s in senders:
        if s.id == receiver.id:
            continue
        for em in emissions_of(s, world, model):
            out.append(compute_channel_ei(em, s, receiver, world.environment, model))
    return out


class EiBatch:
    """All ChannelEi of one tick, stored column-wise.

    Rows are ordered by (receiver, sender, channel). Iterating yields
    :class:`ChannelEi` objects.
    """

    def __init__(self, ids, receiver, sender, channel, T, M, C, A, P, value):
        self.ids: list[str] = list(ids)
        self.receiver = receiver
        self.sender = sender
        self.channel = channel
        self.T, self.M, self.C, self.A, self.P = T, M, C, A, P
        self.value = value

    def __len__(self) -> int:
        return int(self.value.shape[0])

    def __iter__(self) -> Iterator[ChannelEi]:
        channels = list(Channel)
        ids = self.ids
        for k in range(len(self)):
            yield ChannelEi(
                ids[self.receiver[k]],
                ids[self.sender[k]],
                channels[self.channel[k]],
                float(self.value[k]),
                EiFactors(
                    float(self.T[k]), float(self.M[k]), float(self.C[k]),
                    float(self.A[k]), float(self.P[k]),
                ),
            )

    def for_receiver(self, receiver_id: str) -> list[ChannelEi]:
        r = self.ids.index(receiver_id)
        return [ce for ce, keep in zip(self, self.receiver == r) if keep]

    def totals_matrix(self) -> np.ndarray:
        """``out[r, s]``: summed EI at receiver r from sender s (channels added in order)."""
        n = len(self.ids)
        out = np.zeros((n, n))
        # rows are already sorted by channel within each (r, s), so one
        # add per channel reproduces the sequential per-pair sum
        for ch in range(len(Channel)):
            sel = self.channel == ch
            np.add.at(out, (self.receiver[sel], self.sender[sel]), self.value[sel])
        return out


def _wrapped_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.fmod(np.abs(a - b), 2.0 * math.pi)
    return np.where(d > math.pi, 2.0 * math.pi - d, d)


def compute_all_ei(world: World, model: AlignmentModel) -> EiBatch:
    """Interpret every active emission at every other entity (vectorized)."""
    ents = world.entities
    n = len(ents)
    ids = [e.id for e in ents]
    pos = np.array([e.position for e in ents], dtype=float).reshape(n, 2)
    heading = np.array([e.pose.heading for e in ents], dtype=float)
    fov = np.array([e.fov_half_angle for e in ents], dtype=float)
    radius = np.array([e.pose.body_radius for e in ents], dtype=float)
    pref = np.array([[e.preference(ch) for ch in Channel] for e in ents], dtype=float).reshape(
        n, len(Channel)
    )

    # [s, r]: geometry seen from sender s towards receiver r
    dx = pos[None, :, 0] - pos[:, None, 0]
    dy = pos[None, :, 1] - pos[:, None, 1]
    dist = np.hypot(dx, dy)
    coincident = (dx == 0.0) & (dy == 0.0)
    with np.errstate(invalid="ignore"):
        bear = np.arctan2(dy, dx)
    # in_view[r, s]: s is inside r's field of view
    in_view = (_wrapped_diff(heading[:, None], bear) <= fov[:, None]) | coincident

    emissions = [em for e in ents for em in emissions_of(e, world, model)]
    index = {eid: i for i, eid in enumerate(ids)}
    cols: dict[str, list[np.ndarray]] = {k: [] for k in "rsctMCAPv"}

    by_channel: dict[Channel, list[EffortEmission]] = {}
    for em in emissions:
        by_channel.setdefault(em.channel, []).append(em)

    for ch, ems in by_channel.items():
        params = model.params(ch)
        s_idx = np.array([index[em.sender] for em in ems], dtype=np.intp)
        M = np.array([em.magnitude for em in ems], dtype=float)
        C = np.array([em.contribution for em in ems], dtype=float)
        d = dist[s_idx]
        co = coincident[s_idx]

        if ch in DIRECTED:
            direction = np.array([em.direction for em in ems], dtype=float)
            theta = _wrapped_diff(direction[:, None], bear[s_idx])
            half = params.cone_half_angle
            directivity = np.where(theta >= half, 0.0, np.cos(theta / half * HALF_PI))
            directivity = np.where(co, 1.0, directivity)
        else:
            directivity = np.ones_like(d)
        if ch in VISUAL:
            gate = in_view.T[s_idx].astype(float)
        else:
            gate = np.ones_like(d)
        A = directivity * gate * (1.0 + d) ** (-params.attenuation)
        if ch in CONTACT:
            if params.contact_threshold is not None:
                thr = np.full_like(d, params.contact_threshold)
            else:
                thr = radius[s_idx][:, None] + radius[None, :] + params.contact_reach
            A = np.where(d > thr, 0.0, A)

        T = 1.0 - world.environment.noise_of(ch)
        P = pref[:, CHANNEL_ORDER[ch]]
        V = T * M[:, None] * C[:, None] * A * P[None, :]

        E = len(ems)
        rr = np.broadcast_to(np.arange(n), (E, n))
        ss = np.broadcast_to(s_idx[:, None], (E, n))
        keep = rr != ss
        cols["r"].append(rr[keep])
        cols["s"].append(ss[keep])
        cols["c"].append(np.full(int(keep.sum()), CHANNEL_ORDER[ch], dtype=np.intp))
        cols["t"].append(np.full(int(keep.sum()), T))
        cols["M"].append(np.broadcast_to(M[:, None], (E, n))[keep])
        cols["C"].append(np.broadcast_to(C[:, None], (E, n))[keep])
        cols["A"].append(A[keep])
        cols["P"].append(np.broadcast_to(P[None, :], (E, n))[keep])
        cols["v"].append(V[keep])

    if not emissions or n < 2:
        empty_i = np.zeros(0, dtype=np.intp)
        empty_f = np.zeros(0)
        return EiBatch(ids, empty_i, empty_i, empty_i, *([empty_f] * 6))

    cat = {k: np.concatenate(v) for k, v in cols.items()}
    order = np.lexsort((cat["c"], cat["s"], cat["r"]))
    return EiBatch(
        ids,
        cat["r"][order],
        cat["s"][order],
        cat["c"][order],
        cat["t"][order],
        cat["M"][order],
        cat["C"][order],
        cat["A"][order],
        cat["P"][order],
        cat["v"][order],
    )
