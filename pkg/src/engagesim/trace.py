"""Line-delimited JSON traces: one header line, then one tick record per line.

Infinite floats (an unreachable required effort) are written as the string
``"inf"``. See ``docs/trace-format.md`` for the field layout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable, Optional, Union

from . import __version__
from .engine import EntitySnapshot, TickRecord
from .groups import FFormation, Group
from .model import Channel, ChannelSetting, Pose, RelationState
from .perception import MiscommunicationEvent, Politeness, PolitenessReport, SubjectiveView
from .relations import StateMatrix
from .strategy import EffortPlan, Movement

TRACE_FORMAT = "engagesim-trace"
TRACE_VERSION = 1


class TraceError(Exception):
    exit_code = 2


class TraceVersionError(TraceError):
    pass


class TruncatedTraceError(TraceError):
    def __init__(self, message: str, last_good_tick: Optional[int]):
        self.last_good_tick = last_good_tick
        where = "no complete record" if last_good_tick is None else f"last good tick {last_good_tick}"
        super().__init__(f"{message} ({where})")


def _f(x: Optional[float]):
    if x is None:
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _unf(x) -> Optional[float]:
    return None if x is None else float(x)


def _states(m: StateMatrix) -> dict:
    return {
        "tick": m.tick,
        "entities": list(m.entities),
        "nonpassive": [[a, b, s.value] for (a, b), s in m.nonpassive().items()],
    }


def _unstates(d: dict) -> StateMatrix:
    return StateMatrix(
        tuple(d["entities"]),
        {(a, b): RelationState(s) for a, b, s in d["nonpassive"]},
        d["tick"],
    )


def _settings(settings) -> dict:
    return {
        ch.value: {"magnitude": s.magnitude, "contribution": s.contribution, "target": s.target}
        for ch, s in sorted(settings.items(), key=lambda kv: list(Channel).index(kv[0]))
    }


def _unsettings(d: dict) -> dict:
    return {
        Channel(k): ChannelSetting(float(v["magnitude"]), float(v["contribution"]), v["target"])
        for k, v in d.items()
    }


def record_to_dict(r: TickRecord) -> dict[str, Any]:
    return {
        "type": "tick",
        "tick": r.tick,
        "ei_totals": r.ei_totals,
        "focus_map": r.focus_map,
        "states": _states(r.states),
        "views": {
            k: {
                "estimated_focus": {s: [t, c] for s, (t, c) in v.estimated_focus.items()},
                "estimated_states": _states(v.estimated_states),
                "last_update_tick": v.last_update_tick,
            }
            for k, v in r.views.items()
        },
        "miscommunication": [
            {
                "tick": m.tick,
                "observer": m.observer,
                "pair": list(m.pair),
                "subjective": m.subjective_state.value,
                "objective": m.objective_state.value,
            }
            for m in r.miscommunication
        ],
        "politeness": [
            {
                "tick": p.tick,
                "sender": p.sender,
                "target": p.target,
                "used": _f(p.used_effort),
                "required": _f(p.required_effort),
                "classification": p.classification.value,
            }
            for p in r.politeness
        ],
        "groups": [
            {"members": list(g.members), "focus_edges": [list(e) for e in g.focus_edges]}
            for g in r.groups
        ],
        "formations": [
            {
                "o_center": list(f.o_center),
                "o_radius": f.o_radius,
                "p_outer_radius": f.p_outer_radius,
                "r_outer_radius": f.r_outer_radius,
            }
            for f in r.formations
        ],
        "plans": [
            {
                "entity": p.entity,
                "settings": _settings(p.settings),
                "movement": None
                if p.movement is None
                else {"heading": p.movement.heading, "speed": p.movement.speed},
                "required_effort": _f(p.required_effort),
                "politeness_bound": p.politeness_bound,
                "reason": p.reason,
            }
            for p in r.plans
        ],
        "entities": {
            k: {
                "position": list(s.pose.position),
                "heading": s.pose.heading,
                "body_radius": s.pose.body_radius,
                "fov_half_angle": s.fov_half_angle,
                "engageable": s.engageable,
            }
            for k, s in r.entities.items()
        },
    }


def record_from_dict(d: dict[str, Any]) -> TickRecord:
    return TickRecord(
        tick=d["tick"],
        ei_totals={k: {s: float(v) for s, v in t.items()} for k, t in d["ei_totals"].items()},
        focus_map=dict(d["focus_map"]),
        states=_unstates(d["states"]),
        views={
            k: SubjectiveView(
                k,
                {s: (t, float(c)) for s, (t, c) in v["estimated_focus"].items()},
                _unstates(v["estimated_states"]),
                v["last_update_tick"],
            )
            for k, v in d["views"].items()
        },
        miscommunication=[
            MiscommunicationEvent(
                m["tick"],
                m["observer"],
                tuple(m["pair"]),
                RelationState(m["subjective"]),
                RelationState(m["objective"]),
            )
            for m in d["miscommunication"]
        ],
        politeness=[
            PolitenessReport(
                p["tick"],
                p["sender"],
                p["target"],
                _unf(p["used"]),
                _unf(p["required"]),
                Politeness(p["classification"]),
            )
            for p in d["politeness"]
        ],
        groups=[
            Group(tuple(g["members"]), tuple(tuple(e) for e in g["focus_edges"])) for g in d["groups"]
        ],
        formations=[
            FFormation(tuple(f["o_center"]), f["o_radius"], f["p_outer_radius"], f["r_outer_radius"])
            for f in d["formations"]
        ],
        plans=[
            EffortPlan(
                p["entity"],
                _unsettings(p["settings"]),
                None if p["movement"] is None else Movement(p["movement"]["heading"], p["movement"]["speed"]),
                _unf(p["required_effort"]),
                p["politeness_bound"],
                p["reason"],
            )
            for p in d["plans"]
        ],
        entities={
            k: EntitySnapshot(
                Pose(tuple(s["position"]), s["heading"], s["body_radius"]),
                s["fov_half_angle"],
                s["engageable"],
            )
            for k, s in d["entities"].items()
        },
    )


def make_header(scenario=None, **extra) -> dict[str, Any]:
    header: dict[str, Any] = {
        "type": "header",
        "format": TRACE_FORMAT,
        "trace_version": TRACE_VERSION,
        "engine_version": __version__,
    }
    if scenario is not None:
        header.update(
            scenario=scenario.name,
            scenario_hash=scenario.hash,
            seed=scenario.seed,
            names=scenario.names,
            goals={
                e.id: {"kind": e.goal.kind.value, "target": e.goal.target}
                for e in scenario.world.entities
                if e.goal is not None
            },
        )
    header.update(extra)
    return header


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


class TraceWriter:
    """Appends records to an open text stream, one line each, in tick order."""

    def __init__(self, stream: IO[str], header: dict[str, Any]):
        self.stream = stream
        self.last_tick: Optional[int] = None
        stream.write(_dump(header) + "\n")

    def write(self, record: TickRecord) -> None:
        if self.last_tick is not None and record.tick <= self.last_tick:
            raise ValueError(f"tick {record.tick} written after tick {self.last_tick}")
        self.stream.write(_dump(record_to_dict(record)) + "\n")
        self.last_tick = record.tick


@dataclass
class Trace:
    header: dict[str, Any]
    records: list[TickRecord] = field(default_factory=list)


def write_trace(
    records: Iterable[TickRecord], path: Union[str, Path], header: Optional[dict] = None
) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = TraceWriter(fh, header or make_header())
        for r in records:
            w.write(r)


def parse_trace(text: str) -> Trace:
    if not text:
        raise TruncatedTraceError("trace is empty", None)
    lines = text.split("\n")
    complete = text.endswith("\n")
    if complete:
        lines.pop()
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise TruncatedTraceError("header line is unreadable", None) from None
    if not isinstance(header, dict) or header.get("type") != "header":
        raise TraceError("first line is not a trace header")
    if header.get("format") != TRACE_FORMAT:
        raise TraceError(f"not an engagesim trace (format {header.get('format')!r})")
    if header.get("trace_version") != TRACE_VERSION:
        raise TraceVersionError(
            f"trace version {header.get('trace_version')!r} is not supported (expected {TRACE_VERSION})"
        )
    if not complete and len(lines) == 1:
        raise TruncatedTraceError("header line is not terminated", None)

    records: list[TickRecord] = []
    last = None
    for i, line in enumerate(lines[1:], start=2):
        if not complete and i == len(lines):
            raise TruncatedTraceError(f"line {i} is cut off", last)
        try:
            d = json.loads(line)
            rec = record_from_dict(d)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            raise TruncatedTraceError(f"line {i} is not a complete tick record", last) from None
        records.append(rec)
        last = rec.tick
    return Trace(header, records)


def read_trace(path: Union[str, Path]) -> Trace:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_trace(fh.read())
