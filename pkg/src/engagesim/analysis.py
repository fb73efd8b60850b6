"""Offline summaries of a trace."""

from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from .engine import TickRecord
from .model import RelationState
from .perception import Politeness


class HashMismatchWarning(UserWarning):
    pass


@dataclass
class Report:
    ticks: int = 0
    focus_timeline: dict[str, list[tuple[int, str]]] = field(default_factory=dict)
    state_timeline: dict[str, list[tuple[int, int, str]]] = field(default_factory=dict)
    episodes: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    miscommunication: list[dict[str, Any]] = field(default_factory=list)
    politeness: dict[str, dict[str, int]] = field(default_factory=dict)
    groups: list[tuple[int, int, tuple[str, ...]]] = field(default_factory=list)
    time_to_engaged: dict[str, Optional[int]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "ticks": self.ticks,
            "focus_timeline": {k: [list(x) for x in v] for k, v in self.focus_timeline.items()},
            "state_timeline": {k: [list(x) for x in v] for k, v in self.state_timeline.items()},
            "episodes": {k: [list(x) for x in v] for k, v in self.episodes.items()},
            "miscommunication": self.miscommunication,
            "politeness": self.politeness,
            "groups": [[s, e, list(m)] for s, e, m in self.groups],
            "time_to_engaged": self.time_to_engaged,
            "warnings": self.warnings,
        }


def pair_key(a: str, b: str) -> str:
    return f"{a}->{b}"


def _runs(values: Sequence[tuple[int, Any]]) -> list[tuple[int, int, Any]]:
    """Collapse (tick, value) samples into maximal (start, end, value) runs."""
    out: list[list] = []
    for tick, v in values:
        if out and out[-1][2] == v and out[-1][1] == tick - 1:
            out[-1][1] = tick
        else:
            out.append([tick, tick, v])
    return [tuple(r) for r in out]  # type: ignore[misc]


def analyze(
    records: Sequence[TickRecord],
    header: Optional[dict] = None,
    expected_hash: Optional[str] = None,
) -> Report:
    """Summarize records; an empty sequence gives an empty report."""
    header = header or {}
    report = Report(ticks=len(records))
    if expected_hash is not None and header.get("scenario_hash") != expected_hash:
        msg = (
            f"trace was recorded from scenario hash {header.get('scenario_hash')}, "
            f"expected {expected_hash}"
        )
        warnings.warn(msg, HashMismatchWarning, stacklevel=2)
        report.warnings.append(msg)
    if not records:
        return report

    for r in records:
        for e, f in sorted(r.focus_map.items()):
            tl = report.focus_timeline.setdefault(e, [])
            if not tl or tl[-1][1] != f:
                tl.append((r.tick, f))

    pairs = sorted({p for r in records for p in r.states.nonpassive()})
    for a, b in pairs:
        samples = [(r.tick, r.states.get((a, b), RelationState.PASSIVE).value) for r in records]
        report.state_timeline[pair_key(a, b)] = [x for x in _runs(samples) if x[2] != "passive"]

    for a, b in pairs:
        if a > b:
            continue
        samples = [(r.tick, r.states.get((a, b)) is RelationState.ENGAGED) for r in records]
        eps = [(s, e) for s, e, v in _runs(samples) if v]
        if eps:
            report.episodes[pair_key(a, b)] = eps

    for r in records:
        for m in r.miscommunication:
            report.miscommunication.append(
                {
                    "tick": m.tick,
                    "observer": m.observer,
                    "pair": list(m.pair),
                    "subjective": m.subjective_state.value,
                    "objective": m.objective_state.value,
                }
            )

    counts: dict[str, Counter] = {}
    for r in records:
        for p in r.politeness:
            counts.setdefault(p.sender, Counter())[p.classification.value] += 1
    report.politeness = {
        s: {c.value: counts[s].get(c.value, 0) for c in Politeness} for s in sorted(counts)
    }

    samples = [(r.tick, tuple(g.members for g in r.groups)) for r in records]
    for s, e, groups in _runs(samples):
        for members in groups:
            report.groups.append((s, e, members))
    report.groups.sort()

    goals = header.get("goals", {})
    for ent in sorted(goals):
        g = goals[ent]
        if g.get("kind") != "engage" or not g.get("target"):
            continue
        hit = next(
            (r.tick for r in records if r.states.get((ent, g["target"])) is RelationState.ENGAGED),
            None,
        )
        report.time_to_engaged[ent] = hit
    return report


def to_json(report: Report) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def to_text(report: Report, names: Optional[dict[str, str]] = None) -> str:
    names = names or {}

    def n(x: str) -> str:
        return names.get(x, x)

    lines = [f"ticks: {report.ticks}"]
    for w in report.warnings:
        lines.append(f"warning: {w}")
    if not report.ticks:
        return "\n".join(lines) + "\n"

    lines.append("")
    lines.append("focus")
    for e, tl in report.focus_timeline.items():
        steps = ", ".join(f"t{t}:{n(f)}" for t, f in tl)
        lines.append(f"  {n(e)}: {steps}")

    lines.append("")
    lines.append("states")
    for key, runs in report.state_timeline.items():
        a, b = key.split("->")
        spans = ", ".join(f"{s}-{e} {v}" for s, e, v in runs)
        lines.append(f"  {n(a)} -> {n(b)}: {spans}")

    lines.append("")
    lines.append("engagement episodes")
    if not report.episodes:
        lines.append("  none")
    for key, eps in report.episodes.items():
        a, b = key.split("->")
        lines.append(f"  {n(a)} & {n(b)}: " + ", ".join(f"{s}-{e}" for s, e in eps))

    lines.append("")
    lines.append(f"miscommunication events: {len(report.miscommunication)}")
    for m in report.miscommunication:
        a, b = m["pair"]
        lines.append(
            f"  t{m['tick']} {n(m['observer'])} sees {n(a)} -> {n(b)} as {m['subjective']}"
            f" (actually {m['objective']})"
        )

    lines.append("")
    lines.append("politeness")
    if not report.politeness:
        lines.append("  none")
    for s, hist in report.politeness.items():
        lines.append(f"  {n(s)}: " + " ".join(f"{k}={v}" for k, v in hist.items()))

    lines.append("")
    lines.append("groups")
    if not report.groups:
        lines.append("  none")
    for s, e, members in report.groups:
        lines.append(f"  {s}-{e}: " + ", ".join(n(m) for m in members))

    if report.time_to_engaged:
        lines.append("")
        lines.append("time to engaged")
        for ent, t in report.time_to_engaged.items():
            lines.append(f"  {n(ent)}: {'never' if t is None else t}")
    return "\n".join(lines) + "\n"
