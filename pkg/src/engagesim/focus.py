"""Total EI per sender and single-focus selection by argmax."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .model import World
from .signals import ChannelEi

DEFAULT_IDLE_BASELINE = 0.05


@dataclass(frozen=True)
class EiTable:
    receiver: str
    totals: Mapping[str, float]

    def without(self, entity_id: str) -> float:
        """Strongest competing total once ``entity_id`` is left out."""
        return max((v for k, v in self.totals.items() if k != entity_id), default=0.0)


def aggregate_ei(
    receiver: str,
    channel_eis: Iterable[ChannelEi],
    idle_baseline: float,
    world: World,
) -> EiTable:
    totals = {eid: 0.0 for eid in world.ids}
    for ce in channel_eis:
        if ce.receiver != receiver:
            raise ValueError(f"ChannelEi for {ce.receiver} passed to table of {receiver}")
        totals[ce.sender] += ce.value
    totals[receiver] = idle_baseline
    return EiTable(receiver, totals)


def compute_focus(table: EiTable, previous_focus: Optional[str], hysteresis: float = 0.0) -> str:
    """Argmax of the table.

    The previous focus is kept when it is within ``hysteresis`` of the best
    total (with the default of 0 that means exact ties only); otherwise ties
    go to the lowest id.
    """
    best = max(table.totals.values())
    if previous_focus is not None and previous_focus in table.totals:
        if table.totals[previous_focus] >= best - hysteresis:
            return previous_focus
    return min(k for k, v in table.totals.items() if v == best)


def compute_all_focus(
    world: World, tables: Mapping[str, EiTable], hysteresis: float = 0.0
) -> dict[str, str]:
    out: dict[str, str] = {}
    for e in world.entities:
        if not e.engageable:
            out[e.id] = e.id
            continue
        table = tables.get(e.id)
        if table is None:
            raise KeyError(f"no EI table for engageable entity {e.id}")
        out[e.id] = compute_focus(table, e.focus, hysteresis)
    return out
