"""Relationship states of ordered entity pairs, derived from the focus map."""

from __future__ import annotations

from typing import Iterator, Mapping, Optional

from .model import RelationState

# (a focuses b, b focuses a) -> (state of a, state of b)
RELATION_TABLE: dict[tuple[bool, bool], tuple[RelationState, RelationState]] = {
    (False, False): (RelationState.PASSIVE, RelationState.PASSIVE),
    (False, True): (RelationState.REQUESTED, RelationState.BUILDUP),
    (True, False): (RelationState.BUILDUP, RelationState.REQUESTED),
    (True, True): (RelationState.ENGAGED, RelationState.ENGAGED),
}


def pair_state(a_focuses_b: bool, b_focuses_a: bool) -> tuple[RelationState, RelationState]:
    return RELATION_TABLE[(bool(a_focuses_b), bool(b_focuses_a))]


class StateMatrix:
    """States of every ordered pair (a, b), a != b.

    Each entity focuses at most one other, so at most 2N pairs are not
    Passive; only those are stored and every other pair reads as Passive.
    """

    def __init__(
        self,
        entities: tuple[str, ...],
        nonpassive: Mapping[tuple[str, str], RelationState],
        tick: int = 0,
    ):
        self.tick = tick
        self.entities = tuple(sorted(entities))
        self._members = frozenset(self.entities)
        self._nonpassive = {
            k: v for k, v in sorted(nonpassive.items()) if v is not RelationState.PASSIVE
        }

    def __getitem__(self, pair: tuple[str, str]) -> RelationState:
        a, b = pair
        if a == b or a not in self._members or b not in self._members:
            raise KeyError(pair)
        return self._nonpassive.get(pair, RelationState.PASSIVE)

    def get(self, pair: tuple[str, str], default=None) -> Optional[RelationState]:
        try:
            return self[pair]
        except KeyError:
            return default

    def __contains__(self, pair: object) -> bool:
        return self.get(pair) is not None  # type: ignore[arg-type]

    def __iter__(self) -> Iterator[tuple[str, str]]:
        for a in self.entities:
            for b in self.entities:
                if a != b:
                    yield (a, b)

    def __len__(self) -> int:
        n = len(self.entities)
        return n * (n - 1)

    def items(self) -> Iterator[tuple[tuple[str, str], RelationState]]:
        for pair in self:
            yield pair, self._nonpassive.get(pair, RelationState.PASSIVE)

    @property
    def states(self) -> dict[tuple[str, str], RelationState]:
        return dict(self.items())

    def nonpassive(self) -> dict[tuple[str, str], RelationState]:
        return dict(self._nonpassive)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateMatrix):
            return NotImplemented
        return (
            self.tick == other.tick
            and self.entities == other.entities
            and self._nonpassive == other._nonpassive
        )

    def __repr__(self) -> str:
        return f"StateMatrix(tick={self.tick}, n={len(self.entities)}, nonpassive={self._nonpassive})"


def compute_state_matrix(focus_map: Mapping[str, str], tick: int = 0) -> StateMatrix:
    """Apply the relation table to every pair touched by an external focus.

    Keys of ``focus_map`` define the entity set. A focus on oneself, or on
    an entity outside the key set, focuses nobody inside the matrix.
    """
    states: dict[tuple[str, str], RelationState] = {}
    for a, f in focus_map.items():
        if f == a or f not in focus_map:
            continue
        sa, sf = pair_state(True, focus_map[f] == a)
        states[(a, f)] = sa
        states[(f, a)] = sf
    return StateMatrix(tuple(focus_map), states, tick)


def is_engaged(entity: str, focus_map: Mapping[str, str]) -> bool:
    """``entity.focus.focus == entity`` for an external focus."""
    f = focus_map[entity]
    if f == entity:
        return False
    return focus_map.get(f) == entity
