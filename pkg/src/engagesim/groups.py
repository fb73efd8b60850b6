"""Groups as focus-chain components and their F-formation geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .model import Point, World, distance

DEFAULT_MIN_O_RADIUS = 0.3
DEFAULT_R_WIDTH = 1.0


class UnionFind:
    """Disjoint sets over hashable keys, with path halving and union by size."""

    def __init__(self):
        self.parent: dict = {}
        self.size: dict = {}

    def add(self, x) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x):
        self.add(x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]

    def components(self) -> list[list]:
        comps: dict = {}
        for x in self.parent:
            comps.setdefault(self.find(x), []).append(x)
        return list(comps.values())


@dataclass(frozen=True)
class Group:
    members: tuple[str, ...]
    focus_edges: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class FFormation:
    o_center: Point
    o_radius: float
    p_outer_radius: float
    r_outer_radius: float


class Region(str, Enum):
    O = "O"
    P = "P"
    R = "R"
    OUTSIDE = "outside"


def detect_groups(focus_map: Mapping[str, str]) -> list[Group]:
    """Weakly connected components (size >= 2) of the external-focus digraph."""
    uf = UnionFind()
    edges = []
    for a, f in focus_map.items():
        if f != a:
            uf.union(a, f)
            edges.append((a, f))
    groups = []
    for comp in uf.components():
        if len(comp) < 2:
            continue
        members = tuple(sorted(comp))
        inside = set(members)
        gedges = tuple(sorted(e for e in edges if e[0] in inside))
        groups.append(Group(members, gedges))
    groups.sort(key=lambda g: g.members[0])
    return groups


def compute_f_formation(
    group: Group,
    world: World,
    min_o_radius: float = DEFAULT_MIN_O_RADIUS,
    r_width: float = DEFAULT_R_WIDTH,
) -> FFormation:
    """Concentric O/P/R regions around the members' centroid.

    The O-space radius is the mean member distance minus the mean body
    radius, floored at ``min_o_radius`` and capped so every member's body
    still reaches the P-space ring.
    """
    if len(group.members) < 2:
        raise ValueError("an F-formation needs at least two members")
    ents = [world.get(m) for m in group.members]
    cx = math.fsum(e.position[0] for e in ents) / len(ents)
    cy = math.fsum(e.position[1] for e in ents) / len(ents)
    center = (cx, cy)
    dists = [distance(center, e.position) for e in ents]
    radii = [e.pose.body_radius for e in ents]
    mean_d = math.fsum(dists) / len(dists)
    mean_r = math.fsum(radii) / len(radii)
    nearest_reach = min(d + r for d, r in zip(dists, radii))
    o_radius = max(min_o_radius, min(mean_d - mean_r, nearest_reach))
    p_outer = max(max(dists) + max(radii), o_radius + max(radii))
    return FFormation(center, o_radius, p_outer, p_outer + r_width)


def classify_position(point: Point, formation: FFormation) -> Region:
    d = distance(formation.o_center, point)
    if d <= formation.o_radius:
        return Region.O
    if d <= formation.p_outer_radius:
        return Region.P
    if d <= formation.r_outer_radius:
        return Region.R
    return Region.OUTSIDE
