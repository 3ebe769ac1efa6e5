"""Canonical codes for typed patterns: isomorphic patterns share a code."""

from __future__ import annotations

from itertools import permutations
from typing import Tuple

from ..errors import PatternTooLarge
from ..ir import PatternGraph
from ..model import Direction

MAX_CANON_VERTICES = 8


def _edge_code(slot: dict, src: str, dst: str, etype: int,
               direction: Direction) -> Tuple:
    a, b = slot[src], slot[dst]
    if direction is Direction.IN:
        a, b = b, a
        direction = Direction.OUT
    if direction is Direction.BOTH:
        return (min(a, b), max(a, b), etype, 0)
    return (a, b, etype, 1)


def pattern_canon(pattern: PatternGraph) -> str:
    """Minimum lexicographic encoding over all vertex orderings; structure,
    vertex types, edge types and direction participate, predicates do not."""
    n = len(pattern.vertices)
    if n > MAX_CANON_VERTICES:
        raise PatternTooLarge(f"{n} pattern vertices")
    aliases = [v.alias for v in pattern.vertices]
    vtypes = {v.alias: (-1 if v.vtype is None else v.vtype)
              for v in pattern.vertices}
    best = None
    for perm in permutations(range(n)):
        slot = {aliases[i]: perm[i] for i in range(n)}
        types = [0] * n
        for alias, s in slot.items():
            types[s] = vtypes[alias]
        edges = sorted(_edge_code(slot, e.src, e.dst, e.etype, e.direction)
                       for e in pattern.edges)
        code = (tuple(types), tuple(edges))
        if best is None or code < best:
            best = code
    types, edges = best
    parts = ["V:" + ",".join(map(str, types))]
    parts.extend(f"E:{a}-{b}:{t}:{'>' if d else '-'}" for a, b, t, d in edges)
    return "|".join(parts)
