"""Pattern-frequency catalog: exact counts for every connected typed
pattern up to k vertices, plus extension-rate estimates above k."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..errors import CatalogTooLarge
from ..ir import PatternEdge, PatternGraph, PatternVertex, match_count
from ..ir.exprs import Cmp, Literal, Param, PropAccess
from ..model import Direction, PropertyGraphSchema
from .canon import pattern_canon

DEFAULT_MAX_PATTERNS = 10 ** 6


@dataclass
class Catalog:
    k: int
    entries: Dict[str, int]
    vertex_counts: Dict[int, int]
    edge_counts: Dict[int, int]
    schema_doc: dict = field(default_factory=dict)

    def lookup(self, pattern: PatternGraph) -> Optional[int]:
        if len(pattern.vertices) > self.k:
            return None
        return self.entries.get(pattern_canon(pattern))

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "entries": dict(sorted(self.entries.items())),
            "vertex_counts": {str(k): v for k, v in self.vertex_counts.items()},
            "edge_counts": {str(k): v for k, v in self.edge_counts.items()},
        }

    @staticmethod
    def from_json(doc: dict) -> "Catalog":
        return Catalog(
            k=doc["k"],
            entries=dict(doc["entries"]),
            vertex_counts={int(k): v for k, v in doc["vertex_counts"].items()},
            edge_counts={int(k): v for k, v in doc["edge_counts"].items()},
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _strip(pattern: PatternGraph) -> PatternGraph:
    """Predicate-free copy (catalog keys are structural)."""
    return PatternGraph(
        tuple(PatternVertex(v.alias, v.vtype) for v in pattern.vertices),
        tuple(PatternEdge(e.src, e.dst, e.etype, e.direction)
              for e in pattern.edges),
    )


def _grow(schema: PropertyGraphSchema, base: PatternGraph) -> List[PatternGraph]:
    """All one-edge extensions (new vertex or closing edge, OUT and BOTH
    directions, no parallel pattern edges)."""
    out = []
    n = len(base.vertices)
    present = {(min(e.src, e.dst), max(e.src, e.dst), e.etype)
               for e in base.edges}
    for et, decl in enumerate(schema.edge_types):
        s = schema.vtype_ordinal(decl.src_type)
        d = schema.vtype_ordinal(decl.dst_type)
        for pv in base.vertices:
            # extend to a fresh vertex
            fresh = f"x{n}"
            if pv.vtype == s:
                out.append(PatternGraph(
                    base.vertices + (PatternVertex(fresh, d),),
                    base.edges + (PatternEdge(pv.alias, fresh, et),)))
            if pv.vtype == d:
                out.append(PatternGraph(
                    base.vertices + (PatternVertex(fresh, s),),
                    base.edges + (PatternEdge(fresh, pv.alias, et),)))
            if s == d and pv.vtype == s:
                out.append(PatternGraph(
                    base.vertices + (PatternVertex(fresh, s),),
                    base.edges + (PatternEdge(pv.alias, fresh, et,
                                              Direction.BOTH),)))
            # close an edge between existing vertices
            for pw in base.vertices:
                if pw.alias == pv.alias:
                    continue
                key = (min(pv.alias, pw.alias), max(pv.alias, pw.alias), et)
                if key in present:
                    continue
                if pv.vtype == s and pw.vtype == d:
                    out.append(PatternGraph(
                        base.vertices,
                        base.edges + (PatternEdge(pv.alias, pw.alias, et),)))
                if s == d and pv.vtype == s and pw.vtype == s \
                        and pv.alias < pw.alias:
                    out.append(PatternGraph(
                        base.vertices,
                        base.edges + (PatternEdge(pv.alias, pw.alias, et,
                                                  Direction.BOTH),)))
    return out


def catalog_build(snap, k: int = 3,
                  max_patterns: int = DEFAULT_MAX_PATTERNS) -> Catalog:
    """Exhaustively count every connected typed pattern with up to k
    vertices over the snapshot (schema-driven enumeration, so zero-count
    patterns are represented too)."""
    if k not in (1, 2, 3, 4):
        raise ValueError("k must be in 1..4")
    schema = snap.schema
    seeds = [PatternGraph((PatternVertex("x0", vt),), ())
             for vt in range(len(schema.vertex_types))]
    seen: Dict[str, PatternGraph] = {}
    frontier = []
    for p in seeds:
        code = pattern_canon(p)
        if code not in seen:
            seen[code] = p
            frontier.append(p)
    while frontier:
        nxt = []
        for p in frontier:
            if len(p.edges) >= _max_edges(k):
                continue
            for q in _grow(schema, p):
                if len(q.vertices) > k:
                    continue
                code = pattern_canon(q)
                if code in seen:
                    continue
                if len(seen) >= max_patterns:
                    raise CatalogTooLarge(f"over {max_patterns} patterns")
                seen[code] = q
                nxt.append(q)
        frontier = nxt

    entries = {code: match_count(p, snap) for code, p in seen.items()}
    vertex_counts = {vt: snap.vertex_count(vt)
                     for vt in range(len(schema.vertex_types))}
    edge_counts = {}
    for et, decl in enumerate(schema.edge_types):
        src_ord = schema.vtype_ordinal(decl.src_type)
        total = 0
        for v in snap.vertex_list(src_ord):
            total += snap.degree(v, Direction.OUT, et)
        edge_counts[et] = total
    from ..model import schema_to_json

    return Catalog(k, entries, vertex_counts, edge_counts,
                   schema_to_json(schema))


def _max_edges(k: int) -> int:
    return k * (k - 1) // 2 * 2 + 2  # generous cap; growth stops at k vertices


def _selectivity(catalog: Catalog, schema: PropertyGraphSchema,
                 pv: PatternVertex, bound: bool) -> float:
    """Pattern vertices fixed by a pk-equality predicate or an incoming
    binding count as a single row of their type."""
    if pv.vtype is None:
        return 1.0
    base = max(1, catalog.vertex_counts.get(pv.vtype, 1))
    if bound:
        return 1.0 / base
    if pv.pred is not None and _is_pk_equality(schema, pv):
        return 1.0 / base
    return 1.0


def _is_pk_equality(schema: PropertyGraphSchema, pv: PatternVertex) -> bool:
    decl = schema.vertex_types[pv.vtype]

    def check(e) -> bool:
        if isinstance(e, Cmp) and e.op == "=":
            sides = (e.left, e.right)
            for a, b in (sides, sides[::-1]):
                if (isinstance(a, PropAccess) and a.alias == pv.alias
                        and a.prop == decl.primary_key
                        and isinstance(b, (Literal, Param))):
                    return True
        from ..ir.exprs import BoolOp

        if isinstance(e, BoolOp) and e.op == "and":
            return any(check(a) for a in e.args)
        return False

    return check(pv.pred)


def freq_estimate(catalog: Catalog, pattern: PatternGraph,
                  schema: Optional[PropertyGraphSchema] = None,
                  bound: Tuple[str, ...] = ()) -> int:
    """Exact when |Vp| <= k; otherwise extension-rate chaining: remove a
    degree-minimal vertex that keeps the rest connected and multiply by the
    cheapest incident-edge rate. Predicate selectivity (pk equality, bound
    vertices) scales the estimate."""
    raw = _estimate_bare(catalog, _strip(pattern))
    scale = 1.0
    if schema is not None:
        for pv in pattern.vertices:
            scale *= _selectivity(catalog, schema, pv, pv.alias in bound)
    return int(math.floor(raw * scale))


def _estimate_bare(catalog: Catalog, pattern: PatternGraph) -> float:
    exact = catalog.lookup(pattern)
    if exact is not None:
        return float(exact)
    if len(pattern.vertices) == 1:
        pv = pattern.vertices[0]
        if pv.vtype is None:
            return float(sum(catalog.vertex_counts.values()))
        return float(catalog.vertex_counts.get(pv.vtype, 0))
    victim = _removable_vertex(pattern)
    inner = PatternGraph(
        tuple(v for v in pattern.vertices if v.alias != victim),
        tuple(e for e in pattern.edges
              if victim not in (e.src, e.dst)),
    )
    base = _estimate_bare(catalog, inner)
    rates = []
    for e in pattern.edges:
        if victim not in (e.src, e.dst):
            continue
        other = e.dst if e.src == victim else e.src
        pv_other = pattern.vertex(other)
        pv_victim = pattern.vertex(victim)
        two = PatternGraph(
            (PatternVertex("u", pv_other.vtype), PatternVertex("w", pv_victim.vtype)),
            (PatternEdge("u", "w", e.etype, e.direction) if e.src == other
             else PatternEdge("w", "u", e.etype, e.direction),),
        )
        edge_freq = catalog.lookup(two)
        if edge_freq is None:
            edge_freq = catalog.edge_counts.get(e.etype, 0)
        u_count = (sum(catalog.vertex_counts.values()) if pv_other.vtype is None
                   else catalog.vertex_counts.get(pv_other.vtype, 0))
        rates.append(edge_freq / max(1, u_count))
    return base * (min(rates) if rates else 1.0)


def _removable_vertex(pattern: PatternGraph) -> str:
    """Degree-minimal vertex whose removal keeps the rest connected;
    deterministic tie-break on alias."""
    aliases = [v.alias for v in pattern.vertices]
    adj = {a: set() for a in aliases}
    for e in pattern.edges:
        adj[e.src].add(e.dst)
        adj[e.dst].add(e.src)

    def connected_without(victim: str) -> bool:
        rest = [a for a in aliases if a != victim]
        if not rest:
            return True
        seen = {rest[0]}
        stack = [rest[0]]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt != victim and nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(rest)

    candidates = [a for a in aliases if connected_without(a)]
    return min(candidates, key=lambda a: (pattern.degree_of(a), a))
