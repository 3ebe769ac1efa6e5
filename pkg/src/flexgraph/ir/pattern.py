"""Typed pattern graphs and the brute-force match oracle.

Matching semantics: vertex-injective isomorphic embeddings (stock Cypher
uses edge-isomorphism instead; this artifact standardizes on vertex
injectivity and documents the divergence). Parallel data edges between one
bound vertex pair produce one binding per edge choice when the pattern
edge exports an alias, otherwise one binding.

match_semantics below is deliberately a plain backtracking enumerator over
the retrieval surface: it is the correctness oracle for every optimized
execution path and shares no code with the runtime.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

from ..errors import PlanTypeError
from ..model import Direction, EdgeRef, PropertyGraphSchema, VertexRef
from .exprs import EvalContext, Expr, eval_expr

ANON_PREFIX = "$"


@dataclass(frozen=True)
class PatternVertex:
    alias: str
    vtype: Optional[int] = None  # None = any vertex type
    pred: Optional[Expr] = None

    @property
    def anonymous(self) -> bool:
        return self.alias.startswith(ANON_PREFIX)


@dataclass(frozen=True)
class PatternEdge:
    src: str
    dst: str
    etype: int
    direction: Direction = Direction.OUT  # BOTH = undirected pattern edge
    pred: Optional[Expr] = None
    alias: Optional[str] = None


@dataclass(frozen=True)
class PatternGraph:
    vertices: Tuple[PatternVertex, ...]
    edges: Tuple[PatternEdge, ...]

    def vertex(self, alias: str) -> PatternVertex:
        for pv in self.vertices:
            if pv.alias == alias:
                return pv
        raise KeyError(alias)

    def aliases(self) -> List[str]:
        return [pv.alias for pv in self.vertices]

    def exported_aliases(self) -> List[str]:
        out = [pv.alias for pv in self.vertices if not pv.anonymous]
        out.extend(pe.alias for pe in self.edges
                   if pe.alias and not pe.alias.startswith(ANON_PREFIX))
        return out

    def validate(self, schema: PropertyGraphSchema) -> None:
        seen = set()
        for pv in self.vertices:
            if pv.alias in seen:
                raise PlanTypeError(pv.alias, expected="unique alias")
            seen.add(pv.alias)
        for pe in self.edges:
            if pe.alias:
                if pe.alias in seen:
                    raise PlanTypeError(pe.alias, expected="unique alias")
                seen.add(pe.alias)
            if pe.src not in {v.alias for v in self.vertices}:
                raise PlanTypeError(pe.src)
            if pe.dst not in {v.alias for v in self.vertices}:
                raise PlanTypeError(pe.dst)
            decl = schema.edge_types[pe.etype]
            for end_alias, want in self._endpoint_types(pe, schema):
                pv = self.vertex(end_alias)
                if pv.vtype is not None and want is not None and pv.vtype != want:
                    raise PlanTypeError(
                        end_alias,
                        expected=schema.vertex_types[want].name,
                        found=schema.vertex_types[pv.vtype].name)
        if len(self.vertices) > 1 and not self._connected():
            raise PlanTypeError("<pattern>", expected="a connected pattern")

    def _endpoint_types(self, pe: PatternEdge, schema):
        decl = schema.edge_types[pe.etype]
        s = schema.vtype_ordinal(decl.src_type)
        d = schema.vtype_ordinal(decl.dst_type)
        if pe.direction is Direction.OUT:
            return ((pe.src, s), (pe.dst, d))
        if pe.direction is Direction.IN:
            return ((pe.src, d), (pe.dst, s))
        # undirected: endpoint types only constrained when src/dst types equal
        if s == d:
            return ((pe.src, s), (pe.dst, s))
        return ((pe.src, None), (pe.dst, None))

    def _connected(self) -> bool:
        if not self.vertices:
            return True
        adj: Dict[str, set] = {v.alias: set() for v in self.vertices}
        for pe in self.edges:
            adj[pe.src].add(pe.dst)
            adj[pe.dst].add(pe.src)
        seen = {self.vertices[0].alias}
        stack = [self.vertices[0].alias]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(self.vertices)

    def degree_of(self, alias: str) -> int:
        return sum(1 for pe in self.edges if alias in (pe.src, pe.dst))


class _SingleElementSchema:
    """Minimal field schema shim so element predicates can use eval_expr."""

    def __init__(self, alias: str):
        from .ops import Field
        from ..model import VERTEX

        self.fields = (Field(alias, VERTEX, None),)


def _elem_pred_ok(pred: Optional[Expr], alias: str, element, snap, params) -> bool:
    if pred is None:
        return True
    ctx = EvalContext(_SingleElementSchema(alias), snap, params)
    return bool(eval_expr(pred, (element,), ctx))


def _vertex_candidates(snap, pv: PatternVertex, params) -> Iterator[VertexRef]:
    schema = snap.schema
    vtypes = ([pv.vtype] if pv.vtype is not None
              else range(len(schema.vertex_types)))
    for vt in vtypes:
        for v in snap.vertex_list(vt):
            if _elem_pred_ok(pv.pred, pv.alias, v, snap, params):
                yield v


def _edge_matches(snap, pe: PatternEdge, a: VertexRef, b: VertexRef,
                  params) -> List[EdgeRef]:
    """Data edges realizing pattern edge a->b (pattern direction applied)."""
    out: List[EdgeRef] = []
    seen: set = set()
    dirs = ((Direction.OUT,) if pe.direction is Direction.OUT
            else (Direction.IN,) if pe.direction is Direction.IN
            else (Direction.OUT, Direction.IN))
    for d in dirs:
        for nbr, e in snap.adjacency(a, d, pe.etype):
            if nbr == b and e.key() not in seen:
                seen.add(e.key())
                if _elem_pred_ok(pe.pred, pe.alias or "$e", e, snap, params):
                    out.append(e)
    return out


def _plan_edge_order(pattern: PatternGraph, bound: set) -> List[PatternEdge]:
    """Order edges so each has at least one already-bound endpoint."""
    remaining = list(pattern.edges)
    covered = set(bound)
    if not covered and pattern.vertices:
        covered.add(pattern.vertices[0].alias)
    ordered: List[PatternEdge] = []
    while remaining:
        for i, pe in enumerate(remaining):
            if pe.src in covered or pe.dst in covered:
                ordered.append(remaining.pop(i))
                covered.add(pe.src)
                covered.add(pe.dst)
                break
        else:  # disconnected from covered part: start a new component
            pe = remaining.pop(0)
            ordered.append(pe)
            covered.add(pe.src)
            covered.add(pe.dst)
    return ordered


def match_semantics(pattern: PatternGraph, snap, bound: Optional[dict] = None,
                    params: Optional[dict] = None) -> List[dict]:
    """Enumerate all embeddings as alias->ref dicts (edge aliases included
    when exported). `bound` pre-binds pattern vertices to data vertices."""
    pattern.validate(snap.schema)
    params = params or {}
    results: List[dict] = []

    binding: Dict[str, VertexRef] = {}
    used: set = set()
    if bound:
        for alias, v in bound.items():
            pv = pattern.vertex(alias)
            if pv.vtype is not None and v.vtype != pv.vtype:
                return []
            if not _elem_pred_ok(pv.pred, alias, v, snap, params):
                return []
            if v in used:
                return []
            binding[alias] = v
            used.add(v)

    edges = _plan_edge_order(pattern, set(binding))
    edge_bindings: Dict[str, EdgeRef] = {}

    def emit() -> None:
        out = dict(binding)
        out.update(edge_bindings)
        results.append(out)

    def solve(i: int) -> None:
        if i == len(edges):
            # isolated pattern vertices (no incident edges) still need binding
            free = [pv for pv in pattern.vertices if pv.alias not in binding]
            if not free:
                emit()
                return
            pv = free[0]
            for v in _vertex_candidates(snap, pv, params):
                if v in used:
                    continue
                binding[pv.alias] = v
                used.add(v)
                solve(i)
                used.discard(v)
                del binding[pv.alias]
            return
        pe = edges[i]
        s_bound = pe.src in binding
        d_bound = pe.dst in binding
        if s_bound and d_bound:
            hits = _edge_matches(snap, pe, binding[pe.src], binding[pe.dst], params)
            if pe.alias:
                for e in hits:
                    edge_bindings[pe.alias] = e
                    solve(i + 1)
                    del edge_bindings[pe.alias]
            elif hits:
                solve(i + 1)
            return
        if not s_bound and not d_bound:
            pv = pattern.vertex(pe.src)
            for v in _vertex_candidates(snap, pv, params):
                if v in used:
                    continue
                binding[pe.src] = v
                used.add(v)
                solve(i)  # re-enter with src bound
                used.discard(v)
                del binding[pe.src]
            return
        anchor_alias, free_alias = (pe.src, pe.dst) if s_bound else (pe.dst, pe.src)
        anchor = binding[anchor_alias]
        pv = pattern.vertex(free_alias)
        if pe.direction is Direction.BOTH:
            dirs = (Direction.OUT, Direction.IN)
        elif (pe.direction is Direction.OUT) == s_bound:
            dirs = (Direction.OUT,)
        else:
            dirs = (Direction.IN,)
        seen_edges: set = set()
        seen_nbrs: set = set()
        for d in dirs:
            for nbr, e in snap.adjacency(anchor, d, pe.etype):
                if e.key() in seen_edges:
                    continue
                seen_edges.add(e.key())
                if pv.vtype is not None and nbr.vtype != pv.vtype:
                    continue
                if nbr in used:
                    continue
                if not _elem_pred_ok(pe.pred, pe.alias or "$e", e, snap, params):
                    continue
                if not _elem_pred_ok(pv.pred, pv.alias, nbr, snap, params):
                    continue
                if pe.alias is None:
                    if nbr in seen_nbrs:
                        continue  # parallel edges collapse without an alias
                    seen_nbrs.add(nbr)
                else:
                    edge_bindings[pe.alias] = e
                binding[free_alias] = nbr
                used.add(nbr)
                solve(i + 1)
                used.discard(nbr)
                del binding[free_alias]
                if pe.alias is not None:
                    del edge_bindings[pe.alias]
    solve(0)
    return results


def match_count(pattern: PatternGraph, snap, params: Optional[dict] = None) -> int:
    """Embedding count; same semantics as match_semantics."""
    return len(match_semantics(pattern, snap, params=params))
