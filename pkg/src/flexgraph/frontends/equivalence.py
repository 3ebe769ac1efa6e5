"""Test-only structural equivalence of logical DAGs.

Both frontends and the optimizer produce different surface encodings of
the same plan; this normalizes them to a canonical trace: chain-shaped
MATCH blocks unroll into scan+expand sequences, EXPAND_EDGE+GET_VERTEX
pairs with dead edge aliases collapse into fused expands, and aliases are
renamed in first-use order.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Dict, List, Optional, Tuple

from ..ir import (
    Aggregate,
    Arith,
    BoolOp,
    Cmp,
    Expr,
    ExpandEdge,
    ExpandVertex,
    FieldRef,
    FromEdgeSpec,
    GetVertex,
    InList,
    Literal,
    LogicalDag,
    Match,
    Param,
    PropAccess,
    ScanSpec,
    Select,
)
from ..ir.ops import LogicalOp
from ..model import Direction


def _rename_expr(e: Expr, ren: Dict[str, str]) -> object:
    if isinstance(e, Literal):
        return ("lit", repr(e.value))
    if isinstance(e, Param):
        return ("param", e.name)
    if isinstance(e, FieldRef):
        return ("field", ren.get(e.alias, e.alias))
    if isinstance(e, PropAccess):
        return ("prop", ren.get(e.alias, e.alias), e.prop)
    if isinstance(e, Arith):
        return ("arith", e.op, _rename_expr(e.left, ren), _rename_expr(e.right, ren))
    if isinstance(e, Cmp):
        return ("cmp", e.op, _rename_expr(e.left, ren), _rename_expr(e.right, ren))
    if isinstance(e, BoolOp):
        parts = [_rename_expr(a, ren) for a in e.args]
        if e.op in ("and", "or"):
            parts = sorted(map(repr, parts))
        return ("bool", e.op, tuple(parts))
    if isinstance(e, InList):
        return ("in", _rename_expr(e.item, ren), _rename_expr(e.items, ren))
    if isinstance(e, Aggregate):
        return ("agg", e.fn, _rename_expr(e.arg, ren))
    return ("other", repr(e))


def _linear_ops(dag: LogicalDag) -> Optional[List[LogicalOp]]:
    """Topological op list for single-chain DAGs (None when branching)."""
    order = dag.topo_order()
    for oid in order:
        if len(dag.successors(oid)) > 1 or len(dag.predecessors(oid)) > 1:
            return None
    return [dag.ops[oid] for oid in order]


def _unroll_match(op: Match) -> Optional[List[LogicalOp]]:
    """Chain-shaped patterns become scan + expand pairs, walking from the
    first pattern vertex."""
    p = op.pattern
    if op.bound:
        return None
    deg = {v.alias: 0 for v in p.vertices}
    for e in p.edges:
        deg[e.src] += 1
        deg[e.dst] += 1
    if any(d > 2 for d in deg.values()):
        return None
    if len(p.edges) != len(p.vertices) - 1:
        return None  # not a tree-chain (cycle or forest)
    start = p.vertices[0].alias
    if deg[start] > 1:
        return None
    out: List[LogicalOp] = []
    first = p.vertex(start)
    out.append(GetVertex(first.alias, scan=ScanSpec(first.vtype, first.pred)))
    used: set = set()
    cur = start
    remaining = list(p.edges)
    while remaining:
        nxt = None
        for e in remaining:
            if cur in (e.src, e.dst):
                nxt = e
                break
        if nxt is None:
            return None
        remaining.remove(nxt)
        forward = nxt.src == cur
        direction = nxt.direction
        if not forward:
            direction = {Direction.OUT: Direction.IN, Direction.IN: Direction.OUT,
                         Direction.BOTH: Direction.BOTH}[direction]
        other = nxt.dst if forward else nxt.src
        pv = p.vertex(other)
        edge_alias = nxt.alias or f"$eq{len(out)}"
        out.append(ExpandEdge(cur, direction, nxt.etype, edge_alias,
                              pred=nxt.pred))
        out.append(GetVertex(pv.alias, from_edge=FromEdgeSpec(edge_alias, "other"),
                             vpred=pv.pred))
        cur = other
    return out


def _canonical_trace(dag: LogicalDag) -> Optional[list]:
    ops = _linear_ops(dag)
    if ops is None:
        return None
    expanded: List[LogicalOp] = []
    for op in ops:
        if isinstance(op, Match):
            unrolled = _unroll_match(op)
            if unrolled is None:
                expanded.append(op)
            else:
                expanded.extend(unrolled)
        else:
            expanded.append(op)

    # collapse expand-edge + get-vertex pairs whose edge alias is dead
    def alias_used_later(alias: str, idx: int) -> bool:
        for later in expanded[idx + 1:]:
            for e in later.exprs():
                from ..ir.exprs import expr_aliases

                if alias in expr_aliases(e):
                    return True
            if isinstance(later, GetVertex) and later.from_edge is not None \
                    and later.from_edge.edge_alias == alias:
                return True
        return False

    fused: List[LogicalOp] = []
    i = 0
    while i < len(expanded):
        op = expanded[i]
        nxt = expanded[i + 1] if i + 1 < len(expanded) else None
        if (isinstance(op, ExpandEdge) and isinstance(nxt, GetVertex)
                and nxt.from_edge is not None
                and nxt.from_edge.edge_alias == op.out_alias
                and nxt.from_edge.which in ("other", "end")
                and not alias_used_later(op.out_alias, i + 1)):
            fused.append(ExpandVertex(op.in_alias, op.direction, op.etype,
                                      nxt.out_alias, vpred=nxt.vpred,
                                      edge_pred=op.pred))
            i += 2
            continue
        fused.append(op)
        i += 1

    # merge SELECTs that immediately follow an expand into its vpred
    merged: List[LogicalOp] = []
    for op in fused:
        if (isinstance(op, Select) and merged
                and isinstance(merged[-1], ExpandVertex)):
            from ..ir.exprs import expr_aliases

            prev = merged[-1]
            if expr_aliases(op.pred) <= {prev.out_alias}:
                vp = (op.pred if prev.vpred is None
                      else BoolOp("and", (prev.vpred, op.pred)))
                merged[-1] = replace(prev, vpred=vp)
                continue
        merged.append(op)

    # canonical alias renaming in first-appearance order
    ren: Dict[str, str] = {}

    def rn(alias: Optional[str]) -> Optional[str]:
        if alias is None:
            return None
        if alias not in ren:
            ren[alias] = f"v{len(ren)}"
        return ren[alias]

    trace: list = []
    for op in merged:
        if isinstance(op, GetVertex) and op.scan is not None:
            trace.append(("scan", op.scan.vtype, rn(op.out_alias),
                          _opt_expr(op.scan.pred, ren),
                          _opt_expr(op.scan.pk, ren),
                          _opt_expr(op.vpred, ren)))
        elif isinstance(op, GetVertex):
            trace.append(("from_edge", ren.get(op.from_edge.edge_alias,
                                               op.from_edge.edge_alias),
                          op.from_edge.which, rn(op.out_alias),
                          _opt_expr(op.vpred, ren)))
        elif isinstance(op, ExpandEdge):
            trace.append(("expand_edge", ren.get(op.in_alias, op.in_alias),
                          op.direction.value, op.etype, rn(op.out_alias),
                          _opt_expr(op.pred, ren)))
        elif isinstance(op, ExpandVertex):
            trace.append(("expand_vertex", ren.get(op.in_alias, op.in_alias),
                          op.direction.value, op.etype, rn(op.out_alias),
                          _opt_expr(op.vpred, ren), _opt_expr(op.edge_pred, ren)))
        elif isinstance(op, Select):
            trace.append(("select", _rename_expr(op.pred, ren)))
        else:
            doc = op.to_json()
            trace.append((op.kind, _json_renamed(doc, op, ren)))
    return trace


def _opt_expr(e: Optional[Expr], ren) -> object:
    return None if e is None else _rename_expr(e, ren)


def _json_renamed(doc: dict, op: LogicalOp, ren: Dict[str, str]) -> str:
    """Fallback canonical form: json with exprs renamed via op.exprs order."""
    import json as _json

    renamed = [repr(_rename_expr(e, ren)) for e in op.exprs()]
    doc = dict(doc)
    doc["_exprs"] = renamed
    for k in ("pred", "vpred", "edge_pred", "items", "keys", "aggs", "pk"):
        doc.pop(k, None)
    return _json.dumps(doc, sort_keys=True, default=str)


def frontend_equivalence(dag1: LogicalDag, dag2: LogicalDag) -> bool:
    """True when the DAGs are isomorphic after normalization; test use only."""
    t1, t2 = _canonical_trace(dag1), _canonical_trace(dag2)
    if t1 is None or t2 is None:
        return dag1.to_json() == dag2.to_json()
    return t1 == t2
