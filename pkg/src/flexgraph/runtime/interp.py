"""Row-level operator interpretation shared by both backends.

Multiplicity contract (mirrors the match oracle): expansions over a
'$'-anonymous edge alias yield one representative edge per distinct
neighbor; named aliases yield one row per edge; BOTH-direction expansion
deduplicates by edge identity so self-loops appear once per edge.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Tuple

from ..errors import ExecError
from ..ir.exprs import EvalContext, aggregate_values, eval_expr
from ..ir.ops import FieldSchema
from ..model import Direction, EdgeRef, PathValue, SortKey, VertexRef
from ..retrieval import GraphSnapshot, PropertyPredicate
from .physical import (
    Exchange,
    FilterP,
    FlatMap,
    GroupByP,
    JoinP,
    LimitP,
    MapP,
    PhysicalOp,
    SinkP,
    SortP,
    SourceP,
)


def scan_rows(op: SourceP, snap: GraphSnapshot, params: dict,
              shard: Optional[int] = None, shards: int = 1) -> List[tuple]:
    """Source rows, optionally restricted to one shard's owned vertices."""
    ctx = EvalContext(FieldSchema(()), snap, params)
    if op.pk is not None:
        if op.vtype is None:
            raise ExecError("SOURCE", "pk lookup needs a vertex type")
        from ..errors import NotFound

        key = eval_expr(op.pk, (), ctx)
        try:
            v = snap.lookup_by_pk(op.vtype, key)
        except NotFound:
            return []
        if shard is not None and _owner(snap, v, shards) != shard:
            return []
        rows = [(v,)]
        if op.pred is not None:
            rows = [r for r in rows if _vertex_pred_ok(op, r[0], snap, params)]
        return rows
    vtypes = ([op.vtype] if op.vtype is not None
              else list(range(len(snap.schema.vertex_types))))
    rows: List[tuple] = []
    for vt in vtypes:
        handle = _scan_handle(op, snap, vt, params)
        for v in handle:
            if shard is not None and _owner(snap, v, shards) != shard:
                continue
            rows.append((v,))
    return rows


def _scan_handle(op: SourceP, snap: GraphSnapshot, vt: int, params: dict):
    pred = op.pred
    if pred is None:
        return snap.vertex_list(vt)
    pushable = _as_property_predicate(op.alias, pred, params)
    if pushable is not None and snap.capabilities().vertex_filter_pushdown:
        return snap.filtered_vertex_list(vt, pushable)
    from ..retrieval import emulate_filtered_scan

    if pushable is not None:
        return emulate_filtered_scan(snap, vt, pushable)
    return [v for v in snap.vertex_list(vt)
            if _vertex_pred_ok(op, v, snap, params)]


def _vertex_pred_ok(op: SourceP, v: VertexRef, snap, params) -> bool:
    from ..ir.ops import Field
    from ..model import VERTEX

    schema = FieldSchema((Field(op.alias, VERTEX, op.vtype),))
    ctx = EvalContext(schema, snap, params)
    return bool(eval_expr(op.pred, (v,), ctx))


def _as_property_predicate(alias: str, pred, params: dict):
    """Convert a conjunction of (alias.prop CMP literal/param) into a
    pushdown predicate; None when not expressible."""
    from ..ir.exprs import BoolOp, Cmp, Literal, Param, PropAccess

    clauses = []

    def walk(e) -> bool:
        if isinstance(e, BoolOp) and e.op == "and":
            return all(walk(a) for a in e.args)
        if isinstance(e, Cmp) and e.op in ("=", "!=", "<", "<=", ">", ">="):
            left, right, op_ = e.left, e.right, e.op
            if isinstance(right, PropAccess) and isinstance(left, (Literal, Param)):
                left, right = right, left
                op_ = {"<": ">", "<=": ">=", ">": "<", ">=": "<=",
                       "=": "=", "!=": "!="}[op_]
            if (isinstance(left, PropAccess) and left.alias == alias
                    and isinstance(right, (Literal, Param))):
                const = (right.value if isinstance(right, Literal)
                         else params.get(right.name))
                if isinstance(right, Param) and right.name not in params:
                    return False
                if isinstance(const, list):
                    return False
                clauses.append((left.prop, op_, const))
                return True
        return False

    if walk(pred):
        return PropertyPredicate(clauses)
    return None


def _owner(snap: GraphSnapshot, v: VertexRef, shards: int) -> int:
    caps = snap.capabilities()
    if caps.vertex_to_shard and snap.shards() == shards:
        return snap.shard_of(v)
    return v.idx % shards


def expand_rows(op: FlatMap, rows: Iterable[tuple], schema_in: FieldSchema,
                snap: GraphSnapshot, params: dict) -> List[tuple]:
    if op.op == "path":
        return _path_rows(op, rows, schema_in, snap, params)
    in_pos = schema_in.index(op.in_alias)
    anon = op.out_alias.startswith("$")
    out: List[tuple] = []
    edge_ctx = vertex_ctx = None
    if op.pred is not None or op.vpred is not None:
        from ..ir.ops import Field
        from ..model import EDGE, VERTEX

        probe = FieldSchema(schema_in.fields + (Field(op.out_alias, EDGE
                                                      if op.op == "expand_edge"
                                                      else VERTEX, None),))
        edge_ctx = EvalContext(probe, snap, params)
        vertex_ctx = edge_ctx
    for row in rows:
        anchor = row[in_pos]
        if anchor is None:
            continue
        seen_edges = set()
        seen_nbrs = set()
        for nbr, e in snap.adjacency(anchor, op.direction, op.etype):
            if op.direction is Direction.BOTH:
                k = e.key()
                if k in seen_edges:
                    continue
                seen_edges.add(k)
            if op.op == "expand_edge":
                if op.pred is not None and not eval_expr(
                        op.pred, row + (e,), edge_ctx):
                    continue
                if anon:
                    if nbr in seen_nbrs:
                        continue
                    seen_nbrs.add(nbr)
                out.append(row + (e,))
            else:  # expand_vertex: distinct qualifying neighbors
                if op.pred is not None and not eval_expr(
                        op.pred, row + (e,), edge_ctx):
                    continue
                if nbr in seen_nbrs:
                    continue
                if op.vpred is not None and not eval_expr(
                        op.vpred, row + (nbr,), vertex_ctx):
                    continue
                seen_nbrs.add(nbr)
                out.append(row + (nbr,))
    return out


def _path_rows(op: FlatMap, rows, schema_in, snap, params) -> List[tuple]:
    """Bounded-hop paths in BFS level order; edges never repeat in a path."""
    in_pos = schema_in.index(op.in_alias)
    out: List[tuple] = []
    for row in rows:
        anchor = row[in_pos]
        if anchor is None:
            continue
        level = [(anchor, (anchor,), frozenset())]
        if op.min_hops == 0:
            out.append(row + (PathValue((anchor,)),))
        for depth in range(1, op.max_hops + 1):
            nxt = []
            for end, elems, used in level:
                for nbr, e in snap.adjacency(end, op.direction, op.etype):
                    k = e.key()
                    if k in used:
                        continue
                    nxt.append((nbr, elems + (e, nbr), used | {k}))
            if op.min_hops <= depth:
                out.extend(row + (PathValue(elems),) for _end, elems, _u in nxt)
            level = nxt
            if not level:
                break
    return out


def from_edge_rows(op: MapP, rows, schema_in: FieldSchema,
                   snap: GraphSnapshot) -> List[tuple]:
    pos = schema_in.index(op.edge_alias)
    anchor_pos = (schema_in.index(op.anchor)
                  if op.anchor and op.which == "other" else None)
    out = []
    for row in rows:
        e = row[pos]
        if isinstance(e, PathValue):
            v = e.start if op.which == "start" else e.end
        elif isinstance(e, EdgeRef):
            if op.which == "start":
                v = e.src
            elif op.which == "end":
                v = e.dst
            else:
                if anchor_pos is None:
                    raise ExecError("MAP", "'other' endpoint needs an anchor")
                v = e.dst if e.src == row[anchor_pos] else e.src
        else:
            raise ExecError("MAP", f"not an edge or path: {e!r}")
        out.append(row + (v,))
    return out


def project_rows(op: MapP, rows, schema_in: FieldSchema, snap, params):
    ctx = EvalContext(schema_in, snap, params)
    return [tuple(eval_expr(e, row, ctx) for e, _n in op.items)
            for row in rows]


def filter_rows(pred, rows, schema_in: FieldSchema, snap, params):
    ctx = EvalContext(schema_in, snap, params)
    return [row for row in rows if eval_expr(pred, row, ctx)]


def _freeze(v):
    if isinstance(v, list):
        return ("__list__",) + tuple(_freeze(x) for x in v)
    if isinstance(v, float) and v != v:
        return ("__nan__",)
    return v


def group_rows(op: GroupByP, rows, schema_in: FieldSchema, snap, params):
    ctx = EvalContext(schema_in, snap, params)
    groups: Dict[tuple, list] = {}
    keyvals: Dict[tuple, tuple] = {}
    order: List[tuple] = []
    for row in rows:
        kv = tuple(eval_expr(e, row, ctx) for e, _n in op.keys)
        fk = tuple(_freeze(v) for v in kv)
        if fk not in groups:
            groups[fk] = []
            keyvals[fk] = kv
            order.append(fk)
        groups[fk].append(row)
    if not op.keys and not groups:
        groups[()] = []
        keyvals[()] = ()
        order.append(())
    out = []
    for fk in order:
        members = groups[fk]
        aggs = tuple(
            aggregate_values(a.fn, [eval_expr(a.arg, r, ctx) for r in members])
            for a, _n in op.aggs)
        out.append(keyvals[fk] + aggs)
    return out


def sort_rows(op: SortP, rows, schema_in: FieldSchema, snap, params):
    ctx = EvalContext(schema_in, snap, params)
    decorated = list(rows)
    for key, asc in reversed(op.keys):
        decorated.sort(key=lambda r: SortKey(eval_expr(key, r, ctx)),
                       reverse=not asc)
    if op.limit is not None:
        decorated = decorated[:op.limit]
    return decorated


def join_rows(op: JoinP, left_rows, left_schema: FieldSchema,
              right_rows, right_schema: FieldSchema):
    lpos = {a: left_schema.index(a) for a in op.on}
    rpos = {a: right_schema.index(a) for a in op.on}
    keep = [i for i, f in enumerate(right_schema.fields)
            if f.name not in op.on]
    table: Dict[tuple, list] = {}
    for row in right_rows:
        k = tuple(_freeze(row[rpos[a]]) for a in op.on)
        table.setdefault(k, []).append(tuple(row[i] for i in keep))
    out = []
    for row in left_rows:
        k = tuple(_freeze(row[lpos[a]]) for a in op.on)
        for extra in table.get(k, ()):
            out.append(tuple(row) + extra)
    return out
