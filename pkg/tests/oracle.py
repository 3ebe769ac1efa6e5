"""Reference executor: brute-force match_semantics plus naive relational
post-processing over the UNOPTIMIZED logical DAG. Shares nothing with the
runtime's operator interpreter; this is the ground truth for every
optimized execution path."""

from __future__ import annotations

from collections import Counter
from typing import Dict, List, Optional, Tuple

from flexgraph.ir import (
    ExpandEdge,
    ExpandVertex,
    GetVertex,
    Group,
    Join,
    LimitOp,
    LogicalDag,
    Match,
    Order,
    PathExpand,
    Project,
    Select,
    Sink,
)
from flexgraph.ir.exprs import EvalContext, aggregate_values, eval_expr
from flexgraph.ir.pattern import match_semantics
from flexgraph.model import Direction, PathValue, SortKey


def execute_reference(dag: LogicalDag, snap, params: Optional[dict] = None):
    """Returns (columns, rows)."""
    params = params or {}
    order = dag.topo_order()
    rows_of: Dict[int, List[tuple]] = {}
    for oid in order:
        op = dag.ops[oid]
        preds = dag.predecessors(oid)
        in_rows = rows_of[preds[0]] if preds else None
        in_schema = dag.schema_of(preds[0]) if preds else None
        out_schema = dag.schema_of(oid)
        ctx = EvalContext(in_schema, snap, params) if in_schema else None

        if isinstance(op, GetVertex) and op.scan is not None:
            out = []
            vtypes = ([op.scan.vtype] if op.scan.vtype is not None
                      else range(len(snap.schema.vertex_types)))
            base_rows = in_rows if in_rows is not None else [()]
            for base in base_rows:
                for vt in vtypes:
                    for v in snap.vertex_list(vt):
                        row = base + (v,)
                        if op.scan.pred is not None or op.scan.pk is not None:
                            cctx = EvalContext(out_schema, snap, params)
                            if op.scan.pk is not None:
                                key = eval_expr(op.scan.pk, row, cctx)
                                from flexgraph.model import value_eq

                                decl = snap.schema.vertex_types[vt]
                                if not value_eq(
                                        snap.vertex_property(v, decl.primary_key),
                                        key):
                                    continue
                            if op.scan.pred is not None and not eval_expr(
                                    op.scan.pred, row, cctx):
                                continue
                        out.append(row)
        elif isinstance(op, Match):
            out = []
            new_fields = [f.name for f in out_schema.fields
                          if in_schema is None
                          or in_schema.find(f.name) is None]
            base_rows = in_rows if in_rows is not None else [()]
            for base in base_rows:
                bound = {}
                if in_schema is not None:
                    pos = {f.name: i for i, f in enumerate(in_schema.fields)}
                    bound = {a: base[pos[a]] for a in op.bound}
                for b in match_semantics(op.pattern, snap, bound or None,
                                         params):
                    out.append(base + tuple(b[a] for a in new_fields))
        elif isinstance(op, PathExpand):
            pos = in_schema.index(op.in_alias)
            out = []
            for base in in_rows:
                for path in _paths(snap, base[pos], op):
                    out.append(base + (path,))
        elif isinstance(op, GetVertex) and op.from_edge is not None:
            pos = in_schema.index(op.from_edge.edge_alias)
            anchor_pos = (in_schema.index(op.from_edge.anchor)
                          if op.from_edge.anchor else None)
            out = []
            for base in in_rows:
                e = base[pos]
                if isinstance(e, PathValue):
                    v = e.start if op.from_edge.which == "start" else e.end
                elif op.from_edge.which == "start":
                    v = e.src
                elif op.from_edge.which == "end":
                    v = e.dst
                else:
                    v = e.dst if e.src == base[anchor_pos] else e.src
                row = base + (v,)
                if op.vpred is not None:
                    cctx = EvalContext(out_schema, snap, params)
                    if not eval_expr(op.vpred, row, cctx):
                        continue
                out.append(row)
        elif isinstance(op, (ExpandEdge, ExpandVertex)):
            raise AssertionError("reference executor runs unoptimized DAGs")
        elif isinstance(op, Project):
            out = [tuple(eval_expr(e, r, ctx) for e, _n in op.items)
                   for r in in_rows]
        elif isinstance(op, Select):
            out = [r for r in in_rows if eval_expr(op.pred, r, ctx)]
        elif isinstance(op, Order):
            out = list(in_rows)
            for key, asc in reversed(op.keys):
                out.sort(key=lambda r: SortKey(eval_expr(key, r, ctx)),
                         reverse=not asc)
            if op.limit is not None:
                out = out[:op.limit]
        elif isinstance(op, Group):
            groups: Dict[str, list] = {}
            keyvals: Dict[str, tuple] = {}
            for r in in_rows:
                kv = tuple(eval_expr(e, r, ctx) for e, _n in op.keys)
                fk = repr(kv)
                groups.setdefault(fk, []).append(r)
                keyvals[fk] = kv
            if not op.keys and not groups:
                groups[""] = []
                keyvals[""] = ()
            out = []
            for fk, members in groups.items():
                aggs = tuple(aggregate_values(
                    a.fn, [eval_expr(a.arg, r, ctx) for r in members])
                    for a, _n in op.aggs)
                out.append(keyvals[fk] + aggs)
        elif isinstance(op, LimitOp):
            out = list(in_rows)[:op.n]
        elif isinstance(op, Join):
            left, right = preds
            lr, rr = rows_of[left], rows_of[right]
            ls, rs = dag.schema_of(left), dag.schema_of(right)
            lpos = {f.name: i for i, f in enumerate(ls.fields)}
            rpos = {f.name: i for i, f in enumerate(rs.fields)}
            keep = [i for i, f in enumerate(rs.fields) if f.name not in op.on]
            out = []
            from flexgraph.model import value_eq

            for a in lr:
                for b in rr:
                    if all(value_eq(a[lpos[k]], b[rpos[k]]) for k in op.on):
                        out.append(a + tuple(b[i] for i in keep))
        elif isinstance(op, Sink):
            out = in_rows
        else:
            raise AssertionError(f"unhandled op {op.kind}")
        rows_of[oid] = out

    sink = dag.sink_id()
    cols = [f.name for f in dag.schema_of(sink).fields]
    return cols, rows_of[sink]


def _paths(snap, anchor, op: PathExpand):
    out = []
    if op.min_hops == 0:
        out.append(PathValue((anchor,)))
    frontier = [((anchor,), frozenset())]
    for depth in range(1, op.max_hops + 1):
        nxt = []
        for elems, used in frontier:
            for nbr, e in snap.adjacency(elems[-1], op.direction, op.etype):
                if e.key() in used:
                    continue
                nxt.append((elems + (e, nbr), used | {e.key()}))
        if depth >= op.min_hops:
            out.extend(PathValue(elems) for elems, _u in nxt)
        frontier = nxt
    return out


def freeze_rows(rows) -> Counter:
    """Multiset of rows with order-insensitive, hash-safe values."""

    def fz(v):
        if isinstance(v, list):
            return ("L",) + tuple(fz(x) for x in v)
        if isinstance(v, float) and v != v:
            return ("nan",)
        return v

    return Counter(tuple(fz(v) for v in r) for r in rows)
