"""Semantics-preserving rewrite rules.

FilterPushIntoMatch moves single-alias conjuncts of a SELECT into the
pattern (or scan/expand) predicate of the operator that binds the alias;
multi-alias conjuncts stay in a residual SELECT. EdgeVertexFusion merges
an EXPAND_EDGE + GET_VERTEX pair into a fused EXPAND_VERTEX when the edge
alias is plan-internal and dead, and (in multi-shard plans) when no
endpoint property predicate would have to travel with the fusion.
"""

from __future__ import annotations

from dataclasses import replace as _dcreplace
from typing import List, Optional, Tuple

from ..ir import (
    BoolOp,
    ExpandEdge,
    ExpandVertex,
    Expr,
    GetVertex,
    Group,
    Join,
    LimitOp,
    Literal,
    LogicalDag,
    Match,
    Order,
    PathExpand,
    PatternEdge,
    PatternGraph,
    PatternVertex,
    Project,
    ScanSpec,
    Select,
)
from ..ir.exprs import expr_aliases, has_aggregate


def _conjuncts(e: Expr) -> List[Expr]:
    if isinstance(e, BoolOp) and e.op == "and":
        out: List[Expr] = []
        for a in e.args:
            out.extend(_conjuncts(a))
        return out
    return [e]


def _conjoin(factors: List[Expr]) -> Optional[Expr]:
    if not factors:
        return None
    if len(factors) == 1:
        return factors[0]
    return BoolOp("and", tuple(factors))


def _and_opt(a: Optional[Expr], b: Expr) -> Expr:
    return b if a is None else BoolOp("and", (a, b))


#: ops a filter may slide upwards past (they neither drop, rename, nor
#: aggregate existing fields, and carry no cardinality cutoffs)
def _transparent(op) -> bool:
    if isinstance(op, (Select, ExpandEdge, ExpandVertex, PathExpand)):
        return True
    if isinstance(op, GetVertex):
        return True
    if isinstance(op, Order):
        return op.limit is None
    return False


def _try_push(dag: LogicalDag, select_id: int, factor: Expr,
              alias: str) -> bool:
    """Walk producers upward; merge the factor where the alias is bound."""
    cur = dag.predecessors(select_id)
    while len(cur) == 1:
        oid = cur[0]
        op = dag.ops[oid]
        if isinstance(op, Match):
            pat = op.pattern
            if any(pv.alias == alias for pv in pat.vertices):
                new_vs = tuple(
                    _dcreplace(pv, pred=_and_opt(pv.pred, factor))
                    if pv.alias == alias else pv
                    for pv in pat.vertices)
                dag.replace(oid, _dcreplace(op, pattern=PatternGraph(
                    new_vs, pat.edges)))
                return True
            if any(pe.alias == alias for pe in pat.edges):
                new_es = tuple(
                    _dcreplace(pe, pred=_and_opt(pe.pred, factor))
                    if pe.alias == alias else pe
                    for pe in pat.edges)
                dag.replace(oid, _dcreplace(op, pattern=PatternGraph(
                    pat.vertices, new_es)))
                return True
            if alias in op.bound:
                cur = dag.predecessors(oid)
                continue
            return False
        if isinstance(op, GetVertex) and op.scan is not None \
                and op.out_alias == alias:
            dag.replace(oid, _dcreplace(op, scan=_dcreplace(
                op.scan, pred=_and_opt(op.scan.pred, factor))))
            return True
        if isinstance(op, GetVertex) and op.from_edge is not None \
                and op.out_alias == alias:
            dag.replace(oid, _dcreplace(op, vpred=_and_opt(op.vpred, factor)))
            return True
        if isinstance(op, ExpandVertex) and op.out_alias == alias:
            dag.replace(oid, _dcreplace(op, vpred=_and_opt(op.vpred, factor)))
            return True
        if isinstance(op, ExpandEdge) and op.out_alias == alias:
            dag.replace(oid, _dcreplace(op, pred=_and_opt(op.pred, factor)))
            return True
        if not _transparent(op) or (hasattr(op, "out_alias")
                                    and getattr(op, "out_alias") == alias):
            return False
        cur = dag.predecessors(oid)
    return False


def rule_filter_push_into_match(dag: LogicalDag, shards: int = 1) -> LogicalDag:
    """Returns a rewritten clone; the input DAG is left alone."""
    out = dag.clone()
    changed = True
    while changed:
        changed = False
        for oid in list(out.ops):
            op = out.ops.get(oid)
            if not isinstance(op, Select):
                continue
            residual: List[Expr] = []
            moved = False
            for factor in _conjuncts(op.pred):
                if isinstance(factor, Literal) and factor.value is True:
                    moved = True  # trivially true: drop
                    continue
                aliases = expr_aliases(factor)
                if len(aliases) == 1 and not has_aggregate(factor):
                    if _try_push(out, oid, factor, next(iter(aliases))):
                        moved = True
                        continue
                residual.append(factor)
            if not moved:
                continue
            changed = True
            pred = _conjoin(residual)
            if pred is None:
                out.remove_unary(oid)
            else:
                out.replace(oid, Select(pred))
    return out


def _has_prop_access(e: Optional[Expr]) -> bool:
    if e is None:
        return False
    from ..ir import PropAccess
    from ..ir.exprs import Aggregate, Arith, Cmp as _Cmp, InList

    if isinstance(e, PropAccess):
        return True
    if isinstance(e, (Arith, _Cmp)):
        return _has_prop_access(e.left) or _has_prop_access(e.right)
    if isinstance(e, BoolOp):
        return any(_has_prop_access(a) for a in e.args)
    if isinstance(e, InList):
        return _has_prop_access(e.item) or _has_prop_access(e.items)
    if isinstance(e, Aggregate):
        return _has_prop_access(e.arg)
    return False


def _alias_referenced_downstream(dag: LogicalDag, start: int, alias: str) -> bool:
    seen = set()
    stack = list(dag.successors(start))
    while stack:
        oid = stack.pop()
        if oid in seen:
            continue
        seen.add(oid)
        op = dag.ops[oid]
        for e in op.exprs():
            if alias in expr_aliases(e):
                return True
        if isinstance(op, GetVertex) and op.from_edge is not None \
                and op.from_edge.edge_alias == alias:
            return True
        if isinstance(op, Join) and alias in op.on:
            return True
        stack.extend(dag.successors(oid))
    return False


def rule_edge_vertex_fusion(dag: LogicalDag, shards: int = 1) -> LogicalDag:
    """Fuse EXPAND_EDGE + GET_VERTEX{FromEdge} pairs into EXPAND_VERTEX."""
    out = dag.clone()
    changed = True
    while changed:
        changed = False
        for oid in list(out.ops):
            op = out.ops.get(oid)
            if not isinstance(op, ExpandEdge):
                continue
            nid = out.single_consumer(oid)
            if nid is None:
                continue
            nxt = out.ops[nid]
            if not (isinstance(nxt, GetVertex) and nxt.from_edge is not None
                    and nxt.from_edge.edge_alias == op.out_alias):
                continue
            which = nxt.from_edge.which
            from ..model import Direction

            neighbor_facing = (
                which == "other"
                or (which == "end" and op.direction is Direction.OUT)
                or (which == "start" and op.direction is Direction.IN))
            if not neighbor_facing:
                continue
            # (a) plan-internal and dead edge alias only: a named alias
            # keeps per-edge multiplicity and may be observed downstream
            if not op.out_alias.startswith("$"):
                continue
            if _alias_referenced_downstream(out, nid, op.out_alias):
                continue
            # (b) multi-shard fusion cannot carry an endpoint property
            # predicate (property retrieval happens on the wrong shard);
            # plain ref comparisons (injectivity) travel fine
            if shards > 1 and _has_prop_access(nxt.vpred):
                continue
            if len(out.predecessors(nid)) != 1:
                continue
            fused = ExpandVertex(op.in_alias, op.direction, op.etype,
                                 nxt.out_alias, vpred=nxt.vpred,
                                 edge_pred=op.pred)
            preds = out.predecessors(oid)
            succs = out.successors(nid)
            out.edges = [(p, c) for p, c in out.edges
                         if p not in (oid, nid) and c not in (oid, nid)]
            del out.ops[oid]
            del out.ops[nid]
            fid = out._next_id
            out._next_id += 1
            out.ops[fid] = fused
            for p in preds:
                out.edges.append((p, fid))
            for c in succs:
                out.edges.append((fid, c))
            out._recompute()
            changed = True
            break
    return out
