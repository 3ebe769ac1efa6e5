"""The optimization pipeline: filter push, match-order expansion, fusion,
then a fixpoint of the rewrite rules."""

from __future__ import annotations

from dataclasses import replace as _dcreplace
from typing import Dict, List, Optional, Tuple

from ..ir import (
    BoolOp,
    Cmp,
    ExpandEdge,
    Expr,
    FieldRef,
    FromEdgeSpec,
    GetVertex,
    Literal,
    LogicalDag,
    Match,
    Param,
    PatternGraph,
    PropAccess,
    ScanSpec,
    Select,
)
from ..ir.ops import LogicalOp
from ..model import Direction, PropertyGraphSchema
from .catalog import Catalog
from .planner import ExpandStep, MatchPlan, cbo_order
from .rules import rule_edge_vertex_fusion, rule_filter_push_into_match


def _split_pk_pred(schema: PropertyGraphSchema, vtype: Optional[int],
                   alias: str, pred: Optional[Expr]):
    """Split a vertex predicate into (pk-equality value expr, residual)."""
    if pred is None or vtype is None:
        return None, pred
    pk = schema.vertex_types[vtype].primary_key
    factors: List[Expr] = []

    def flat(e: Expr):
        if isinstance(e, BoolOp) and e.op == "and":
            for a in e.args:
                flat(a)
        else:
            factors.append(e)

    flat(pred)
    pk_expr = None
    rest: List[Expr] = []
    for f in factors:
        if pk_expr is None and isinstance(f, Cmp) and f.op == "=":
            sides = ((f.left, f.right), (f.right, f.left))
            hit = False
            for a, b in sides:
                if (isinstance(a, PropAccess) and a.alias == alias
                        and a.prop == pk and isinstance(b, (Literal, Param))):
                    pk_expr = b
                    hit = True
                    break
            if hit:
                continue
        rest.append(f)
    residual = None
    for f in rest:
        residual = f if residual is None else BoolOp("and", (residual, f))
    return pk_expr, residual


def _naive_plan(pattern: PatternGraph, bound: Tuple[str, ...]) -> MatchPlan:
    """Appearance-order plan used when the CBO is toggled off."""
    order = [a for a in (list(bound) or []) if True]
    seen = set(bound)
    for pv in pattern.vertices:
        if pv.alias not in seen:
            order.append(pv.alias)
            seen.add(pv.alias)
    covered: set = set(bound)
    used_edges: set = set()
    steps: List[ExpandStep] = []
    start = None if bound else order[0]
    if not bound:
        covered = {order[0]}
    remaining = [a for a in order if a not in covered]
    # closes inside the initial bound set first
    for i, e in enumerate(pattern.edges):
        if e.src in covered and e.dst in covered and i not in used_edges:
            used_edges.add(i)
            steps.append(ExpandStep(e.src, e, e.dst, "close", 0))
    while remaining:
        progressed = False
        for a in list(remaining):
            incident = [
                (i, e) for i, e in enumerate(pattern.edges)
                if i not in used_edges and a in (e.src, e.dst)
                and (e.dst if e.src == a else e.src) in covered
            ]
            if not incident:
                continue
            first = True
            for i, e in incident:
                used_edges.add(i)
                frm = e.dst if e.src == a else e.src
                steps.append(ExpandStep(frm, e, a, "new" if first else "close", 0))
                first = False
            covered.add(a)
            remaining.remove(a)
            progressed = True
            break
        if not progressed:  # disconnected pattern part (validated earlier)
            break
    return MatchPlan(start, tuple(bound), steps, 0, 0)


def plan_to_ops(pattern: PatternGraph, plan: MatchPlan,
                schema: PropertyGraphSchema) -> List[LogicalOp]:
    """Expand a match plan into scan / expand / filter operators."""
    ops: List[LogicalOp] = []
    anon_n = 0

    def anon(prefix: str) -> str:
        nonlocal anon_n
        anon_n += 1
        return f"${prefix}{anon_n}"

    bound_order: List[str] = list(plan.bound)
    if plan.start is not None:
        pv = pattern.vertex(plan.start)
        pk_expr, residual = _split_pk_pred(schema, pv.vtype, pv.alias, pv.pred)
        ops.append(GetVertex(pv.alias, scan=ScanSpec(pv.vtype, residual,
                                                     pk_expr)))
        bound_order.append(pv.alias)
    else:
        for alias in plan.bound:
            pv = pattern.vertex(alias)
            if pv.pred is not None:
                ops.append(Select(pv.pred))

    def injectivity(new_alias: str) -> Optional[Expr]:
        """Vertex-injectivity checks ride in the endpoint predicate so
        fusion yields the bare scan->fused->fused chain."""
        nv = pattern.vertex(new_alias)
        pred = None
        for prev in bound_order:
            if prev == new_alias:
                continue
            pv = pattern.vertex(prev)
            if nv.vtype is not None and pv.vtype is not None \
                    and nv.vtype != pv.vtype:
                continue
            clause = Cmp("!=", FieldRef(new_alias), FieldRef(prev))
            pred = clause if pred is None else BoolOp("and", (pred, clause))
        return pred

    for step in plan.steps:
        e = step.pedge
        forward = e.src == step.from_alias
        direction = e.direction
        if not forward:
            direction = {Direction.OUT: Direction.IN,
                         Direction.IN: Direction.OUT,
                         Direction.BOTH: Direction.BOTH}[direction]
        which = ("end" if direction is Direction.OUT
                 else "start" if direction is Direction.IN else "other")
        edge_alias = e.alias or anon("e")
        if step.kind == "new":
            ops.append(ExpandEdge(step.from_alias, direction, e.etype,
                                  edge_alias, pred=e.pred))
            nv = pattern.vertex(step.to_alias)
            vpred = nv.pred
            inj = injectivity(step.to_alias)
            if inj is not None:
                vpred = inj if vpred is None else BoolOp("and", (vpred, inj))
            ops.append(GetVertex(step.to_alias,
                                 from_edge=FromEdgeSpec(edge_alias, which,
                                                        step.from_alias),
                                 vpred=vpred))
            bound_order.append(step.to_alias)
        else:
            tmp = anon("c")
            ops.append(ExpandEdge(step.from_alias, direction, e.etype,
                                  edge_alias, pred=e.pred))
            ops.append(GetVertex(tmp, from_edge=FromEdgeSpec(edge_alias, which,
                                                             step.from_alias)))
            ops.append(Select(Cmp("=", FieldRef(tmp), FieldRef(step.to_alias))))
    return ops


def expand_matches(dag: LogicalDag, catalog: Optional[Catalog],
                   use_cbo: bool = True) -> Tuple[LogicalDag, List[dict]]:
    """Replace every MATCH with its ordered expansion; returns the new DAG
    plus per-match plan reports for EXPLAIN."""
    out = dag.clone()
    reports: List[dict] = []
    for oid in list(out.ops):
        op = out.ops.get(oid)
        if not isinstance(op, Match):
            continue
        if use_cbo and catalog is not None:
            plan = cbo_order(op.pattern, catalog, out.gschema, op.bound)
        else:
            plan = _naive_plan(op.pattern, op.bound)
        chain = plan_to_ops(op.pattern, plan, out.gschema)
        out.splice(oid, chain)
        reports.append(plan.to_json())
    return out, reports


def optimize(dag: LogicalDag, catalog: Optional[Catalog] = None,
             shards: int = 1, push: bool = True, use_cbo: bool = True,
             fusion: bool = True) -> Tuple[LogicalDag, dict]:
    """FilterPushIntoMatch, then CBO match expansion, then EdgeVertexFusion,
    then a rule fixpoint. Returns (optimized DAG, explain info)."""
    info: dict = {}
    out = dag
    if push:
        out = rule_filter_push_into_match(out, shards)
    out, reports = expand_matches(out, catalog, use_cbo=use_cbo)
    info["match_plans"] = reports
    info["total_cost"] = sum(r["cost"] for r in reports)
    if fusion:
        out = rule_edge_vertex_fusion(out, shards)
    # fixpoint of both rules
    for _ in range(4):
        before = out.to_json()
        if push:
            out = rule_filter_push_into_match(out, shards)
        if fusion:
            out = rule_edge_vertex_fusion(out, shards)
        if out.to_json() == before:
            break
    out.validate()
    return out, info
