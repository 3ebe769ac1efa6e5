"""Fluent step builder: the second frontend over the same IR.

Each step appends one logical operator (or one MATCH); `out`/`in_`/`both`
deliberately emit an EXPAND_EDGE + GET_VERTEX pair and never the fused
form, because fusion belongs to the optimizer.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from ..errors import Diagnostic
from ..ir import (
    Aggregate,
    BoolOp,
    Cmp,
    Expr,
    ExpandEdge,
    FieldRef,
    FromEdgeSpec,
    GetVertex,
    Group,
    LimitOp,
    Literal,
    LogicalDag,
    Match,
    Order,
    PathExpand,
    PatternGraph,
    Project,
    PropAccess,
    ScanSpec,
    Select,
    Sink,
)
from ..model import DataKind, Direction, PropertyGraphSchema

_VALUE_STEPS = {"values", "order", "group", "limit", "path", "match"}


class StepChain:
    """Records steps; `steps_to_dag` lowers the chain."""

    def __init__(self):
        self.steps: List[Tuple[str, tuple]] = []

    def _push(self, name: str, *args) -> "StepChain":
        self.steps.append((name, args))
        return self

    def V(self, vtype: Optional[str] = None) -> "StepChain":
        return self._push("V", vtype)

    def has(self, prop: str, op: str, value) -> "StepChain":
        return self._push("has", prop, op, value)

    def out(self, etype: str) -> "StepChain":
        return self._push("out", etype)

    def in_(self, etype: str) -> "StepChain":
        return self._push("in", etype)

    def both(self, etype: str) -> "StepChain":
        return self._push("both", etype)

    def outE(self, etype: str) -> "StepChain":
        return self._push("outE", etype)

    def inE(self, etype: str) -> "StepChain":
        return self._push("inE", etype)

    def bothE(self, etype: str) -> "StepChain":
        return self._push("bothE", etype)

    def inV(self) -> "StepChain":
        return self._push("inV")

    def outV(self) -> "StepChain":
        return self._push("outV")

    def otherV(self) -> "StepChain":
        return self._push("otherV")

    def values(self, prop: str) -> "StepChain":
        return self._push("values", prop)

    def path(self, min_hops: int, max_hops: int, etype: str) -> "StepChain":
        return self._push("path", min_hops, max_hops, etype)

    def match(self, pattern: PatternGraph) -> "StepChain":
        return self._push("match", pattern)

    def order(self, by: Optional[str] = None, asc: bool = True,
              limit: Optional[int] = None) -> "StepChain":
        return self._push("order", by, asc, limit)

    def group(self, by: Optional[str], fn: str,
              arg: Optional[str] = None) -> "StepChain":
        return self._push("group", by, fn, arg)

    def limit(self, n: int) -> "StepChain":
        return self._push("limit", n)


class _Builder:
    def __init__(self, schema: PropertyGraphSchema):
        self.schema = schema
        self.dag = LogicalDag(schema)
        self.head_id: Optional[int] = None
        self.head_alias: Optional[str] = None   # current element field
        self.head_kind: Optional[str] = None    # vertex | edge | path | table
        self._n = 0

    def fresh(self, prefix: str = "s") -> str:
        self._n += 1
        return f"${prefix}{self._n}"

    def err(self, message: str) -> Diagnostic:
        return Diagnostic(0, 0, message)

    def emit(self, op) -> int:
        oid = self.dag.add(op)
        if self.head_id is not None:
            self.dag.connect(self.head_id, oid)
        self.head_id = oid
        return oid

    def replace_head(self, op) -> None:
        """Swap the head op in place (used to merge `has` predicates)."""
        oid = self.head_id
        self.dag.ops[oid] = op
        self.dag._recompute()

    def elem_ordinal(self) -> Optional[int]:
        f = self.dag.schema_of(self.head_id).find(self.head_alias)
        return f.elem if f else None


def steps_to_dag(chain: StepChain, schema: PropertyGraphSchema) -> LogicalDag:
    b = _Builder(schema)
    if not chain.steps:
        raise b.err("empty step chain")
    last_name = chain.steps[-1][0]
    if last_name not in _VALUE_STEPS:
        raise b.err(f"chain must end in a value-producing step, not {last_name!r}")

    for name, args in chain.steps:
        _apply_step(b, name, args)

    if b.head_kind in ("vertex", "edge", "path") and last_name in ("order", "limit"):
        pass  # already projected by those steps
    b.emit(Sink())
    b.dag.validate()
    return b.dag


def _apply_step(b: _Builder, name: str, args: tuple) -> None:
    schema = b.schema
    if name == "V":
        if b.head_id is not None:
            raise b.err("V() must start the chain")
        (vtype,) = args
        ordinal = None
        if vtype is not None:
            if not schema.has_vtype(vtype):
                raise b.err(f"unknown label {vtype!r}")
            ordinal = schema.vtype_ordinal(vtype)
        alias = b.fresh()
        b.emit(GetVertex(alias, scan=ScanSpec(ordinal)))
        b.head_alias, b.head_kind = alias, "vertex"
        return

    if name == "match":
        if b.head_id is not None:
            raise b.err("match() must start the chain")
        (pattern,) = args
        b.emit(Match(pattern))
        exported = pattern.exported_aliases()
        b.emit(Project(tuple((FieldRef(a), a) for a in exported)))
        b.head_alias, b.head_kind = None, "table"
        return

    if b.head_id is None:
        raise b.err(f"{name}() needs a traversal source")

    if name == "has":
        prop, op, value = args
        pred = Cmp(op, PropAccess(b.head_alias, prop), Literal(value))
        _check_prop(b, prop)
        head_op = b.dag.ops[b.head_id]
        if isinstance(head_op, GetVertex) and head_op.scan is not None:
            merged = _and(head_op.scan.pred, pred)
            b.replace_head(GetVertex(head_op.out_alias,
                                     scan=ScanSpec(head_op.scan.vtype, merged,
                                                   head_op.scan.pk)))
        elif isinstance(head_op, GetVertex):
            b.replace_head(GetVertex(head_op.out_alias, from_edge=head_op.from_edge,
                                     vpred=_and(head_op.vpred, pred)))
        elif isinstance(head_op, ExpandEdge):
            b.replace_head(ExpandEdge(head_op.in_alias, head_op.direction,
                                      head_op.etype, head_op.out_alias,
                                      pred=_and(head_op.pred, pred)))
        else:
            b.emit(Select(pred))
        return

    if name in ("out", "in", "both", "outE", "inE", "bothE"):
        (etype,) = args
        if b.head_kind != "vertex":
            raise b.err(f"{name}() needs a vertex head")
        if not schema.has_etype(etype):
            raise b.err(f"unknown edge type {etype!r}")
        et = schema.etype_ordinal(etype)
        direction = {"out": Direction.OUT, "in": Direction.IN,
                     "both": Direction.BOTH}[name.replace("E", "").lower()
                                             if name.endswith("E")
                                             else name]
        anchor = b.head_alias
        e_alias = b.fresh("e") if not name.endswith("E") else f"e{b._n + 1}"
        if name.endswith("E"):
            b._n += 1  # observable edge head: named alias, per-edge rows
        b.emit(ExpandEdge(b.head_alias, direction, et, e_alias))
        b.head_alias, b.head_kind = e_alias, "edge"
        b._last_anchor = anchor
        if not name.endswith("E"):
            v_alias = b.fresh()
            b.emit(GetVertex(v_alias,
                             from_edge=FromEdgeSpec(e_alias, "other", anchor)))
            b.head_alias, b.head_kind = v_alias, "vertex"
        return

    if name in ("inV", "outV", "otherV"):
        if b.head_kind != "edge":
            raise b.err(f"{name}() needs an edge head")
        which = {"inV": "end", "outV": "start", "otherV": "other"}[name]
        alias = b.fresh()
        anchor = getattr(b, "_last_anchor", None)
        b.emit(GetVertex(alias, from_edge=FromEdgeSpec(b.head_alias, which,
                                                       anchor)))
        b.head_alias, b.head_kind = alias, "vertex"
        return

    if name == "values":
        (prop,) = args
        _check_prop(b, prop, required=True)
        b.emit(Project(((PropAccess(b.head_alias, prop), prop),)))
        b.head_alias, b.head_kind = None, "table"
        return

    if name == "path":
        min_hops, max_hops, etype = args
        if b.head_kind != "vertex":
            raise b.err("path() needs a vertex head")
        if not schema.has_etype(etype):
            raise b.err(f"unknown edge type {etype!r}")
        alias = b.fresh("p")
        b.emit(PathExpand(b.head_alias, Direction.OUT,
                          schema.etype_ordinal(etype), min_hops, max_hops, alias))
        b.emit(Project(((FieldRef(alias), alias),)))
        b.head_alias, b.head_kind = None, "table"
        return

    if name == "order":
        by, asc, limit = args
        if b.head_kind == "vertex" and by is not None:
            _check_prop(b, by, required=True)
            key: Expr = PropAccess(b.head_alias, by)
        elif b.head_alias is not None:
            key = (PropAccess(b.head_alias, by) if by is not None
                   else FieldRef(b.head_alias))
        else:
            key = FieldRef(by) if by is not None else None
            if key is None:
                raise b.err("order() over a table needs a column name")
        if b.head_alias is not None:
            b.emit(Project(((FieldRef(b.head_alias), b.head_alias),)))
        b.emit(Order(((key, asc),), limit=limit))
        b.head_kind = "table"
        return

    if name == "group":
        by, fn, arg = args
        if b.head_kind != "vertex":
            raise b.err("group() needs a vertex head")
        if by is not None:
            _check_prop(b, by, required=True)
        if arg is not None:
            _check_prop(b, arg, required=True)
        key = (PropAccess(b.head_alias, by), by) if by is not None \
            else (FieldRef(b.head_alias), "key")
        agg_arg = (PropAccess(b.head_alias, arg) if arg is not None
                   else FieldRef(b.head_alias))
        b.emit(Group((key,), ((Aggregate(fn, agg_arg), fn),)))
        b.head_alias, b.head_kind = None, "table"
        return

    if name == "limit":
        (n,) = args
        if b.head_alias is not None:
            b.emit(Project(((FieldRef(b.head_alias), b.head_alias),)))
            b.head_alias = None
        b.emit(LimitOp(n))
        b.head_kind = "table"
        return

    raise b.err(f"unknown step {name!r}")


def _and(a: Optional[Expr], b_: Expr) -> Expr:
    return b_ if a is None else BoolOp("and", (a, b_))


def _check_prop(b: _Builder, prop: str, required: bool = False) -> None:
    """Schema-check a property against the head element's type when known."""
    elem = b.elem_ordinal() if b.head_alias else None
    f = (b.dag.schema_of(b.head_id).find(b.head_alias)
         if b.head_alias else None)
    if f is None or elem is None:
        return
    if f.dtype.kind is DataKind.VERTEX:
        decl = b.schema.vertex_types[elem]
    elif f.dtype.kind is DataKind.EDGE:
        decl = b.schema.edge_types[elem]
    else:
        return
    if decl.property_dtype(prop) is None:
        raise b.err(f"{prop!r} is not a property of {decl.name}")
