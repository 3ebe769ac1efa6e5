"""Logical operators and tuple field schemas.

Fields carry an optional element-type ordinal (`elem`) so property access
can be schema-checked at plan-build time; the ordinal is inference
metadata, not part of the wire format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

from ..errors import PlanTypeError
from ..model import (
    EDGE,
    PATH,
    VERTEX,
    DataKind,
    DataType,
    Direction,
    PropertyGraphSchema,
)
from .exprs import (
    Aggregate,
    Expr,
    expr_aliases,
    has_aggregate,
    infer_expr_type,
)
from .pattern import PatternGraph


@dataclass(frozen=True)
class Field:
    name: str
    dtype: DataType
    elem: Optional[int] = None  # vertex/edge type ordinal when known

    def to_json(self) -> dict:
        out = {"name": self.name, "dtype": repr(self.dtype)}
        if self.elem is not None:
            out["elem"] = self.elem
        return out


@dataclass(frozen=True)
class FieldSchema:
    fields: Tuple[Field, ...] = ()

    def find(self, name: str) -> Optional[Field]:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    def index(self, name: str) -> int:
        for i, f in enumerate(self.fields):
            if f.name == name:
                return i
        raise PlanTypeError(name, expected="a tuple field")

    def names(self) -> Tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def extend(self, *extra: Field) -> "FieldSchema":
        for f in extra:
            if self.find(f.name) is not None:
                raise PlanTypeError(f.name, expected="a fresh alias")
        return FieldSchema(self.fields + tuple(extra))


@dataclass(frozen=True)
class ScanSpec:
    vtype: Optional[int]  # None scans every vertex type
    pred: Optional[Expr] = None
    pk: Optional[Expr] = None  # pk-equality fast path


@dataclass(frozen=True)
class FromEdgeSpec:
    edge_alias: str
    which: str = "other"  # start | end | other
    anchor: Optional[str] = None  # 'other' resolves relative to this alias


class LogicalOp:
    """Base: each op declares required input aliases and schema inference."""

    kind = "?"
    min_inputs = 1  # schema inference waits until this many producers exist

    def required_aliases(self) -> set:
        return set()

    def infer(self, inputs: Tuple[FieldSchema, ...],
              gschema: PropertyGraphSchema) -> FieldSchema:
        raise NotImplementedError

    def exprs(self) -> Tuple[Expr, ...]:
        return ()

    def to_json(self) -> dict:
        return {"kind": self.kind}


def _one(inputs: Tuple[FieldSchema, ...], op: LogicalOp) -> FieldSchema:
    if len(inputs) != 1:
        raise PlanTypeError(op.kind, expected="exactly one input",
                            found=str(len(inputs)))
    return inputs[0]


@dataclass(frozen=True)
class GetVertex(LogicalOp):
    """Source scan (mode Scan) or edge-endpoint extraction (mode FromEdge)."""

    out_alias: str
    scan: Optional[ScanSpec] = None
    from_edge: Optional[FromEdgeSpec] = None
    vpred: Optional[Expr] = None  # endpoint filter, observable by fusion

    kind = "GET_VERTEX"

    def __post_init__(self):
        if (self.scan is None) == (self.from_edge is None):
            raise PlanTypeError(self.out_alias,
                                expected="exactly one of scan/from_edge")

    def required_aliases(self) -> set:
        if self.from_edge is not None:
            return {self.from_edge.edge_alias}
        return set()

    def exprs(self):
        out = []
        if self.scan is not None:
            out.extend(e for e in (self.scan.pred, self.scan.pk) if e is not None)
        if self.vpred is not None:
            out.append(self.vpred)
        return tuple(out)

    def infer(self, inputs, gschema):
        if self.scan is not None:
            base = inputs[0] if inputs else FieldSchema()
            return base.extend(Field(self.out_alias, VERTEX, self.scan.vtype))
        base = _one(inputs, self)
        f = base.find(self.from_edge.edge_alias)
        if f is None:
            raise PlanTypeError(self.from_edge.edge_alias)
        if f.dtype.kind not in (DataKind.EDGE, DataKind.PATH):
            raise PlanTypeError(self.from_edge.edge_alias, expected="edge or path",
                                found=repr(f.dtype))
        elem = None
        if f.dtype.kind is DataKind.EDGE and f.elem is not None:
            decl = gschema.edge_types[f.elem]
            s = gschema.vtype_ordinal(decl.src_type)
            d = gschema.vtype_ordinal(decl.dst_type)
            if self.from_edge.which == "start":
                elem = s
            elif self.from_edge.which == "end":
                elem = d
            else:
                elem = d if s == d else None
        return base.extend(Field(self.out_alias, VERTEX, elem))

    def to_json(self):
        out = {"kind": self.kind, "out": self.out_alias}
        if self.scan is not None:
            out["mode"] = "scan"
            out["vtype"] = self.scan.vtype
            if self.scan.pred is not None:
                out["pred"] = repr(self.scan.pred)
            if self.scan.pk is not None:
                out["pk"] = repr(self.scan.pk)
        else:
            out["mode"] = "from_edge"
            out["edge"] = self.from_edge.edge_alias
            out["which"] = self.from_edge.which
        if self.vpred is not None:
            out["vpred"] = repr(self.vpred)
        return out


@dataclass(frozen=True)
class ExpandEdge(LogicalOp):
    in_alias: str
    direction: Direction
    etype: int
    out_alias: str
    pred: Optional[Expr] = None

    kind = "EXPAND_EDGE"

    def required_aliases(self):
        return {self.in_alias}

    def exprs(self):
        return (self.pred,) if self.pred is not None else ()

    def infer(self, inputs, gschema):
        base = _one(inputs, self)
        f = base.find(self.in_alias)
        if f is None or f.dtype.kind is not DataKind.VERTEX:
            raise PlanTypeError(self.in_alias, expected="vertex",
                                found=repr(f.dtype) if f else "")
        return base.extend(Field(self.out_alias, EDGE, self.etype))

    def to_json(self):
        out = {"kind": self.kind, "in": self.in_alias, "out": self.out_alias,
               "etype": self.etype, "direction": self.direction.value}
        if self.pred is not None:
            out["pred"] = repr(self.pred)
        return out


@dataclass(frozen=True)
class ExpandVertex(LogicalOp):
    """Fused expand: adjacent vertices directly. Only the optimizer creates
    it; edge_pred keeps a fused edge predicate alive."""

    in_alias: str
    direction: Direction
    etype: int
    out_alias: str
    vpred: Optional[Expr] = None
    edge_pred: Optional[Expr] = None

    kind = "EXPAND_VERTEX"

    def required_aliases(self):
        return {self.in_alias}

    def exprs(self):
        return tuple(e for e in (self.vpred, self.edge_pred) if e is not None)

    def infer(self, inputs, gschema):
        base = _one(inputs, self)
        f = base.find(self.in_alias)
        if f is None or f.dtype.kind is not DataKind.VERTEX:
            raise PlanTypeError(self.in_alias, expected="vertex",
                                found=repr(f.dtype) if f else "")
        decl = gschema.edge_types[self.etype]
        s = gschema.vtype_ordinal(decl.src_type)
        d = gschema.vtype_ordinal(decl.dst_type)
        if self.direction is Direction.OUT:
            elem = d
        elif self.direction is Direction.IN:
            elem = s
        else:
            elem = d if s == d else None
        return base.extend(Field(self.out_alias, VERTEX, elem))

    def to_json(self):
        out = {"kind": self.kind, "in": self.in_alias, "out": self.out_alias,
               "etype": self.etype, "direction": self.direction.value}
        if self.vpred is not None:
            out["vpred"] = repr(self.vpred)
        if self.edge_pred is not None:
            out["edge_pred"] = repr(self.edge_pred)
        return out


@dataclass(frozen=True)
class Match(LogicalOp):
    """Pattern-match block (MATCH_START..MATCH_END). `bound` names pattern
    aliases that arrive already bound on input rows."""

    pattern: PatternGraph
    bound: Tuple[str, ...] = ()

    kind = "MATCH"

    def required_aliases(self):
        return set(self.bound)

    def exprs(self):
        out = []
        for pv in self.pattern.vertices:
            if pv.pred is not None:
                out.append(pv.pred)
        for pe in self.pattern.edges:
            if pe.pred is not None:
                out.append(pe.pred)
        return tuple(out)

    def infer(self, inputs, gschema):
        self.pattern.validate(gschema)
        base = inputs[0] if inputs else FieldSchema()
        extra = []
        for pv in self.pattern.vertices:
            if pv.anonymous or pv.alias in self.bound:
                continue
            extra.append(Field(pv.alias, VERTEX, pv.vtype))
        for pe in self.pattern.edges:
            if pe.alias and not pe.alias.startswith("$"):
                extra.append(Field(pe.alias, EDGE, pe.etype))
        return base.extend(*extra)

    def to_json(self):
        return {
            "kind": self.kind,
            "bound": list(self.bound),
            "pattern": {
                "vertices": [{"alias": v.alias, "vtype": v.vtype,
                              "pred": repr(v.pred) if v.pred else None}
                             for v in self.pattern.vertices],
                "edges": [{"src": e.src, "dst": e.dst, "etype": e.etype,
                           "direction": e.direction.value, "alias": e.alias,
                           "pred": repr(e.pred) if e.pred else None}
                          for e in self.pattern.edges],
            },
        }


@dataclass(frozen=True)
class PathExpand(LogicalOp):
    """Bounded-hop expansion (PATH_START..PATH_END): min..max hops over one
    edge type, no repeated edges within a path, BFS level order."""

    in_alias: str
    direction: Direction
    etype: int
    min_hops: int
    max_hops: int
    out_alias: str

    kind = "PATH"

    def required_aliases(self):
        return {self.in_alias}

    def infer(self, inputs, gschema):
        base = _one(inputs, self)
        f = base.find(self.in_alias)
        if f is None or f.dtype.kind is not DataKind.VERTEX:
            raise PlanTypeError(self.in_alias, expected="vertex")
        if not 0 <= self.min_hops <= self.max_hops:
            raise PlanTypeError(self.out_alias, expected="0 <= min <= max hops")
        return base.extend(Field(self.out_alias, PATH, None))

    def to_json(self):
        return {"kind": self.kind, "in": self.in_alias, "out": self.out_alias,
                "etype": self.etype, "direction": self.direction.value,
                "min_hops": self.min_hops, "max_hops": self.max_hops}


@dataclass(frozen=True)
class Project(LogicalOp):
    items: Tuple[Tuple[Expr, str], ...]

    kind = "PROJECT"

    def required_aliases(self):
        need = set()
        for e, _ in self.items:
            need |= expr_aliases(e)
        return need

    def exprs(self):
        return tuple(e for e, _ in self.items)

    def infer(self, inputs, gschema):
        base = _one(inputs, self)
        fields = []
        for e, name in self.items:
            dt = infer_expr_type(e, base, gschema)
            elem = None
            from .exprs import FieldRef

            if isinstance(e, FieldRef):
                f = base.find(e.alias)
                if f is not None:
                    elem = f.elem
            fields.append(Field(name, dt if dt is not None else
                                DataType(DataKind.FLOAT64), elem))
        names = [f.name for f in fields]
        if len(set(names)) != len(names):
            raise PlanTypeError(",".join(names), expected="unique output names")
        return FieldSchema(tuple(fields))

    def to_json(self):
        return {"kind": self.kind,
                "items": [{"expr": repr(e), "as": n} for e, n in self.items]}


@dataclass(frozen=True)
class Select(LogicalOp):
    pred: Expr

    kind = "SELECT"

    def required_aliases(self):
        return expr_aliases(self.pred)

    def exprs(self):
        return (self.pred,)

    def infer(self, inputs, gschema):
        base = _one(inputs, self)
        if has_aggregate(self.pred):
            raise PlanTypeError("<select>", expected="no aggregates in SELECT")
        infer_expr_type(self.pred, base, gschema)
        return base

    def to_json(self):
        return {"kind": self.kind, "pred": repr(self.pred)}


@dataclass(frozen=True)
class Order(LogicalOp):
    keys: Tuple[Tuple[Expr, bool], ...]  # (expr, ascending)
    limit: Optional[int] = None

    kind = "ORDER"

    def required_aliases(self):
        need = set()
        for e, _ in self.keys:
            need |= expr_aliases(e)
        return need

    def exprs(self):
        return tuple(e for e, _ in self.keys)

    def infer(self, inputs, gschema):
        base = _one(inputs, self)
        for e, _ in self.keys:
            infer_expr_type(e, base, gschema)
        return base

    def to_json(self):
        return {"kind": self.kind, "limit": self.limit,
                "keys": [{"expr": repr(e), "asc": asc} for e, asc in self.keys]}


@dataclass(frozen=True)
class Group(LogicalOp):
    keys: Tuple[Tuple[Expr, str], ...]
    aggs: Tuple[Tuple[Aggregate, str], ...]

    kind = "GROUP"

    def required_aliases(self):
        need = set()
        for e, _ in self.keys:
            need |= expr_aliases(e)
        for a, _ in self.aggs:
            need |= expr_aliases(a)
        return need

    def exprs(self):
        return tuple(e for e, _ in self.keys) + tuple(a for a, _ in self.aggs)

    def infer(self, inputs, gschema):
        base = _one(inputs, self)
        fields = []
        from .exprs import FieldRef

        for e, name in self.keys:
            dt = infer_expr_type(e, base, gschema)
            elem = None
            if isinstance(e, FieldRef):
                f = base.find(e.alias)
                if f is not None:
                    elem = f.elem
            fields.append(Field(name, dt if dt is not None else
                                DataType(DataKind.FLOAT64), elem))
        for a, name in self.aggs:
            if not isinstance(a, Aggregate):
                raise PlanTypeError(name, expected="an aggregate")
            dt = infer_expr_type(a, base, gschema)
            fields.append(Field(name, dt if dt is not None else
                                DataType(DataKind.FLOAT64), None))
        names = [f.name for f in fields]
        if len(set(names)) != len(names):
            raise PlanTypeError(",".join(names), expected="unique output names")
        return FieldSchema(tuple(fields))

    def to_json(self):
        return {"kind": self.kind,
                "keys": [{"expr": repr(e), "as": n} for e, n in self.keys],
                "aggs": [{"fn": a.fn, "expr": repr(a.arg), "as": n}
                         for a, n in self.aggs]}


@dataclass(frozen=True)
class LimitOp(LogicalOp):
    n: int

    kind = "LIMIT"

    def infer(self, inputs, gschema):
        return _one(inputs, self)

    def to_json(self):
        return {"kind": self.kind, "n": self.n}


@dataclass(frozen=True)
class Join(LogicalOp):
    on: Tuple[str, ...]

    kind = "JOIN"
    min_inputs = 2

    def infer(self, inputs, gschema):
        if len(inputs) != 2:
            raise PlanTypeError("<join>", expected="two inputs",
                                found=str(len(inputs)))
        left, right = inputs
        fields = list(left.fields)
        for alias in self.on:
            lf, rf = left.find(alias), right.find(alias)
            if lf is None or rf is None:
                raise PlanTypeError(alias, expected="present on both join sides")
            if lf.dtype != rf.dtype:
                raise PlanTypeError(alias, expected=repr(lf.dtype),
                                    found=repr(rf.dtype))
        for f in right.fields:
            if f.name in self.on:
                continue
            if left.find(f.name) is not None:
                raise PlanTypeError(f.name, expected="disjoint non-key fields")
            fields.append(f)
        return FieldSchema(tuple(fields))

    def to_json(self):
        return {"kind": self.kind, "on": list(self.on)}


@dataclass(frozen=True)
class Sink(LogicalOp):
    kind = "SINK"

    def infer(self, inputs, gschema):
        return _one(inputs, self)
