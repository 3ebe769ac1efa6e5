"""Expression trees over tuple fields, element properties, and parameters.

Evaluation semantics (documented divergences are deliberate and fixed):
arithmetic propagates Null; comparisons are two-valued and follow the
total value order (so Null compares as the smallest value only through
explicit IS-style comparisons, while any Cmp with a Null operand is
False); division always yields Float64 and division by zero yields Null;
property access on an element whose type lacks the property yields Null
(only reachable through untyped aliases).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from ..errors import ParamUnbound, PlanTypeError
from ..model import (
    BOOL,
    FLOAT64,
    INT64,
    NULL,
    PATH,
    STRING,
    DataKind,
    DataType,
    EdgeRef,
    PathValue,
    Value,
    VertexRef,
    list_of,
    value_compare,
    value_eq,
)


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Literal(Expr):
    value: Value


@dataclass(frozen=True)
class FieldRef(Expr):
    alias: str


@dataclass(frozen=True)
class PropAccess(Expr):
    alias: str
    prop: str


@dataclass(frozen=True)
class Param(Expr):
    name: str


@dataclass(frozen=True)
class Arith(Expr):
    op: str  # + - * /
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Cmp(Expr):
    op: str  # = != < <= > >=
    left: Expr
    right: Expr


@dataclass(frozen=True)
class BoolOp(Expr):
    op: str  # and | or | not
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class InList(Expr):
    item: Expr
    items: Expr  # evaluates to a list


@dataclass(frozen=True)
class Aggregate(Expr):
    fn: str  # count sum min max avg collect
    arg: Expr


AGG_FNS = ("count", "sum", "min", "max", "avg", "collect")


def expr_aliases(e: Expr) -> set:
    """Tuple-field aliases an expression reads."""
    out: set = set()

    def walk(x: Expr) -> None:
        if isinstance(x, (FieldRef, PropAccess)):
            out.add(x.alias)
        elif isinstance(x, (Arith, Cmp)):
            walk(x.left)
            walk(x.right)
        elif isinstance(x, BoolOp):
            for a in x.args:
                walk(a)
        elif isinstance(x, InList):
            walk(x.item)
            walk(x.items)
        elif isinstance(x, Aggregate):
            walk(x.arg)

    walk(e)
    return out


def expr_params(e: Expr) -> set:
    out: set = set()

    def walk(x: Expr) -> None:
        if isinstance(x, Param):
            out.add(x.name)
        elif isinstance(x, (Arith, Cmp)):
            walk(x.left)
            walk(x.right)
        elif isinstance(x, BoolOp):
            for a in x.args:
                walk(a)
        elif isinstance(x, InList):
            walk(x.item)
            walk(x.items)
        elif isinstance(x, Aggregate):
            walk(x.arg)

    walk(e)
    return out


def has_aggregate(e: Expr) -> bool:
    if isinstance(e, Aggregate):
        return True
    if isinstance(e, (Arith, Cmp)):
        return has_aggregate(e.left) or has_aggregate(e.right)
    if isinstance(e, BoolOp):
        return any(has_aggregate(a) for a in e.args)
    if isinstance(e, InList):
        return has_aggregate(e.item) or has_aggregate(e.items)
    return False


# --- typing -------------------------------------------------------------------

_NUMERIC = (INT64, FLOAT64)


def infer_expr_type(e: Expr, fschema, gschema) -> Optional[DataType]:
    """Static type, or None when it depends on a parameter binding."""
    from ..model import value_dtype

    if isinstance(e, Literal):
        return value_dtype(e.value)
    if isinstance(e, Param):
        return None
    if isinstance(e, FieldRef):
        f = fschema.find(e.alias)
        if f is None:
            raise PlanTypeError(e.alias, expected="a tuple field")
        return f.dtype
    if isinstance(e, PropAccess):
        f = fschema.find(e.alias)
        if f is None:
            raise PlanTypeError(e.alias, expected="a vertex or edge field")
        if f.dtype.kind is DataKind.VERTEX:
            if f.elem is not None:
                decl = gschema.vertex_types[f.elem]
                dt = decl.property_dtype(e.prop)
                if dt is None:
                    raise PlanTypeError(
                        e.alias, expected=f"property {e.prop!r} on {decl.name}")
                return dt
            hits = [d.property_dtype(e.prop) for d in gschema.vertex_types
                    if d.property_dtype(e.prop) is not None]
            if not hits:
                raise PlanTypeError(e.alias, expected=f"some type with {e.prop!r}")
            return hits[0]
        if f.dtype.kind is DataKind.EDGE:
            if f.elem is not None:
                decl = gschema.edge_types[f.elem]
                dt = decl.property_dtype(e.prop)
                if dt is None:
                    raise PlanTypeError(
                        e.alias,
                        expected=f"property {e.prop!r} on edge type {decl.name}")
                return dt
            hits = [d.property_dtype(e.prop) for d in gschema.edge_types
                    if d.property_dtype(e.prop) is not None]
            if not hits:
                raise PlanTypeError(e.alias, expected=f"some edge type with {e.prop!r}")
            return hits[0]
        raise PlanTypeError(e.alias, expected="vertex or edge",
                            found=repr(f.dtype))
    if isinstance(e, Arith):
        lt = infer_expr_type(e.left, fschema, gschema)
        rt = infer_expr_type(e.right, fschema, gschema)
        for t in (lt, rt):
            if t is not None and t not in _NUMERIC and t != NULL:
                raise PlanTypeError("<arith>", expected="numeric", found=repr(t))
        if e.op == "/":
            return FLOAT64
        if lt == INT64 and rt == INT64:
            return INT64
        return FLOAT64
    if isinstance(e, Cmp):
        infer_expr_type(e.left, fschema, gschema)
        infer_expr_type(e.right, fschema, gschema)
        return BOOL
    if isinstance(e, BoolOp):
        for a in e.args:
            infer_expr_type(a, fschema, gschema)
        return BOOL
    if isinstance(e, InList):
        infer_expr_type(e.item, fschema, gschema)
        infer_expr_type(e.items, fschema, gschema)
        return BOOL
    if isinstance(e, Aggregate):
        if e.fn not in AGG_FNS:
            raise PlanTypeError("<agg>", expected=f"one of {AGG_FNS}", found=e.fn)
        at = infer_expr_type(e.arg, fschema, gschema)
        if e.fn == "count":
            return INT64
        if e.fn == "avg":
            return FLOAT64
        if e.fn == "sum":
            return at if at in _NUMERIC else FLOAT64
        if e.fn == "collect":
            return list_of(at if at is not None else FLOAT64)
        return at  # min/max
    raise PlanTypeError("<expr>", expected="a known expression node",
                        found=type(e).__name__)


# --- evaluation --------------------------------------------------------------------


class EvalContext:
    """Field positions + snapshot + parameter bindings for row evaluation."""

    __slots__ = ("positions", "snap", "params")

    def __init__(self, fschema, snap, params: Optional[dict] = None):
        self.positions = {f.name: i for i, f in enumerate(fschema.fields)}
        self.snap = snap
        self.params = params or {}


def eval_expr(e: Expr, row: tuple, ctx: EvalContext) -> Value:
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, FieldRef):
        return row[ctx.positions[e.alias]]
    if isinstance(e, Param):
        if e.name not in ctx.params:
            raise ParamUnbound(e.name)
        return ctx.params[e.name]
    if isinstance(e, PropAccess):
        el = row[ctx.positions[e.alias]]
        if el is None:
            return None
        from ..errors import UnknownProperty

        try:
            if isinstance(el, VertexRef):
                return ctx.snap.vertex_property(el, e.prop)
            if isinstance(el, EdgeRef):
                return ctx.snap.edge_property(el, e.prop)
        except UnknownProperty:
            return None
        raise PlanTypeError(e.alias, expected="vertex or edge",
                            found=type(el).__name__)
    if isinstance(e, Arith):
        l = eval_expr(e.left, row, ctx)
        r = eval_expr(e.right, row, ctx)
        if l is None or r is None:
            return None
        if e.op == "+":
            return l + r
        if e.op == "-":
            return l - r
        if e.op == "*":
            return l * r
        if e.op == "/":
            try:
                return float(l) / float(r)
            except ZeroDivisionError:
                return None
        raise PlanTypeError("<arith>", found=e.op)
    if isinstance(e, Cmp):
        l = eval_expr(e.left, row, ctx)
        r = eval_expr(e.right, row, ctx)
        if l is None or r is None:
            return False
        # same-class scalars compare directly (NaN falls back to the total
        # order so its sorts-above-everything rule holds)
        tl = type(l)
        if tl is type(r) and (tl is int or tl is str
                              or (tl is float and l == l and r == r)
                              or tl is VertexRef or tl is EdgeRef):
            op = e.op
            if op == "=":
                return l == r
            if op == "!=":
                return l != r
            if op == "<":
                return l < r
            if op == "<=":
                return l <= r
            if op == ">":
                return l > r
            return l >= r
        c = value_compare(l, r)
        return {"=": c == 0, "!=": c != 0, "<": c < 0, "<=": c <= 0,
                ">": c > 0, ">=": c >= 0}[e.op]
    if isinstance(e, BoolOp):
        if e.op == "not":
            return not _truthy(eval_expr(e.args[0], row, ctx))
        if e.op == "and":
            return all(_truthy(eval_expr(a, row, ctx)) for a in e.args)
        if e.op == "or":
            return any(_truthy(eval_expr(a, row, ctx)) for a in e.args)
        raise PlanTypeError("<bool>", found=e.op)
    if isinstance(e, InList):
        item = eval_expr(e.item, row, ctx)
        items = eval_expr(e.items, row, ctx)
        if items is None:
            return False
        if not isinstance(items, list):
            raise PlanTypeError("<in>", expected="list", found=type(items).__name__)
        return any(value_eq(item, x) for x in items)
    if isinstance(e, Aggregate):
        raise PlanTypeError("<agg>", expected="aggregation context")
    raise PlanTypeError("<expr>", found=type(e).__name__)


def _truthy(v: Value) -> bool:
    return bool(v) if v is not None else False


def aggregate_values(fn: str, values: list) -> Value:
    """Aggregate semantics: COUNT counts non-null; SUM/AVG/MIN/MAX ignore
    Null; an empty input gives COUNT 0, COLLECT [], others Null."""
    present = [v for v in values if v is not None]
    if fn == "count":
        return len(present)
    if fn == "collect":
        return list(present)
    if not present:
        return None
    if fn == "sum":
        total = present[0]
        for v in present[1:]:
            total = total + v
        return total
    if fn == "avg":
        total = 0.0
        for v in present:
            total += float(v)
        return total / len(present)
    if fn == "min":
        best = present[0]
        for v in present[1:]:
            if value_compare(v, best) < 0:
                best = v
        return best
    if fn == "max":
        best = present[0]
        for v in present[1:]:
            if value_compare(v, best) > 0:
                best = v
        return best
    raise PlanTypeError("<agg>", found=fn)
