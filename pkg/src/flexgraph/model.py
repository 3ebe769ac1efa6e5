"""Shared graph vocabulary: schema, data types, element references, value order.

Every other module speaks in these types. Vertices and edges are referred to
by dense per-type internal indices; external primary keys exist only inside
the stores' pk indexes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple, Optional, Sequence, Union

from .errors import SchemaError, UnknownType


class DataKind(Enum):
    NULL = "null"
    BOOL = "bool"
    INT64 = "int64"
    FLOAT64 = "float64"
    STRING = "string"
    VERTEX = "vertex"
    EDGE = "edge"
    PATH = "path"
    LIST = "list"


@dataclass(frozen=True)
class DataType:
    kind: DataKind
    elem: Optional["DataType"] = None

    def __repr__(self) -> str:
        if self.kind is DataKind.LIST:
            return f"List({self.elem!r})"
        return self.kind.value


NULL = DataType(DataKind.NULL)
BOOL = DataType(DataKind.BOOL)
INT64 = DataType(DataKind.INT64)
FLOAT64 = DataType(DataKind.FLOAT64)
STRING = DataType(DataKind.STRING)
VERTEX = DataType(DataKind.VERTEX)
EDGE = DataType(DataKind.EDGE)
PATH = DataType(DataKind.PATH)

#: Property columns are restricted to these; composite/graph types are
#: runtime-only (projections, paths, COLLECT results).
PROPERTY_DTYPES = (BOOL, INT64, FLOAT64, STRING)

_DTYPE_NAMES = {"bool": BOOL, "int64": INT64, "float64": FLOAT64, "string": STRING}


def list_of(elem: DataType) -> DataType:
    """List type; nesting depth is capped at 2 (list of list of scalar)."""
    depth = 1
    e = elem
    while e.kind is DataKind.LIST:
        depth += 1
        e = e.elem  # type: ignore[assignment]
    if depth > 2:
        raise ValueError("List nesting depth exceeds 2")
    return DataType(DataKind.LIST, elem)


class Direction(Enum):
    OUT = "out"
    IN = "in"
    BOTH = "both"


class VertexRef(NamedTuple):
    """Dense reference: (vertex type ordinal, 0-based index within type).
    NamedTuple rather than a dataclass: these are constructed on every
    expansion step and every extraction pass."""

    vtype: int
    idx: int

    def key(self) -> tuple:
        return self


class EdgeRef(NamedTuple):
    etype: int
    src: VertexRef
    dst: VertexRef
    row: int

    def key(self) -> tuple:
        return self


@dataclass(frozen=True)
class PathValue:
    """Alternating vertex/edge sequence; hop count = number of edges."""

    elements: tuple

    def __post_init__(self):
        n = len(self.elements)
        if n % 2 == 0 or n < 1:
            raise ValueError("path must alternate v,e,v,...,v")

    @property
    def hops(self) -> int:
        return len(self.elements) // 2

    @property
    def start(self) -> VertexRef:
        return self.elements[0]

    @property
    def end(self) -> VertexRef:
        return self.elements[-1]

    def edges(self) -> tuple:
        return self.elements[1::2]

    def key(self) -> tuple:
        return tuple(e.key() for e in self.elements)


#: Runtime values are plain Python objects tagged by their class:
#: None, bool, int, float, str, VertexRef, EdgeRef, PathValue, list.
Value = Union[None, bool, int, float, str, VertexRef, EdgeRef, PathValue, list]


# --- schema -----------------------------------------------------------------

@dataclass(frozen=True)
class VertexTypeDecl:
    name: str
    properties: tuple  # of (name, DataType)
    primary_key: str

    def property_dtype(self, prop: str) -> Optional[DataType]:
        for n, dt in self.properties:
            if n == prop:
                return dt
        return None


@dataclass(frozen=True)
class EdgeTypeDecl:
    name: str
    src_type: str
    dst_type: str
    properties: tuple = ()

    def property_dtype(self, prop: str) -> Optional[DataType]:
        for n, dt in self.properties:
            if n == prop:
                return dt
        return None


@dataclass(frozen=True)
class PropertyGraphSchema:
    vertex_types: tuple
    edge_types: tuple
    _vindex: dict = field(default_factory=dict, compare=False, repr=False)
    _eindex: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self._vindex.update({d.name: i for i, d in enumerate(self.vertex_types)})
        self._eindex.update({d.name: i for i, d in enumerate(self.edge_types)})

    # Lookups accept either a declared name or an ordinal.
    def vtype_ordinal(self, vtype: Union[int, str]) -> int:
        if isinstance(vtype, int):
            if 0 <= vtype < len(self.vertex_types):
                return vtype
            raise UnknownType(f"vertex type ordinal {vtype}")
        try:
            return self._vindex[vtype]
        except KeyError:
            raise UnknownType(f"vertex type {vtype!r}") from None

    def etype_ordinal(self, etype: Union[int, str]) -> int:
        if isinstance(etype, int):
            if 0 <= etype < len(self.edge_types):
                return etype
            raise UnknownType(f"edge type ordinal {etype}")
        try:
            return self._eindex[etype]
        except KeyError:
            raise UnknownType(f"edge type {etype!r}") from None

    def vertex_decl(self, vtype: Union[int, str]) -> VertexTypeDecl:
        return self.vertex_types[self.vtype_ordinal(vtype)]

    def edge_decl(self, etype: Union[int, str]) -> EdgeTypeDecl:
        return self.edge_types[self.etype_ordinal(etype)]

    def has_vtype(self, name: str) -> bool:
        return name in self._vindex

    def has_etype(self, name: str) -> bool:
        return name in self._eindex

    def edge_types_between(self, src_ord: int, dst_ord: int) -> list:
        src = self.vertex_types[src_ord].name
        dst = self.vertex_types[dst_ord].name
        return [i for i, d in enumerate(self.edge_types)
                if d.src_type == src and d.dst_type == dst]


def make_schema(vertex_types: Iterable[VertexTypeDecl],
                edge_types: Iterable[EdgeTypeDecl]) -> PropertyGraphSchema:
    schema = PropertyGraphSchema(tuple(vertex_types), tuple(edge_types))
    schema_validate(schema)
    return schema


def schema_validate(schema: PropertyGraphSchema) -> None:
    """Raise SchemaError on the first invariant violation.

    Checks, in order: unique type names, unique property names per type,
    property dtypes storable, edge endpoints declared, primary keys valid.
    """
    seen = set()
    for d in schema.vertex_types:
        if d.name in seen:
            raise SchemaError("duplicate_name", d.name)
        seen.add(d.name)
    eseen = set()
    for e in schema.edge_types:
        if e.name in eseen:
            raise SchemaError("duplicate_name", e.name)
        eseen.add(e.name)

    for d in schema.vertex_types:
        pseen = set()
        for pname, pdt in d.properties:
            if pname in pseen:
                raise SchemaError("duplicate_name", f"{d.name}.{pname}")
            pseen.add(pname)
            if pdt not in PROPERTY_DTYPES:
                raise SchemaError("bad_property_dtype", f"{d.name}.{pname}")
    for e in schema.edge_types:
        pseen = set()
        for pname, pdt in e.properties:
            if pname in pseen:
                raise SchemaError("duplicate_name", f"{e.name}.{pname}")
            pseen.add(pname)
            if pdt not in PROPERTY_DTYPES:
                raise SchemaError("bad_property_dtype", f"{e.name}.{pname}")

    vnames = {d.name for d in schema.vertex_types}
    for e in schema.edge_types:
        if e.src_type not in vnames:
            raise SchemaError("dangling_type", e.src_type)
        if e.dst_type not in vnames:
            raise SchemaError("dangling_type", e.dst_type)

    for d in schema.vertex_types:
        pk_dt = d.property_dtype(d.primary_key)
        if pk_dt is None or pk_dt not in (INT64, STRING):
            raise SchemaError("bad_primary_key", f"{d.name}.{d.primary_key}")


# --- value typing & ordering ---------------------------------------------------

def value_dtype(v: Value) -> DataType:
    if v is None:
        return NULL
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, int):
        return INT64
    if isinstance(v, float):
        return FLOAT64
    if isinstance(v, str):
        return STRING
    if isinstance(v, VertexRef):
        return VERTEX
    if isinstance(v, EdgeRef):
        return EDGE
    if isinstance(v, PathValue):
        return PATH
    if isinstance(v, list):
        elem = value_dtype(v[0]) if v else NULL
        return DataType(DataKind.LIST, elem)
    raise TypeError(f"not a graph value: {v!r}")


# Rank classes of the total order; Int64 and Float64 share one class and
# compare as reals.
_RANKS = [
    (type(None),),
    (bool,),
    (int, float),
    (str,),
    (VertexRef,),
    (EdgeRef,),
    (PathValue,),
    (list,),
]


def _rank(v: Value) -> int:
    if v is None:
        return 0
    if isinstance(v, bool):  # bool is an int subclass; test first
        return 1
    if isinstance(v, (int, float)):
        return 2
    if isinstance(v, str):
        return 3
    if isinstance(v, VertexRef):
        return 4
    if isinstance(v, EdgeRef):
        return 5
    if isinstance(v, PathValue):
        return 6
    if isinstance(v, list):
        return 7
    raise TypeError(f"not a graph value: {v!r}")


def value_compare(a: Value, b: Value) -> int:
    """Total order over all values; returns -1, 0, or 1.

    Null < Bool < numeric < String < Vertex < Edge < Path < List.
    NaN sorts above every finite float and equals itself, so sorting and
    grouping stay deterministic.
    """
    ra, rb = _rank(a), _rank(b)
    if ra != rb:
        return -1 if ra < rb else 1
    if ra == 0:
        return 0
    if ra == 2:
        a_nan = isinstance(a, float) and math.isnan(a)
        b_nan = isinstance(b, float) and math.isnan(b)
        if a_nan or b_nan:
            if a_nan and b_nan:
                return 0
            return 1 if a_nan else -1
        return (a > b) - (a < b)
    if ra in (1, 3):
        return (a > b) - (a < b)
    if ra in (4, 5, 6):
        ka, kb = a.key(), b.key()
        return (ka > kb) - (ka < kb)
    # lists: lexicographic under value_compare
    for x, y in zip(a, b):
        c = value_compare(x, y)
        if c != 0:
            return c
    return (len(a) > len(b)) - (len(a) < len(b))


class SortKey:
    """Adapter giving Python's sort the value_compare order."""

    __slots__ = ("v",)

    def __init__(self, v: Value):
        self.v = v

    def __lt__(self, other: "SortKey") -> bool:
        return value_compare(self.v, other.v) < 0

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SortKey) and value_compare(self.v, other.v) == 0


def value_eq(a: Value, b: Value) -> bool:
    return value_compare(a, b) == 0


# --- JSON schema document --------------------------------------------------------

def schema_to_json(schema: PropertyGraphSchema) -> dict:
    return {
        "vertex_types": [
            {
                "name": d.name,
                "properties": [{"name": n, "dtype": dt.kind.value}
                               for n, dt in d.properties],
                "primary_key": d.primary_key,
            }
            for d in schema.vertex_types
        ],
        "edge_types": [
            {
                "name": e.name,
                "src": e.src_type,
                "dst": e.dst_type,
                "properties": [{"name": n, "dtype": dt.kind.value}
                               for n, dt in e.properties],
            }
            for e in schema.edge_types
        ],
    }


def schema_from_json(doc: dict) -> PropertyGraphSchema:
    def parse_props(items: Sequence[dict]) -> tuple:
        out = []
        for it in items:
            dt = _DTYPE_NAMES.get(it["dtype"])
            if dt is None:
                raise SchemaError("bad_property_dtype", it.get("name", "?"))
            out.append((it["name"], dt))
        return tuple(out)

    vts = tuple(
        VertexTypeDecl(v["name"], parse_props(v.get("properties", [])),
                       v["primary_key"])
        for v in doc.get("vertex_types", [])
    )
    ets = tuple(
        EdgeTypeDecl(e["name"], e["src"], e["dst"],
                     parse_props(e.get("properties", [])))
        for e in doc.get("edge_types", [])
    )
    return make_schema(vts, ets)


def schema_dumps(schema: PropertyGraphSchema) -> str:
    return json.dumps(schema_to_json(schema), indent=2, sort_keys=True)


def schema_loads(text: str) -> PropertyGraphSchema:
    return schema_from_json(json.loads(text))
