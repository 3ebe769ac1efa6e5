"""Capability-negotiated retrieval surface between engines and stores.

Engines never touch a store class directly: they hold a snapshot, ask it
what it can do (CapabilitySet), and fall back to engine-side emulation
when a capability is absent. Every store backend implements GraphSnapshot;
semantics (adjacency order, dense ids, snapshot stability) are part of the
contract and are covered by cross-backend tests.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from .errors import IndexOutOfRange, InvalidVertex, UnsupportedCapability
from .model import (
    Direction,
    EdgeRef,
    PropertyGraphSchema,
    Value,
    VertexRef,
    value_compare,
)


@dataclass(frozen=True)
class CapabilitySet:
    """Capability flags grouped by the interface's six categories."""

    # topology
    vertex_list_array: bool = True
    adjacency_iter: bool = True
    adjacency_array: bool = False
    degree: bool = True
    # property
    vertex_props: bool = True
    edge_props: bool = True
    # partition
    shard_enumeration: bool = True
    vertex_to_shard: bool = True
    # index
    pk_lookup: bool = True
    # predicate
    vertex_filter_pushdown: bool = False
    # common
    snapshot_versions: bool = False

    def __post_init__(self):
        if self.adjacency_array and not self.adjacency_iter:
            raise ValueError("adjacency_array implies adjacency_iter")


@dataclass(frozen=True)
class PredicateClause:
    prop: str
    op: str  # one of = != < <= > >=
    const: Value


class PropertyPredicate:
    """Conjunction of (property, comparison, constant) clauses."""

    __slots__ = ("clauses",)

    def __init__(self, clauses):
        self.clauses = tuple(
            c if isinstance(c, PredicateClause) else PredicateClause(*c)
            for c in clauses
        )

    @staticmethod
    def _holds(op: str, left: Value, right: Value) -> bool:
        c = value_compare(left, right)
        if op == "=":
            return c == 0
        if op == "!=":
            return c != 0
        if op == "<":
            return c < 0
        if op == "<=":
            return c <= 0
        if op == ">":
            return c > 0
        if op == ">=":
            return c >= 0
        raise ValueError(f"bad comparison op {op!r}")

    def admits(self, get_prop) -> bool:
        """Evaluate against a callable prop name -> value. Null fails every clause."""
        for cl in self.clauses:
            v = get_prop(cl.prop)
            if v is None or not self._holds(cl.op, v, cl.const):
                return False
        return True

    def __repr__(self) -> str:
        return " AND ".join(f"{c.prop} {c.op} {c.const!r}" for c in self.clauses) or "true"


class VertexListHandle:
    """Stable-order enumeration of vertices of one type.

    Enumeration order is internal-index order for full lists; filtered
    lists preserve that order. Array-mode handles expose the backing index
    array; every handle is iterable.
    """

    __slots__ = ("vtype", "_indices", "_size")

    def __init__(self, vtype: int, indices: Optional[np.ndarray], size: int):
        self.vtype = vtype
        self._indices = indices  # None means the dense range [0, size)
        self._size = size

    @property
    def size(self) -> int:
        return self._size

    def __len__(self) -> int:
        return self._size

    def at(self, i: int) -> VertexRef:
        if not 0 <= i < self._size:
            raise IndexOutOfRange(f"vertex index {i} out of range [0,{self._size})")
        idx = i if self._indices is None else int(self._indices[i])
        return VertexRef(self.vtype, idx)

    def __iter__(self) -> Iterator[VertexRef]:
        vt = self.vtype
        if self._indices is None:
            for i in range(self._size):
                yield VertexRef(vt, i)
        else:
            for i in self._indices:
                yield VertexRef(vt, int(i))

    def indices(self) -> np.ndarray:
        """Internal indices as an array (array-mode access)."""
        if self._indices is None:
            return np.arange(self._size, dtype=np.int64)
        return self._indices


class AdjListHandle(abc.ABC):
    """Adjacency of one anchor vertex: yields (neighbor, edge) exactly once
    per qualifying edge, in an order that is stable within a snapshot."""

    __slots__ = ()

    anchor: VertexRef
    direction: Direction
    etype: int

    @abc.abstractmethod
    def __iter__(self) -> Iterator[Tuple[VertexRef, EdgeRef]]:
        ...

    def __len__(self) -> int:
        return sum(1 for _ in self)


class ArrayAdjList(AdjListHandle):
    """Array-backed adjacency (CSR-style stores): O(1) length and index
    access plus zero-copy views of the neighbor/row arrays."""

    __slots__ = ("anchor", "direction", "etype", "_nbr_vtype", "_nbr", "_rows",
                 "_swap")

    def __init__(self, anchor, direction, etype, nbr_vtype, nbr, rows, swap=False):
        self.anchor = anchor
        self.direction = direction
        self.etype = etype
        self._nbr_vtype = nbr_vtype
        self._nbr = nbr
        self._rows = rows
        # swap=True when the anchor is the edge's destination (In traversal)
        self._swap = swap

    def __len__(self) -> int:
        return len(self._nbr)

    def neighbor_indices(self) -> np.ndarray:
        return self._nbr

    def rows(self) -> np.ndarray:
        return self._rows

    def _make(self, i: int) -> Tuple[VertexRef, EdgeRef]:
        nbr = VertexRef(self._nbr_vtype, int(self._nbr[i]))
        row = int(self._rows[i])
        if self._swap:
            e = EdgeRef(self.etype, nbr, self.anchor, row)
        else:
            e = EdgeRef(self.etype, self.anchor, nbr, row)
        return nbr, e

    def at(self, i: int) -> Tuple[VertexRef, EdgeRef]:
        return self._make(i)

    def __iter__(self):
        for i in range(len(self._nbr)):
            yield self._make(i)


class ChainedAdjList(AdjListHandle):
    """Concatenation of two adjacency handles (Both = Out then In)."""

    __slots__ = ("anchor", "direction", "etype", "_first", "_second")

    def __init__(self, anchor, etype, first, second):
        self.anchor = anchor
        self.direction = Direction.BOTH
        self.etype = etype
        self._first = first
        self._second = second

    def __len__(self) -> int:
        return len(self._first) + len(self._second)

    def __iter__(self):
        yield from self._first
        yield from self._second


class IterAdjList(AdjListHandle):
    """Iterator-only adjacency for stores without array access."""

    __slots__ = ("anchor", "direction", "etype", "_gen_factory", "_len")

    def __init__(self, anchor, direction, etype, gen_factory, length=None):
        self.anchor = anchor
        self.direction = direction
        self.etype = etype
        self._gen_factory = gen_factory
        self._len = length

    def __len__(self) -> int:
        if self._len is None:
            self._len = sum(1 for _ in self._gen_factory())
        return self._len

    def __iter__(self):
        return self._gen_factory()


class GraphSnapshot(abc.ABC):
    """A consistent, immutable read view of one graph state.

    All read methods are safe to call from any number of threads; handle
    objects are cheap and per-caller. Operations backing an undeclared
    capability raise UnsupportedCapability.
    """

    schema: PropertyGraphSchema
    version: int

    @abc.abstractmethod
    def capabilities(self) -> CapabilitySet:
        ...

    # topology
    @abc.abstractmethod
    def vertex_count(self, vtype: Union[int, str]) -> int:
        ...

    @abc.abstractmethod
    def vertex_list(self, vtype: Union[int, str]) -> VertexListHandle:
        ...

    @abc.abstractmethod
    def adjacency(self, v: VertexRef, direction: Direction,
                  etype: Union[int, str]) -> AdjListHandle:
        ...

    def degree(self, v: VertexRef, direction: Direction,
               etype: Union[int, str]) -> int:
        return len(self.adjacency(v, direction, etype))

    # property
    @abc.abstractmethod
    def vertex_property(self, v: VertexRef, prop: str) -> Value:
        ...

    @abc.abstractmethod
    def edge_property(self, e: EdgeRef, prop: str) -> Value:
        ...

    # index
    @abc.abstractmethod
    def lookup_by_pk(self, vtype: Union[int, str], key: Value) -> VertexRef:
        ...

    # partition
    @abc.abstractmethod
    def shards(self) -> int:
        ...

    def shard_of(self, v: VertexRef) -> int:
        """Owner shard of a vertex: idx mod shard count (edge-cut: a vertex
        is owned by exactly one shard; its edges are visible from both
        endpoints' shards)."""
        if not self.capabilities().vertex_to_shard:
            raise UnsupportedCapability("vertex_to_shard")
        return v.idx % self.shards()

    # predicate
    def filtered_vertex_list(self, vtype: Union[int, str],
                             pred: PropertyPredicate) -> VertexListHandle:
        raise UnsupportedCapability("vertex_filter_pushdown")

    def check_vertex(self, v: VertexRef) -> None:
        if not 0 <= v.vtype < len(self.schema.vertex_types):
            raise InvalidVertex(f"vertex type ordinal {v.vtype}")
        if not 0 <= v.idx < self.vertex_count(v.vtype):
            raise InvalidVertex(f"vertex {v} out of range")


class GraphStore(abc.ABC):
    """A store owns graph data and vends snapshots."""

    schema: PropertyGraphSchema

    @abc.abstractmethod
    def capabilities(self) -> CapabilitySet:
        ...

    @abc.abstractmethod
    def snapshot_latest(self) -> GraphSnapshot:
        ...

    def snapshot_at(self, version: int) -> GraphSnapshot:
        raise UnsupportedCapability("snapshot_versions")


def vertex_at(vlist: VertexListHandle, i: int) -> VertexRef:
    return vlist.at(i)


def emulate_filtered_scan(snap: GraphSnapshot, vtype: Union[int, str],
                          pred: PropertyPredicate) -> VertexListHandle:
    """Engine-side fallback for vertex_filter_pushdown: full scan plus
    predicate evaluation. Result set equals the pushdown path wherever the
    store supports both."""
    vt = snap.schema.vtype_ordinal(vtype)
    decl = snap.schema.vertex_types[vt]
    from .errors import UnknownProperty

    for cl in pred.clauses:
        if decl.property_dtype(cl.prop) is None:
            raise UnknownProperty(f"{decl.name}.{cl.prop}")
    keep = [
        v.idx
        for v in snap.vertex_list(vt)
        if pred.admits(lambda p, _v=v: snap.vertex_property(_v, p))
    ]
    return VertexListHandle(vt, np.asarray(keep, dtype=np.int64), len(keep))
