"""In-memory immutable store: CSR + CSC per edge type, columnar properties,
pk index. The reference backend and the performance upper bound for scans."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np

from ..errors import (
    DanglingEdge,
    DuplicatePk,
    IndexOutOfRange,
    InvalidVertex,
    NotFound,
    UnknownProperty,
    UnsupportedCapability,
)
from ..model import Direction, EdgeRef, PropertyGraphSchema, Value, VertexRef, schema_validate
from ..retrieval import (
    AdjListHandle,
    ArrayAdjList,
    CapabilitySet,
    ChainedAdjList,
    GraphSnapshot,
    GraphStore,
    PropertyPredicate,
    VertexListHandle,
)
from .columns import Column
from .tables import EdgeTable, VertexTable

_CAPS = CapabilitySet(
    adjacency_array=True,
    vertex_filter_pushdown=True,
    snapshot_versions=False,
)


@dataclass
class Csr:
    """offsets: int64[|V|+1]; per-source segments of (target idx, row id)."""

    offsets: np.ndarray
    targets: np.ndarray
    rows: np.ndarray


class ImmutableStore(GraphStore):
    def __init__(self, schema: PropertyGraphSchema, shards: int = 1):
        self.schema = schema
        self._shards = max(1, shards)
        self._vcount: list = []
        self._vcols: list = []       # per vtype: {prop: Column}
        self._pk_index: list = []    # per vtype: {pk value: idx}
        self._csr: list = []         # per etype: Csr by src
        self._csc: list = []         # per etype: Csr by dst (targets = src idx)
        self._ecols: list = []       # per etype: {prop: Column} indexed by row
        self._ecount: list = []

    # -- retrieval surface --

    def capabilities(self) -> CapabilitySet:
        return _CAPS

    def snapshot_latest(self) -> "ImmutableSnapshot":
        return ImmutableSnapshot(self)

    @property
    def total_edges(self) -> int:
        return int(sum(self._ecount))


class ImmutableSnapshot(GraphSnapshot):
    version = 0

    def __init__(self, store: ImmutableStore):
        self._s = store
        self.schema = store.schema
        # endpoint ordinals per edge type, resolved once (adjacency is hot)
        self._ends = [
            (store.schema.vtype_ordinal(d.src_type),
             store.schema.vtype_ordinal(d.dst_type))
            for d in store.schema.edge_types
        ]

    def capabilities(self) -> CapabilitySet:
        return _CAPS

    def check_vertex(self, v: VertexRef) -> None:
        counts = self._s._vcount
        if not (0 <= v.vtype < len(counts) and 0 <= v.idx < counts[v.vtype]):
            raise InvalidVertex(f"vertex {v} out of range")

    def vertex_count(self, vtype) -> int:
        return self._s._vcount[self.schema.vtype_ordinal(vtype)]

    def vertex_list(self, vtype) -> VertexListHandle:
        vt = self.schema.vtype_ordinal(vtype)
        return VertexListHandle(vt, None, self._s._vcount[vt])

    def _out_list(self, v: VertexRef, et: int, dst_ord: int,
                  src_ord: int) -> ArrayAdjList:
        if v.vtype != src_ord:
            return ArrayAdjList(v, Direction.OUT, et, dst_ord,
                                _EMPTY_I64, _EMPTY_I64)
        csr = self._s._csr[et]
        s, e = int(csr.offsets[v.idx]), int(csr.offsets[v.idx + 1])
        return ArrayAdjList(v, Direction.OUT, et, dst_ord,
                            csr.targets[s:e], csr.rows[s:e])

    def _in_list(self, v: VertexRef, et: int, dst_ord: int,
                 src_ord: int) -> ArrayAdjList:
        if v.vtype != dst_ord:
            return ArrayAdjList(v, Direction.IN, et, src_ord,
                                _EMPTY_I64, _EMPTY_I64, swap=True)
        csc = self._s._csc[et]
        s, e = int(csc.offsets[v.idx]), int(csc.offsets[v.idx + 1])
        return ArrayAdjList(v, Direction.IN, et, src_ord,
                            csc.targets[s:e], csc.rows[s:e], swap=True)

    def adjacency(self, v: VertexRef, direction: Direction, etype) -> AdjListHandle:
        if type(etype) is int and 0 <= etype < len(self._ends):
            et = etype
        else:
            et = self.schema.etype_ordinal(etype)
        self.check_vertex(v)
        src_ord, dst_ord = self._ends[et]
        if direction is Direction.OUT:
            return self._out_list(v, et, dst_ord, src_ord)
        if direction is Direction.IN:
            return self._in_list(v, et, dst_ord, src_ord)
        return ChainedAdjList(v, et,
                              self._out_list(v, et, dst_ord, src_ord),
                              self._in_list(v, et, dst_ord, src_ord))

    def degree(self, v: VertexRef, direction: Direction, etype) -> int:
        et = self.schema.etype_ordinal(etype)
        self.check_vertex(v)
        decl = self.schema.edge_types[et]
        total = 0
        if direction in (Direction.OUT, Direction.BOTH):
            if v.vtype == self.schema.vtype_ordinal(decl.src_type):
                o = self._s._csr[et].offsets
                total += int(o[v.idx + 1] - o[v.idx])
        if direction in (Direction.IN, Direction.BOTH):
            if v.vtype == self.schema.vtype_ordinal(decl.dst_type):
                o = self._s._csc[et].offsets
                total += int(o[v.idx + 1] - o[v.idx])
        return total

    def vertex_property(self, v: VertexRef, prop: str) -> Value:
        self.check_vertex(v)
        cols = self._s._vcols[v.vtype]
        if prop not in cols:
            raise UnknownProperty(
                f"{self.schema.vertex_types[v.vtype].name}.{prop}")
        return cols[prop].get(v.idx)

    def edge_property(self, e: EdgeRef, prop: str) -> Value:
        cols = self._s._ecols[e.etype]
        if prop not in cols:
            raise UnknownProperty(f"{self.schema.edge_types[e.etype].name}.{prop}")
        if not 0 <= e.row < self._s._ecount[e.etype]:
            raise IndexOutOfRange(f"edge row {e.row}")
        return cols[prop].get(e.row)

    def lookup_by_pk(self, vtype, key: Value) -> VertexRef:
        vt = self.schema.vtype_ordinal(vtype)
        idx = self._s._pk_index[vt].get(key)
        if idx is None:
            raise NotFound(f"pk {key!r} in {self.schema.vertex_types[vt].name}")
        return VertexRef(vt, idx)

    def shards(self) -> int:
        return self._s._shards

    def edge_scan(self) -> tuple:
        """Native scan contract: per-vertex CSR segment sums."""
        total = 0
        checksum = 0
        for et in range(len(self.schema.edge_types)):
            csr = self._s._csr[et]
            offsets = csr.offsets.tolist()  # plain ints; scalar indexing is hot
            targets = csr.targets
            prev = offsets[0] if offsets else 0
            for e in offsets[1:]:
                if e > prev:
                    total += e - prev
                    checksum += int(targets[prev:e].sum())
                prev = e
        return total, checksum

    def filtered_vertex_list(self, vtype, pred: PropertyPredicate) -> VertexListHandle:
        vt = self.schema.vtype_ordinal(vtype)
        decl = self.schema.vertex_types[vt]
        n = self._s._vcount[vt]
        mask = np.ones(n, dtype=bool)
        for cl in pred.clauses:
            col = self._s._vcols[vt].get(cl.prop)
            if col is None:
                raise UnknownProperty(f"{decl.name}.{cl.prop}")
            mask &= col.mask(cl.op, cl.const)
        idx = np.nonzero(mask)[0].astype(np.int64)
        return VertexListHandle(vt, idx, len(idx))


_EMPTY_I64 = np.empty(0, dtype=np.int64)


def build_immutable(
    schema: PropertyGraphSchema,
    vertex_tables: Dict[str, VertexTable],
    edge_tables: Dict[str, EdgeTable],
    shards: int = 1,
) -> ImmutableStore:
    """Assemble the store. Internal ids follow input-row order per type;
    edge rows are assigned in (src idx, dst idx)-sorted order, which fixes
    EdgeRef identity for every backend built from the same tables."""
    schema_validate(schema)
    store = ImmutableStore(schema, shards=shards)

    for decl in schema.vertex_types:
        table = vertex_tables.get(decl.name, VertexTable())
        if table.columns and decl.primary_key not in table.columns:
            raise DuplicatePk(decl.name, f"<missing pk column {decl.primary_key}>")
        n = table.nrows
        pk_index: Dict[Value, int] = {}
        pk_vals = table.columns.get(decl.primary_key, [])
        for i, pk in enumerate(pk_vals):
            if pk is None:
                raise DuplicatePk(decl.name, None)
            if pk in pk_index:
                raise DuplicatePk(decl.name, pk)
            pk_index[pk] = i
        cols: Dict[str, Column] = {}
        for pname, pdt in decl.properties:
            vals = table.columns.get(pname, [None] * n)
            if len(vals) != n:
                raise ValueError(f"ragged column {decl.name}.{pname}")
            cols[pname] = Column.from_values(pdt, vals)
        store._vcount.append(n)
        store._vcols.append(cols)
        store._pk_index.append(pk_index)

    for decl in schema.edge_types:
        table = edge_tables.get(decl.name, EdgeTable())
        src_ord = schema.vtype_ordinal(decl.src_type)
        dst_ord = schema.vtype_ordinal(decl.dst_type)
        src_index = store._pk_index[src_ord]
        dst_index = store._pk_index[dst_ord]
        m = table.nrows
        src_idx = np.empty(m, dtype=np.int64)
        dst_idx = np.empty(m, dtype=np.int64)
        for i in range(m):
            s = src_index.get(table.src_pk[i])
            if s is None:
                raise DanglingEdge(decl.name, table.src_pk[i])
            d = dst_index.get(table.dst_pk[i])
            if d is None:
                raise DanglingEdge(decl.name, table.dst_pk[i])
            src_idx[i] = s
            dst_idx[i] = d

        order = np.lexsort((dst_idx, src_idx))
        src_s = src_idx[order]
        dst_s = dst_idx[order]
        rows = np.arange(m, dtype=np.int64)

        nsrc = store._vcount[src_ord]
        ndst = store._vcount[dst_ord]
        counts = np.bincount(src_s, minlength=nsrc) if m else np.zeros(nsrc, dtype=np.int64)
        offsets = np.zeros(nsrc + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        csr = Csr(offsets, dst_s.copy(), rows)

        order2 = np.lexsort((rows, src_s, dst_s))
        dcounts = np.bincount(dst_s, minlength=ndst) if m else np.zeros(ndst, dtype=np.int64)
        doffsets = np.zeros(ndst + 1, dtype=np.int64)
        np.cumsum(dcounts, out=doffsets[1:])
        csc = Csr(doffsets, src_s[order2], rows[order2])

        ecols: Dict[str, Column] = {}
        for pname, pdt in decl.properties:
            vals = table.columns.get(pname, [None] * m)
            if len(vals) != m:
                raise ValueError(f"ragged column {decl.name}.{pname}")
            ecols[pname] = Column.from_values(pdt, [vals[int(i)] for i in order])
        store._csr.append(csr)
        store._csc.append(csc)
        store._ecols.append(ecols)
        store._ecount.append(m)

    return store


def edge_scan(snap: GraphSnapshot) -> tuple:
    """Sequential traversal of every out-edge of every vertex, all edge
    types; returns (edge count, neighbor-index checksum). The common scan
    contract used for the storage benchmarks."""
    total = 0
    checksum = 0
    schema = snap.schema
    for et, decl in enumerate(schema.edge_types):
        src_ord = schema.vtype_ordinal(decl.src_type)
        for v in snap.vertex_list(src_ord):
            adj = snap.adjacency(v, Direction.OUT, et)
            if isinstance(adj, ArrayAdjList):
                nbr = adj.neighbor_indices()
                total += len(nbr)
                checksum += int(nbr.sum())
            else:
                for n, _e in adj:
                    total += 1
                    checksum += n.idx
    return total, checksum


def edge_scan_throughput(store: GraphStore, repeats: int = 3) -> float:
    """Edges per second over the scan contract (best of a few warm runs);
    prefers a snapshot's native scan when it has one."""
    snap = store.snapshot_latest()
    scan = getattr(snap, "edge_scan", None) or (lambda: edge_scan(snap))
    count, _ = scan()  # warm
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        scan()
        best = min(best, time.perf_counter() - t0)
    return count / best if best > 0 else float("inf")
