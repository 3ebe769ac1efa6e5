"""Versioned mutable store: segmented adjacency with (insert, delete)
version stamps, single-writer batches, wait-free snapshot readers.

Layout notes. Adjacency lives in fixed-capacity segments whose entry
arrays are preallocated numpy buffers; the writer fills slots and then
publishes by bumping the segment's size counter, so a reader never sees a
partially-written entry. Commits publish by a single store of
committed_version after all data is in place. Nothing is ever moved or
freed while a snapshot that can see it is open (compaction requires a
horizon at or below the oldest open snapshot).
"""

from __future__ import annotations

import bisect
import threading
import weakref
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from ..errors import (
    DanglingEdge,
    DuplicatePk,
    HorizonTooNew,
    IndexOutOfRange,
    NotFound,
    UnknownProperty,
    UnknownVersion,
    UnknownVertexError,
    WriterBusy,
)
from ..model import Direction, EdgeRef, PropertyGraphSchema, Value, VertexRef, schema_validate
from ..retrieval import (
    AdjListHandle,
    CapabilitySet,
    ChainedAdjList,
    GraphSnapshot,
    GraphStore,
    IterAdjList,
    VertexListHandle,
)
from .tables import EdgeTable, VertexTable

_CAPS = CapabilitySet(
    adjacency_array=False,
    vertex_filter_pushdown=False,
    snapshot_versions=True,
)

#: delete_v for live entries; far above any reachable commit counter.
NEVER = np.int64(2 ** 62)

SEGMENT_CAPACITY = 64


class Segment:
    __slots__ = ("nbr", "row", "ins", "dele", "size", "min_delete")

    def __init__(self, capacity: int = SEGMENT_CAPACITY):
        self.nbr = np.empty(capacity, dtype=np.int64)
        self.row = np.empty(capacity, dtype=np.int64)
        self.ins = np.empty(capacity, dtype=np.int64)
        self.dele = np.full(capacity, NEVER, dtype=np.int64)
        self.size = 0  # published last; readers trust slots < size only
        self.min_delete = int(NEVER)


class SegmentChain:
    """Append-only list of segments; only the tail accepts appends."""

    __slots__ = ("segments",)

    def __init__(self):
        self.segments: List[Segment] = [Segment()]

    def append(self, nbr: int, row: int, ins_v: int) -> None:
        tail = self.segments[-1]
        if tail.size == len(tail.nbr):
            tail = Segment()
            self.segments.append(tail)
        i = tail.size
        tail.nbr[i] = nbr
        tail.row[i] = row
        tail.ins[i] = ins_v
        tail.dele[i] = NEVER
        tail.size = i + 1

    def append_many(self, nbrs: np.ndarray, rows: np.ndarray, ins_v: int) -> None:
        n = len(nbrs)
        pos = 0
        while pos < n:
            tail = self.segments[-1]
            if tail.size == len(tail.nbr):
                tail = Segment()
                self.segments.append(tail)
            take = min(n - pos, len(tail.nbr) - tail.size)
            s = tail.size
            tail.nbr[s:s + take] = nbrs[pos:pos + take]
            tail.row[s:s + take] = rows[pos:pos + take]
            tail.ins[s:s + take] = ins_v
            tail.dele[s:s + take] = NEVER
            tail.size = s + take
            pos += take

    def iter_visible(self, version: int) -> Iterator[Tuple[int, int]]:
        """(neighbor idx, row) pairs visible at a version, chain order."""
        for seg in self.segments:
            size = seg.size
            if size == 0:
                continue
            if seg.ins[size - 1] <= version and seg.min_delete > version:
                for i in range(size):
                    yield int(seg.nbr[i]), int(seg.row[i])
            else:
                ins, dele = seg.ins, seg.dele
                for i in range(size):
                    if ins[i] <= version < dele[i]:
                        yield int(seg.nbr[i]), int(seg.row[i])

    def count_visible(self, version: int) -> int:
        total = 0
        for seg in self.segments:
            size = seg.size
            if size == 0:
                continue
            if seg.ins[size - 1] <= version and seg.min_delete > version:
                total += size
            else:
                total += int(
                    ((seg.ins[:size] <= version) & (seg.dele[:size] > version)).sum())
        return total

    def scan_visible(self, version: int) -> Tuple[int, int]:
        """(count, neighbor-index checksum) via per-segment vector ops."""
        total = 0
        checksum = 0
        for seg in self.segments:
            size = seg.size
            if size == 0:
                continue
            if seg.ins[size - 1] <= version and seg.min_delete > version:
                total += size
                checksum += int(seg.nbr[:size].sum())
            else:
                mask = (seg.ins[:size] <= version) & (seg.dele[:size] > version)
                total += int(mask.sum())
                checksum += int(seg.nbr[:size][mask].sum())
        return total, checksum

    def find_visible(self, version: int, nbr: int, ordinal: int,
                     skip=()) -> Optional[Tuple[Segment, int]]:
        """Locate the ordinal-th visible entry pointing at nbr, ignoring
        slots staged for deletion by the current batch."""
        seen = 0
        for seg in self.segments:
            size = seg.size
            for i in range(size):
                if (seg.nbr[i] == nbr and seg.ins[i] <= version < seg.dele[i]
                        and (id(seg), i) not in skip):
                    if seen == ordinal:
                        return seg, i
                    seen += 1
        return None


class _VertexSet:
    """Vertices of one type: pk list in insert order (idx = position),
    insert versions (monotone), property cells."""

    __slots__ = ("pks", "insert_v", "pk_index", "cells")

    def __init__(self, prop_names):
        self.pks: list = []
        self.insert_v: list = []
        self.pk_index: Dict[Value, int] = {}
        # prop -> list of cells; cell = (version, value, prev cell | None)
        self.cells: Dict[str, list] = {p: [] for p in prop_names}


class MvccStore(GraphStore):
    def __init__(self, schema: PropertyGraphSchema, shards: int = 1):
        schema_validate(schema)
        self.schema = schema
        self._shards = max(1, shards)
        self.committed_version = 0
        self._writer = threading.Lock()
        self._vsets: List[_VertexSet] = [
            _VertexSet([n for n, _ in d.properties]) for d in schema.vertex_types
        ]
        # per etype: {src idx: chain} and {dst idx: chain}
        self._out: List[Dict[int, SegmentChain]] = [{} for _ in schema.edge_types]
        self._in: List[Dict[int, SegmentChain]] = [{} for _ in schema.edge_types]
        self._erows: List[int] = [0 for _ in schema.edge_types]
        # per etype: prop -> {row: cell}
        self._ecells: List[Dict[str, Dict[int, tuple]]] = [
            {n: {} for n, _ in d.properties} for d in schema.edge_types
        ]
        self._open_versions: Dict[int, int] = {}
        self._open_lock = threading.Lock()

    # -- snapshots --

    def capabilities(self) -> CapabilitySet:
        return _CAPS

    def _register(self, version: int) -> None:
        with self._open_lock:
            self._open_versions[version] = self._open_versions.get(version, 0) + 1

    def _unregister(self, version: int) -> None:
        with self._open_lock:
            n = self._open_versions.get(version, 0) - 1
            if n <= 0:
                self._open_versions.pop(version, None)
            else:
                self._open_versions[version] = n

    def min_open_version(self) -> Optional[int]:
        with self._open_lock:
            return min(self._open_versions) if self._open_versions else None

    def snapshot_latest(self) -> "MvccSnapshot":
        return MvccSnapshot(self, self.committed_version)

    def snapshot_at(self, version: int) -> "MvccSnapshot":
        if not 0 <= version <= self.committed_version:
            raise UnknownVersion(
                f"version {version} (committed {self.committed_version})")
        return MvccSnapshot(self, version)

    # -- write path --

    def begin_batch(self, block: bool = True) -> "WriteBatch":
        if not self._writer.acquire(blocking=block):
            raise WriterBusy("another write batch is open")
        return WriteBatch(self)

    def bulk_load(self, vertex_tables: Dict[str, VertexTable],
                  edge_tables: Dict[str, EdgeTable]) -> int:
        """Load loader tables as one commit, matching the immutable
        builder's id and row assignment (edges sorted by (src, dst))."""
        with self.begin_batch() as batch:
            for decl in self.schema.vertex_types:
                table = vertex_tables.get(decl.name)
                if table is None:
                    continue
                pk_col = table.columns[decl.primary_key]
                prop_names = [n for n, _ in decl.properties]
                for i in range(table.nrows):
                    props = {
                        p: table.columns[p][i]
                        for p in prop_names
                        if p in table.columns and table.columns[p][i] is not None
                    }
                    batch.insert_vertex(decl.name, pk_col[i], props)
            for decl in self.schema.edge_types:
                table = edge_tables.get(decl.name)
                if table is None or table.nrows == 0:
                    batch._bulk_edges(decl.name, [], [], {})
                    continue
                batch._bulk_edges(decl.name, table.src_pk, table.dst_pk,
                                  table.columns)
            return batch.commit()

    def compact(self, horizon: int) -> dict:
        """Drop entries deleted at or below the horizon and rebuild chains
        sorted by neighbor index. Result sets at any version >= horizon are
        unchanged; enumeration order of chains may change, so don't compact
        while queries are mid-flight on open snapshots."""
        if horizon > self.committed_version:
            raise HorizonTooNew(f"horizon {horizon} > committed {self.committed_version}")
        oldest = self.min_open_version()
        if oldest is not None and horizon > oldest:
            raise HorizonTooNew(f"horizon {horizon} > oldest open snapshot {oldest}")
        with self._writer:
            dropped = 0
            for chains in (*self._out, *self._in):
                for idx, chain in list(chains.items()):
                    entries = []
                    removed = 0
                    for seg in chain.segments:
                        for i in range(seg.size):
                            if seg.dele[i] <= horizon:
                                removed += 1
                            else:
                                entries.append((int(seg.nbr[i]), int(seg.row[i]),
                                                int(seg.ins[i]), int(seg.dele[i])))
                    if removed == 0:
                        continue
                    dropped += removed
                    entries.sort(key=lambda t: (t[0], t[1]))
                    fresh = SegmentChain()
                    for nbr, row, ins_v, del_v in entries:
                        fresh.append(nbr, row, ins_v)
                        tail = fresh.segments[-1]
                        if del_v != NEVER:
                            tail.dele[tail.size - 1] = del_v
                            tail.min_delete = min(tail.min_delete, del_v)
                    chains[idx] = fresh
            prop_dropped = 0
            for vset in self._vsets:
                for cells in vset.cells.values():
                    for i, cell in enumerate(cells):
                        if cell is not None:
                            cells[i], k = _prune_cell(cell, horizon)
                            prop_dropped += k
            for ecells in self._ecells:
                for per_row in ecells.values():
                    for row, cell in per_row.items():
                        per_row[row], k = _prune_cell(cell, horizon)
                        prop_dropped += k
            # adjacency-entry count is the headline number
            return {"entries_dropped": dropped // 2,
                    "prop_versions_dropped": prop_dropped}


def _prune_cell(cell: tuple, horizon: int) -> Tuple[tuple, int]:
    """Keep the head, every version above the horizon, and the newest
    version at or below it."""
    kept = []
    cur = cell
    while cur is not None:
        kept.append(cur)
        if cur[0] <= horizon:
            break
        cur = cur[2]
    dropped = 0
    tail = kept[-1][2]
    while tail is not None:
        dropped += 1
        tail = tail[2]
    rebuilt = None
    for v, val, _prev in reversed(kept):
        rebuilt = (v, val, rebuilt)
    return rebuilt, dropped


class WriteBatch:
    """All-or-nothing mutation set. Mutations are validated as they are
    added (the writer lock freezes the store underneath) and applied at
    commit with write_version = committed_version + 1."""

    def __init__(self, store: MvccStore):
        self._store = store
        self._wv = store.committed_version + 1
        self._done = False
        self._new_vertices: List[Tuple[int, Value, dict]] = []
        self._staged_idx: List[Dict[Value, int]] = [dict() for _ in store.schema.vertex_types]
        self._staged_count: List[int] = [len(vs.pks) for vs in store._vsets]
        self._new_edges: List[Tuple[int, int, int, dict]] = []          # (et, src, dst, props)
        self._bulk: List[Tuple[int, np.ndarray, np.ndarray, dict]] = []  # pre-sorted blocks
        self._staged_erows: List[int] = list(store._erows)
        self._deletes: List[Tuple[Segment, int, Segment, int]] = []
        self._del_slots: set = set()
        self._vprops: List[Tuple[int, int, str, Value]] = []
        self._eprops: List[Tuple[int, int, str, Value]] = []

    # -- context manager: abort on error --

    def __enter__(self) -> "WriteBatch":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if not self._done:
            self.abort()

    def abort(self) -> None:
        if not self._done:
            self._done = True
            self._store._writer.release()

    # -- mutations --

    def _resolve(self, vt: int, pk: Value) -> Optional[int]:
        idx = self._store._vsets[vt].pk_index.get(pk)
        if idx is None:
            idx = self._staged_idx[vt].get(pk)
        return idx

    def insert_vertex(self, vtype: Union[int, str], pk: Value,
                      props: Optional[dict] = None) -> int:
        vt = self._store.schema.vtype_ordinal(vtype)
        decl = self._store.schema.vertex_types[vt]
        if pk is None or self._resolve(vt, pk) is not None:
            raise DuplicatePk(decl.name, pk)
        props = dict(props or {})
        for p in props:
            if decl.property_dtype(p) is None:
                raise UnknownProperty(f"{decl.name}.{p}")
        # the pk is itself a declared property
        if props.setdefault(decl.primary_key, pk) != pk:
            raise DuplicatePk(decl.name, pk)
        idx = self._staged_count[vt]
        self._staged_count[vt] += 1
        self._staged_idx[vt][pk] = idx
        self._new_vertices.append((vt, pk, props))
        return idx

    def insert_edge(self, etype: Union[int, str], src_pk: Value, dst_pk: Value,
                    props: Optional[dict] = None) -> None:
        et = self._store.schema.etype_ordinal(etype)
        decl = self._store.schema.edge_types[et]
        s = self._resolve(self._store.schema.vtype_ordinal(decl.src_type), src_pk)
        if s is None:
            raise DanglingEdge(decl.name, src_pk)
        d = self._resolve(self._store.schema.vtype_ordinal(decl.dst_type), dst_pk)
        if d is None:
            raise DanglingEdge(decl.name, dst_pk)
        props = props or {}
        for p in props:
            if decl.property_dtype(p) is None:
                raise UnknownProperty(f"{decl.name}.{p}")
        self._new_edges.append((et, s, d, props))

    def _bulk_edges(self, etype, src_pks, dst_pks, columns) -> None:
        """Loader path: resolve, sort by (src, dst), stage as one block."""
        et = self._store.schema.etype_ordinal(etype)
        decl = self._store.schema.edge_types[et]
        s_ord = self._store.schema.vtype_ordinal(decl.src_type)
        d_ord = self._store.schema.vtype_ordinal(decl.dst_type)
        m = len(src_pks)
        src = np.empty(m, dtype=np.int64)
        dst = np.empty(m, dtype=np.int64)
        for i in range(m):
            s = self._resolve(s_ord, src_pks[i])
            if s is None:
                raise DanglingEdge(decl.name, src_pks[i])
            d = self._resolve(d_ord, dst_pks[i])
            if d is None:
                raise DanglingEdge(decl.name, dst_pks[i])
            src[i] = s
            dst[i] = d
        order = np.lexsort((dst, src))
        props = {
            p: [columns[p][int(i)] for i in order]
            for p in columns
        }
        self._bulk.append((et, src[order], dst[order], props))

    def delete_edge(self, etype: Union[int, str], src_pk: Value, dst_pk: Value,
                    ordinal: int = 0) -> None:
        """Delete the ordinal-th committed edge between two endpoints.
        Edges inserted by this same batch cannot be deleted (a delete
        version equal to the insert version would make the entry
        visible nowhere)."""
        et = self._store.schema.etype_ordinal(etype)
        decl = self._store.schema.edge_types[et]
        cv = self._store.committed_version
        s = self._store._vsets[self._store.schema.vtype_ordinal(decl.src_type)].pk_index.get(src_pk)
        d = self._store._vsets[self._store.schema.vtype_ordinal(decl.dst_type)].pk_index.get(dst_pk)
        if s is None:
            raise DanglingEdge(decl.name, src_pk)
        if d is None:
            raise DanglingEdge(decl.name, dst_pk)
        out_chain = self._store._out[et].get(s)
        hit = (out_chain.find_visible(cv, d, ordinal, self._del_slots)
               if out_chain else None)
        if hit is None:
            raise NotFound(
                f"edge {decl.name} {src_pk!r}->{dst_pk!r} ordinal {ordinal}")
        seg, i = hit
        row = int(seg.row[i])
        in_chain = self._store._in[et].get(d)
        in_hit = None
        if in_chain is not None:
            for iseg in in_chain.segments:
                for j in range(iseg.size):
                    if iseg.row[j] == row and iseg.nbr[j] == s:
                        in_hit = (iseg, j)
                        break
                if in_hit:
                    break
        if in_hit is None:
            raise NotFound(f"edge row {row} missing from in-chain")
        self._del_slots.add((id(seg), i))
        self._del_slots.add((id(in_hit[0]), in_hit[1]))
        self._deletes.append((seg, i, in_hit[0], in_hit[1]))

    def set_vertex_prop(self, vtype: Union[int, str], pk: Value, prop: str,
                        value: Value) -> None:
        vt = self._store.schema.vtype_ordinal(vtype)
        decl = self._store.schema.vertex_types[vt]
        idx = self._resolve(vt, pk)
        if idx is None:
            raise UnknownVertexError(f"{decl.name} pk {pk!r}")
        if decl.property_dtype(prop) is None:
            raise UnknownProperty(f"{decl.name}.{prop}")
        self._vprops.append((vt, idx, prop, value))

    def set_edge_prop(self, etype: Union[int, str], src_pk: Value, dst_pk: Value,
                      prop: str, value: Value, ordinal: int = 0) -> None:
        et = self._store.schema.etype_ordinal(etype)
        decl = self._store.schema.edge_types[et]
        if decl.property_dtype(prop) is None:
            raise UnknownProperty(f"{decl.name}.{prop}")
        cv = self._store.committed_version
        s = self._store._vsets[self._store.schema.vtype_ordinal(decl.src_type)].pk_index.get(src_pk)
        d = self._store._vsets[self._store.schema.vtype_ordinal(decl.dst_type)].pk_index.get(dst_pk)
        if s is None or d is None:
            raise DanglingEdge(decl.name, src_pk if s is None else dst_pk)
        chain = self._store._out[et].get(s)
        hit = (chain.find_visible(cv, d, ordinal, self._del_slots)
               if chain else None)
        if hit is None:
            raise NotFound(f"edge {decl.name} {src_pk!r}->{dst_pk!r}")
        self._eprops.append((et, int(hit[0].row[hit[1]]), prop, value))

    # -- commit --

    def commit(self) -> int:
        if self._done:
            raise WriterBusy("batch already finished")
        store = self._store
        wv = self._wv
        try:
            for vt, pk, props in self._new_vertices:
                vset = store._vsets[vt]
                idx = len(vset.pks)
                for pname, cells in vset.cells.items():
                    cells.append((wv, props[pname], None) if pname in props else None)
                vset.pk_index[pk] = idx
                vset.insert_v.append(wv)
                vset.pks.append(pk)  # appended last: len(pks) is the readable count

            for et, src_arr, dst_arr, props in self._bulk:
                self._apply_edge_block(et, src_arr, dst_arr, props, wv)
            if self._new_edges:
                by_et: Dict[int, list] = {}
                for et, s, d, props in self._new_edges:
                    by_et.setdefault(et, []).append((s, d, props))
                for et, items in by_et.items():
                    items.sort(key=lambda t: (t[0], t[1]))
                    src_arr = np.array([t[0] for t in items], dtype=np.int64)
                    dst_arr = np.array([t[1] for t in items], dtype=np.int64)
                    cols: Dict[str, list] = {}
                    for pname, _dt in store.schema.edge_types[et].properties:
                        cols[pname] = [t[2].get(pname) for t in items]
                    self._apply_edge_block(et, src_arr, dst_arr, cols, wv)

            for out_seg, i, in_seg, j in self._deletes:
                out_seg.dele[i] = wv
                out_seg.min_delete = min(out_seg.min_delete, wv)
                in_seg.dele[j] = wv
                in_seg.min_delete = min(in_seg.min_delete, wv)

            for vt, idx, prop, value in self._vprops:
                cells = store._vsets[vt].cells[prop]
                cells[idx] = (wv, value, cells[idx])
            for et, row, prop, value in self._eprops:
                per_row = store._ecells[et][prop]
                per_row[row] = (wv, value, per_row.get(row))

            store.committed_version = wv  # the publish point
            return wv
        finally:
            self._done = True
            store._writer.release()

    def _apply_edge_block(self, et: int, src_arr: np.ndarray,
                          dst_arr: np.ndarray, props: dict, wv: int) -> None:
        store = self._store
        m = len(src_arr)
        if m == 0:
            return
        row0 = store._erows[et]
        rows = np.arange(row0, row0 + m, dtype=np.int64)
        store._erows[et] = row0 + m

        bounds = np.nonzero(np.diff(src_arr))[0] + 1
        starts = np.concatenate(([0], bounds))
        ends = np.concatenate((bounds, [m]))
        for s, e in zip(starts, ends):
            chain = store._out[et].setdefault(int(src_arr[s]), SegmentChain())
            chain.append_many(dst_arr[s:e], rows[s:e], wv)

        order = np.lexsort((src_arr, dst_arr))
        dst_s = dst_arr[order]
        src_s = src_arr[order]
        rows_s = rows[order]
        bounds = np.nonzero(np.diff(dst_s))[0] + 1
        starts = np.concatenate(([0], bounds))
        ends = np.concatenate((bounds, [m]))
        for s, e in zip(starts, ends):
            chain = store._in[et].setdefault(int(dst_s[s]), SegmentChain())
            chain.append_many(src_s[s:e], rows_s[s:e], wv)

        for pname, values in props.items():
            if values is None:
                continue
            per_row = store._ecells[et][pname]
            for k, v in enumerate(values):
                if v is not None:
                    per_row[int(rows[k])] = (wv, v, None)


class MvccSnapshot(GraphSnapshot):
    def __init__(self, store: MvccStore, version: int):
        self._s = store
        self.schema = store.schema
        self.version = version
        self._counts: Dict[int, int] = {}
        store._register(version)
        self._closed = False
        self._finalizer = weakref.finalize(self, store._unregister, version)

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._finalizer()

    def __enter__(self) -> "MvccSnapshot":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def capabilities(self) -> CapabilitySet:
        return _CAPS

    def vertex_count(self, vtype) -> int:
        vt = self.schema.vtype_ordinal(vtype)
        cached = self._counts.get(vt)
        if cached is None:
            vset = self._s._vsets[vt]
            n = len(vset.pks)  # capture before bisect: list is append-only
            cached = bisect.bisect_right(vset.insert_v, self.version, 0, n)
            self._counts[vt] = cached
        return cached

    def vertex_list(self, vtype) -> VertexListHandle:
        vt = self.schema.vtype_ordinal(vtype)
        return VertexListHandle(vt, None, self.vertex_count(vt))

    def adjacency(self, v: VertexRef, direction: Direction, etype) -> AdjListHandle:
        et = self.schema.etype_ordinal(etype)
        self.check_vertex(v)
        decl = self.schema.edge_types[et]
        src_ord = self.schema.vtype_ordinal(decl.src_type)
        dst_ord = self.schema.vtype_ordinal(decl.dst_type)
        version = self.version

        def handle(direction: Direction) -> IterAdjList:
            if direction is Direction.OUT:
                chain = self._s._out[et].get(v.idx) if v.vtype == src_ord else None
                nbr_vt, swap = dst_ord, False
            else:
                chain = self._s._in[et].get(v.idx) if v.vtype == dst_ord else None
                nbr_vt, swap = src_ord, True
            if chain is None:
                return IterAdjList(v, direction, et, lambda: iter(()), 0)

            def gen() -> Iterator[Tuple[VertexRef, EdgeRef]]:
                for nbr_idx, row in chain.iter_visible(version):
                    nbr = VertexRef(nbr_vt, nbr_idx)
                    e = (EdgeRef(et, nbr, v, row) if swap
                         else EdgeRef(et, v, nbr, row))
                    yield nbr, e

            return IterAdjList(v, direction, et, gen)

        if direction is Direction.BOTH:
            return ChainedAdjList(v, et, handle(Direction.OUT), handle(Direction.IN))
        return handle(direction)

    def degree(self, v: VertexRef, direction: Direction, etype) -> int:
        et = self.schema.etype_ordinal(etype)
        self.check_vertex(v)
        decl = self.schema.edge_types[et]
        total = 0
        if direction in (Direction.OUT, Direction.BOTH):
            if v.vtype == self.schema.vtype_ordinal(decl.src_type):
                chain = self._s._out[et].get(v.idx)
                if chain is not None:
                    total += chain.count_visible(self.version)
        if direction in (Direction.IN, Direction.BOTH):
            if v.vtype == self.schema.vtype_ordinal(decl.dst_type):
                chain = self._s._in[et].get(v.idx)
                if chain is not None:
                    total += chain.count_visible(self.version)
        return total

    def vertex_property(self, v: VertexRef, prop: str) -> Value:
        self.check_vertex(v)
        vset = self._s._vsets[v.vtype]
        if prop not in vset.cells:
            raise UnknownProperty(f"{self.schema.vertex_types[v.vtype].name}.{prop}")
        cell = vset.cells[prop][v.idx] if v.idx < len(vset.cells[prop]) else None
        while cell is not None:
            if cell[0] <= self.version:
                return cell[1]
            cell = cell[2]
        return None

    def edge_property(self, e: EdgeRef, prop: str) -> Value:
        ecells = self._s._ecells[e.etype]
        if prop not in ecells:
            raise UnknownProperty(f"{self.schema.edge_types[e.etype].name}.{prop}")
        if not 0 <= e.row < self._s._erows[e.etype]:
            raise IndexOutOfRange(f"edge row {e.row}")
        cell = ecells[prop].get(e.row)
        while cell is not None:
            if cell[0] <= self.version:
                return cell[1]
            cell = cell[2]
        return None

    def lookup_by_pk(self, vtype, key: Value) -> VertexRef:
        vt = self.schema.vtype_ordinal(vtype)
        idx = self._s._vsets[vt].pk_index.get(key)
        if idx is None or idx >= self.vertex_count(vt):
            raise NotFound(f"pk {key!r} in {self.schema.vertex_types[vt].name}")
        return VertexRef(vt, idx)

    def shards(self) -> int:
        return self._s._shards

    def edge_scan(self) -> Tuple[int, int]:
        """Native scan contract: per-vertex chain walk with per-segment
        vector visibility checks."""
        total = 0
        checksum = 0
        for et, decl in enumerate(self.schema.edge_types):
            src_ord = self.schema.vtype_ordinal(decl.src_type)
            chains = self._s._out[et]
            for idx in range(self.vertex_count(src_ord)):
                chain = chains.get(idx)
                if chain is not None:
                    c, k = chain.scan_visible(self.version)
                    total += c
                    checksum += k
        return total, checksum
