"""Chunked columnar on-disk graph format: writer, lazy zone-mapped reader
that doubles as a read-only store, and CSV/store converters.

Chunk file layout (normative, little-endian):

    magic "GARL" | u16 format_version | u8 codec | u8 dtype |
    u32 row_count | 8B zone_min | 8B zone_max | payload

codec: 0 = raw, 1 = DEFLATE (RFC 1951) over the payload bytes.
dtype: 0 bool (1 byte/row), 1 int64, 2 float64, 3 string, 4 uint64.
String payload: (row_count+1) u32 offsets, then the byte blob. String zone
values are the first 8 bytes zero-padded, hence conservative.

Vertex chunk i covers internal ids [i*chunk_size, (i+1)*chunk_size).
offsets.c<i> holds local out-degree prefix sums for that vertex range
(chunk rows + 1 entries); targets.c<i> holds exactly those vertices'
neighbors, so one neighbor fetch costs at most two chunk reads. Edge
property files are chunked by fixed row ranges.
"""

from __future__ import annotations

import json
import struct
import threading
import zlib
from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..errors import (
    BadMagic,
    CorruptChunk,
    NonEmptyDir,
    NotFound,
    SchemaMismatch,
    UnknownProperty,
    UnsupportedVersion,
)
from ..model import (
    BOOL,
    FLOAT64,
    INT64,
    STRING,
    DataType,
    Direction,
    EdgeRef,
    PropertyGraphSchema,
    Value,
    VertexRef,
    schema_from_json,
    schema_to_json,
)
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
from .immutable import Csr, ImmutableStore
from .tables import EdgeTable, VertexTable

MAGIC = b"GARL"
FORMAT_VERSION = 1
CODEC_RAW, CODEC_DEFLATE = 0, 1
_CODEC_NAMES = {"raw": CODEC_RAW, "deflate": CODEC_DEFLATE}

DT_BOOL, DT_I64, DT_F64, DT_STR, DT_U64 = 0, 1, 2, 3, 4
_DTYPE_CODES = {BOOL: DT_BOOL, INT64: DT_I64, FLOAT64: DT_F64, STRING: DT_STR}

_HEADER = struct.Struct("<4sHBBI8s8s")  # 28 bytes

_CAPS = CapabilitySet(
    adjacency_array=True,
    vertex_filter_pushdown=True,
    vertex_to_shard=False,
    snapshot_versions=False,
)


def _zone_bytes(dtype_code: int, v) -> bytes:
    if dtype_code == DT_I64:
        return struct.pack("<q", int(v))
    if dtype_code == DT_F64:
        return struct.pack("<d", float(v))
    if dtype_code == DT_BOOL:
        return struct.pack("<Q", 1 if v else 0)
    if dtype_code == DT_U64:
        return struct.pack("<Q", int(v))
    b = v.encode("utf-8")[:8]
    return b + b"\x00" * (8 - len(b))


def _zone_value(dtype_code: int, raw: bytes):
    if dtype_code == DT_I64:
        return struct.unpack("<q", raw)[0]
    if dtype_code == DT_F64:
        return struct.unpack("<d", raw)[0]
    if dtype_code in (DT_BOOL, DT_U64):
        return struct.unpack("<Q", raw)[0]
    return raw


def encode_chunk(dtype_code: int, values, codec: int) -> bytes:
    """Serialize one chunk. `values` is a numpy array (numeric) or a list
    of str."""
    n = len(values)
    if dtype_code == DT_STR:
        blobs = [v.encode("utf-8") for v in values]
        offs = np.zeros(n + 1, dtype=np.uint32)
        np.cumsum([len(b) for b in blobs], out=offs[1:])
        payload = offs.tobytes() + b"".join(blobs)
        zmin = _zone_bytes(DT_STR, min(values)) if n else b"\x00" * 8
        zmax = _zone_bytes(DT_STR, max(values)) if n else b"\x00" * 8
    else:
        np_dt = {DT_BOOL: np.uint8, DT_I64: "<i8", DT_F64: "<f8", DT_U64: "<u8"}[dtype_code]
        arr = np.asarray(values).astype(np_dt)
        payload = arr.tobytes()
        if n:
            if dtype_code == DT_F64 and np.isnan(arr).any():
                # NaN sorts above all finite values in the value order
                finite = arr[~np.isnan(arr)]
                zmin = _zone_bytes(dtype_code, finite.min() if len(finite) else float("nan"))
                zmax = _zone_bytes(dtype_code, float("nan"))
            else:
                zmin = _zone_bytes(dtype_code, arr.min())
                zmax = _zone_bytes(dtype_code, arr.max())
        else:
            zmin = zmax = b"\x00" * 8
    if codec == CODEC_DEFLATE:
        co = zlib.compressobj(6, zlib.DEFLATED, -15)
        payload = co.compress(payload) + co.flush()
    return _HEADER.pack(MAGIC, FORMAT_VERSION, codec, dtype_code, n, zmin, zmax) + payload


def parse_header(raw: bytes, path: str = "?") -> tuple:
    if len(raw) < _HEADER.size:
        raise CorruptChunk(path, "truncated header")
    magic, ver, codec, dtype_code, n, zmin, zmax = _HEADER.unpack(raw[:_HEADER.size])
    if magic != MAGIC:
        raise BadMagic(f"{path}: {magic!r}")
    if ver != FORMAT_VERSION:
        raise UnsupportedVersion(f"{path}: format_version {ver}")
    if codec not in (CODEC_RAW, CODEC_DEFLATE):
        raise CorruptChunk(path, f"unknown codec {codec}")
    return codec, dtype_code, n, zmin, zmax


def decode_chunk(raw: bytes, path: str = "?"):
    """Returns (dtype_code, values) where values is a numpy array or a
    list of str."""
    codec, dtype_code, n, _zmin, _zmax = parse_header(raw, path)
    payload = raw[_HEADER.size:]
    if codec == CODEC_DEFLATE:
        try:
            payload = zlib.decompress(payload, -15)
        except zlib.error as e:
            raise CorruptChunk(path, f"deflate: {e}") from None
    if dtype_code == DT_STR:
        need = (n + 1) * 4
        if len(payload) < need:
            raise CorruptChunk(path, "truncated string offsets")
        offs = np.frombuffer(payload[:need], dtype="<u4")
        blob = payload[need:]
        if len(blob) < int(offs[-1]) if n else False:
            raise CorruptChunk(path, "truncated string blob")
        try:
            values: object = [
                blob[int(offs[i]):int(offs[i + 1])].decode("utf-8") for i in range(n)
            ]
        except UnicodeDecodeError as e:
            raise CorruptChunk(path, f"utf-8: {e}") from None
    else:
        np_dt = {DT_BOOL: np.uint8, DT_I64: "<i8", DT_F64: "<f8", DT_U64: "<u8"}[dtype_code]
        width = 1 if dtype_code == DT_BOOL else 8
        if len(payload) != n * width:
            raise CorruptChunk(path, f"payload is {len(payload)}B, want {n * width}B")
        values = np.frombuffer(payload, dtype=np_dt)
        if dtype_code == DT_BOOL:
            values = values.astype(bool)
    return dtype_code, values


def _zone_refutes(dtype_code: int, zmin, zmax, op: str, const: Value) -> bool:
    """True when no value inside [zmin, zmax] can satisfy the clause.
    Must stay conservative; string zones compare 8-byte prefixes."""
    if isinstance(const, bool):
        if dtype_code != DT_BOOL:
            return False
        c = 1 if const else 0
    elif isinstance(const, (int, float)):
        if dtype_code not in (DT_I64, DT_F64, DT_U64):
            return False
        if isinstance(const, float) and const != const:  # NaN constant
            return False
        c = const
        if dtype_code == DT_F64 and zmax != zmax:  # chunk contains NaN
            # NaN satisfies >, >=, != against any constant; can't refute those
            if op in (">", ">=", "!="):
                return False
            zmax = float("inf")
    elif isinstance(const, str):
        if dtype_code != DT_STR:
            return False
        c = _zone_bytes(DT_STR, const)
        if op == "!=":
            return False  # prefix equality can't prove full equality
    else:
        return False
    if op == "=":
        return c < zmin or c > zmax
    if op == "<":
        return zmin >= c
    if op == "<=":
        return zmin > c
    if op == ">":
        return zmax <= c
    if op == ">=":
        return zmax < c
    if op == "!=":
        return zmin == zmax == c
    return False


# --- writer -------------------------------------------------------------------

def write_archive(
    snap: GraphSnapshot,
    directory: Union[str, Path],
    chunk_size: int = 4096,
    codec: str = "deflate",
) -> dict:
    """Write one snapshot as an archive; bytes are deterministic for
    identical input. Returns the manifest (the graph.meta document)."""
    root = Path(directory)
    if root.exists() and any(root.iterdir()):
        raise NonEmptyDir(str(root))
    root.mkdir(parents=True, exist_ok=True)
    codec_id = _CODEC_NAMES.get(codec)
    if codec_id is None:
        raise ValueError(f"unknown codec {codec!r}")
    schema = snap.schema
    files: List[str] = []

    def emit(relpath: str, dtype_code: int, values) -> None:
        p = root / relpath
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(encode_chunk(dtype_code, values, codec_id))
        files.append(relpath)

    counts = {"vertices": {}, "edges": {}}
    for vt, decl in enumerate(schema.vertex_types):
        n = snap.vertex_count(vt)
        counts["vertices"][decl.name] = n
        for pname, pdt in decl.properties:
            code = _DTYPE_CODES[pdt]
            for ci in range(max(1, -(-n // chunk_size)) if n else 0):
                lo, hi = ci * chunk_size, min((ci + 1) * chunk_size, n)
                vals = [snap.vertex_property(VertexRef(vt, i), pname)
                        for i in range(lo, hi)]
                if any(v is None for v in vals):
                    raise SchemaMismatch(
                        f"{decl.name}.{pname} has nulls; the archive format "
                        "has no null encoding")
                if pdt != STRING:
                    vals = np.asarray(vals)
                emit(f"vertex/{decl.name}/{pname}.c{ci}", code, vals)

    edge_chunk_rows: Dict[str, List[int]] = {}
    for et, decl in enumerate(schema.edge_types):
        if any(p in ("offsets", "targets") for p, _ in decl.properties):
            raise SchemaMismatch(
                f"edge type {decl.name} has a property colliding with a "
                "topology file name")
        src_ord = schema.vtype_ordinal(decl.src_type)
        nsrc = snap.vertex_count(src_ord)
        degrees = np.zeros(nsrc, dtype=np.int64)
        all_targets: List[np.ndarray] = []
        edge_refs: List[EdgeRef] = []
        has_props = bool(decl.properties)
        for i in range(nsrc):
            adj = snap.adjacency(VertexRef(src_ord, i), Direction.OUT, et)
            pairs = sorted(((nbr.idx, e.row, e) for nbr, e in adj),
                           key=lambda t: (t[0], t[1]))
            degrees[i] = len(pairs)
            all_targets.append(np.array([p[0] for p in pairs], dtype=np.int64))
            if has_props:
                edge_refs.extend(p[2] for p in pairs)
        total_edges = int(degrees.sum())
        counts["edges"][decl.name] = total_edges

        chunk_rows: List[int] = []
        nchunks = max(1, -(-nsrc // chunk_size)) if nsrc else 0
        for ci in range(nchunks):
            lo, hi = ci * chunk_size, min((ci + 1) * chunk_size, nsrc)
            local = degrees[lo:hi]
            offsets = np.zeros(len(local) + 1, dtype=np.int64)
            np.cumsum(local, out=offsets[1:])
            emit(f"edge/{decl.name}/offsets.c{ci}", DT_U64, offsets)
            tgt = (np.concatenate(all_targets[lo:hi]) if hi > lo
                   else np.empty(0, dtype=np.int64))
            emit(f"edge/{decl.name}/targets.c{ci}", DT_U64, tgt)
            chunk_rows.append(int(offsets[-1]))
        edge_chunk_rows[decl.name] = chunk_rows

        for pname, pdt in decl.properties:
            code = _DTYPE_CODES[pdt]
            for ci in range(max(1, -(-total_edges // chunk_size)) if total_edges else 0):
                lo, hi = ci * chunk_size, min((ci + 1) * chunk_size, total_edges)
                vals = [snap.edge_property(edge_refs[r], pname) for r in range(lo, hi)]
                if any(v is None for v in vals):
                    raise SchemaMismatch(
                        f"{decl.name}.{pname} has nulls; the archive format "
                        "has no null encoding")
                if pdt != STRING:
                    vals = np.asarray(vals)
                emit(f"edge/{decl.name}/{pname}.c{ci}", code, vals)

    manifest = {
        "format_version": FORMAT_VERSION,
        "chunk_size": chunk_size,
        "codec": codec,
        "schema": schema_to_json(schema),
        "counts": counts,
        "edge_chunk_rows": edge_chunk_rows,
        "files": sorted(files),
    }
    (root / "graph.meta").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# --- reader ---------------------------------------------------------------------

class ArchiveStore(GraphStore):
    """Read-only store over an archive directory with lazy, cached chunk
    decodes and zone-map chunk skipping."""

    def __init__(self, root: Path, manifest: dict, shards: int = 1,
                 cache_chunks: int = 1024):
        self.root = root
        self.manifest = manifest
        self.schema = schema_from_json(manifest["schema"])
        self.chunk_size = int(manifest["chunk_size"])
        self._shards = max(1, shards)
        self._cache: "OrderedDict[str, object]" = OrderedDict()
        self._cache_cap = cache_chunks
        self._lock = threading.RLock()
        self._vcount = [manifest["counts"]["vertices"].get(d.name, 0)
                        for d in self.schema.vertex_types]
        self._ecount = [manifest["counts"]["edges"].get(d.name, 0)
                        for d in self.schema.edge_types]
        rows = manifest.get("edge_chunk_rows", {})
        self._row_starts = []
        for d in self.schema.edge_types:
            per = rows.get(d.name, [])
            starts = np.zeros(len(per) + 1, dtype=np.int64)
            np.cumsum(per, out=starts[1:])
            self._row_starts.append(starts)
        self._pk_maps: List[Optional[dict]] = [None] * len(self.schema.vertex_types)
        self._reverse: List[Optional[Csr]] = [None] * len(self.schema.edge_types)
        self.decode_counts: Dict[str, int] = {}

    # -- chunk IO --

    def _bump(self, relpath: str) -> None:
        kind = relpath.split("/")[-1].split(".")[0]
        self.decode_counts[kind] = self.decode_counts.get(kind, 0) + 1

    def chunk(self, relpath: str):
        with self._lock:
            if relpath in self._cache:
                self._cache.move_to_end(relpath)
                return self._cache[relpath]
        p = self.root / relpath
        try:
            raw = p.read_bytes()
        except OSError as e:
            raise CorruptChunk(relpath, f"read: {e}") from None
        _code, values = decode_chunk(raw, relpath)
        with self._lock:
            self._bump(relpath)
            self._cache[relpath] = values
            if len(self._cache) > self._cache_cap:
                self._cache.popitem(last=False)
        return values

    def chunk_header(self, relpath: str) -> tuple:
        p = self.root / relpath
        try:
            with open(p, "rb") as f:
                raw = f.read(_HEADER.size)
        except OSError as e:
            raise CorruptChunk(relpath, f"read: {e}") from None
        return parse_header(raw, relpath)

    def nchunks_vertex(self, vt: int) -> int:
        n = self._vcount[vt]
        return -(-n // self.chunk_size) if n else 0

    def nchunks_rows(self, total: int) -> int:
        return -(-total // self.chunk_size) if total else 0

    # -- store surface --

    def capabilities(self) -> CapabilitySet:
        return _CAPS

    def snapshot_latest(self) -> "ArchiveSnapshot":
        return ArchiveSnapshot(self)

    def reverse_index(self, et: int) -> Csr:
        """CSC equivalent, built lazily from the targets chunks."""
        with self._lock:
            if self._reverse[et] is not None:
                return self._reverse[et]
        decl = self.schema.edge_types[et]
        src_ord = self.schema.vtype_ordinal(decl.src_type)
        dst_ord = self.schema.vtype_ordinal(decl.dst_type)
        nsrc, ndst = self._vcount[src_ord], self._vcount[dst_ord]
        srcs, dsts = [], []
        for ci in range(self.nchunks_vertex(src_ord)):
            offs = np.asarray(self.chunk(f"edge/{decl.name}/offsets.c{ci}"),
                              dtype=np.int64)
            tgts = np.asarray(self.chunk(f"edge/{decl.name}/targets.c{ci}"),
                              dtype=np.int64)
            lo = ci * self.chunk_size
            deg = np.diff(offs)
            srcs.append(np.repeat(np.arange(lo, lo + len(deg), dtype=np.int64), deg))
            dsts.append(tgts)
        src = np.concatenate(srcs) if srcs else np.empty(0, dtype=np.int64)
        dst = np.concatenate(dsts) if dsts else np.empty(0, dtype=np.int64)
        rows = np.arange(len(src), dtype=np.int64)
        order = np.lexsort((rows, src, dst))
        counts = np.bincount(dst, minlength=ndst) if len(dst) else np.zeros(ndst, dtype=np.int64)
        offsets = np.zeros(ndst + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        rev = Csr(offsets, src[order], rows[order])
        with self._lock:
            self._reverse[et] = rev
        return rev

    def pk_map(self, vt: int) -> dict:
        with self._lock:
            if self._pk_maps[vt] is not None:
                return self._pk_maps[vt]
        decl = self.schema.vertex_types[vt]
        mapping: dict = {}
        for ci in range(self.nchunks_vertex(vt)):
            vals = self.chunk(f"vertex/{decl.name}/{decl.primary_key}.c{ci}")
            lo = ci * self.chunk_size
            if isinstance(vals, list):
                for i, v in enumerate(vals):
                    mapping[v] = lo + i
            else:
                for i, v in enumerate(vals):
                    mapping[int(v)] = lo + i
        with self._lock:
            self._pk_maps[vt] = mapping
        return mapping


class ArchiveSnapshot(GraphSnapshot):
    version = 0

    def __init__(self, store: ArchiveStore):
        self._s = store
        self.schema = store.schema

    def capabilities(self) -> CapabilitySet:
        return _CAPS

    def vertex_count(self, vtype) -> int:
        return self._s._vcount[self.schema.vtype_ordinal(vtype)]

    def vertex_list(self, vtype) -> VertexListHandle:
        vt = self.schema.vtype_ordinal(vtype)
        return VertexListHandle(vt, None, self._s._vcount[vt])

    def _out_slice(self, et: int, decl, idx: int) -> Tuple[np.ndarray, np.ndarray]:
        s = self._s
        ci, local = divmod(idx, s.chunk_size)
        offs = np.asarray(s.chunk(f"edge/{decl.name}/offsets.c{ci}"), dtype=np.int64)
        lo, hi = int(offs[local]), int(offs[local + 1])
        tgts = np.asarray(s.chunk(f"edge/{decl.name}/targets.c{ci}"), dtype=np.int64)
        base = int(s._row_starts[et][ci])
        return tgts[lo:hi], np.arange(base + lo, base + hi, dtype=np.int64)

    def adjacency(self, v: VertexRef, direction: Direction, etype) -> AdjListHandle:
        et = self.schema.etype_ordinal(etype)
        self.check_vertex(v)
        decl = self.schema.edge_types[et]
        src_ord = self.schema.vtype_ordinal(decl.src_type)
        dst_ord = self.schema.vtype_ordinal(decl.dst_type)

        def out_list() -> ArrayAdjList:
            if v.vtype != src_ord or self._s.nchunks_vertex(src_ord) == 0:
                return ArrayAdjList(v, Direction.OUT, et, dst_ord, _EMPTY, _EMPTY)
            nbr, rows = self._out_slice(et, decl, v.idx)
            return ArrayAdjList(v, Direction.OUT, et, dst_ord, nbr, rows)

        def in_list() -> ArrayAdjList:
            if v.vtype != dst_ord:
                return ArrayAdjList(v, Direction.IN, et, src_ord, _EMPTY, _EMPTY,
                                    swap=True)
            rev = self._s.reverse_index(et)
            lo, hi = int(rev.offsets[v.idx]), int(rev.offsets[v.idx + 1])
            return ArrayAdjList(v, Direction.IN, et, src_ord,
                                rev.targets[lo:hi], rev.rows[lo:hi], swap=True)

        if direction is Direction.OUT:
            return out_list()
        if direction is Direction.IN:
            return in_list()
        return ChainedAdjList(v, et, out_list(), in_list())

    def degree(self, v: VertexRef, direction: Direction, etype) -> int:
        return len(self.adjacency(v, direction, etype))

    def vertex_property(self, v: VertexRef, prop: str) -> Value:
        self.check_vertex(v)
        decl = self.schema.vertex_types[v.vtype]
        pdt = decl.property_dtype(prop)
        if pdt is None:
            raise UnknownProperty(f"{decl.name}.{prop}")
        ci, local = divmod(v.idx, self._s.chunk_size)
        vals = self._s.chunk(f"vertex/{decl.name}/{prop}.c{ci}")
        v_ = vals[local]
        return v_ if isinstance(vals, list) else _scalar(pdt, v_)

    def edge_property(self, e: EdgeRef, prop: str) -> Value:
        decl = self.schema.edge_types[e.etype]
        pdt = decl.property_dtype(prop)
        if pdt is None:
            raise UnknownProperty(f"{decl.name}.{prop}")
        from ..errors import IndexOutOfRange

        if not 0 <= e.row < self._s._ecount[e.etype]:
            raise IndexOutOfRange(f"edge row {e.row}")
        ci, local = divmod(e.row, self._s.chunk_size)
        vals = self._s.chunk(f"edge/{decl.name}/{prop}.c{ci}")
        v_ = vals[local]
        return v_ if isinstance(vals, list) else _scalar(pdt, v_)

    def lookup_by_pk(self, vtype, key: Value) -> VertexRef:
        vt = self.schema.vtype_ordinal(vtype)
        idx = self._s.pk_map(vt).get(key)
        if idx is None:
            raise NotFound(f"pk {key!r} in {self.schema.vertex_types[vt].name}")
        return VertexRef(vt, idx)

    def shards(self) -> int:
        return self._s._shards

    def filtered_vertex_list(self, vtype, pred: PropertyPredicate) -> VertexListHandle:
        """Zone-map path: skip any chunk whose header refutes a clause."""
        vt = self.schema.vtype_ordinal(vtype)
        decl = self.schema.vertex_types[vt]
        for cl in pred.clauses:
            if decl.property_dtype(cl.prop) is None:
                raise UnknownProperty(f"{decl.name}.{cl.prop}")
        s = self._s
        keep: List[np.ndarray] = []
        for ci in range(s.nchunks_vertex(vt)):
            lo = ci * s.chunk_size
            hi = min(lo + s.chunk_size, s._vcount[vt])
            skipped = False
            for cl in pred.clauses:
                rel = f"vertex/{decl.name}/{cl.prop}.c{ci}"
                _codec, code, _n, zmin_raw, zmax_raw = s.chunk_header(rel)
                zmin, zmax = _zone_value(code, zmin_raw), _zone_value(code, zmax_raw)
                if _zone_refutes(code, zmin, zmax, cl.op, cl.const):
                    skipped = True
                    break
            if skipped:
                continue
            mask = np.ones(hi - lo, dtype=bool)
            for cl in pred.clauses:
                vals = s.chunk(f"vertex/{decl.name}/{cl.prop}.c{ci}")
                col = (Column(STRING, vals, None) if isinstance(vals, list)
                       else Column(decl.property_dtype(cl.prop), vals, None))
                mask &= col.mask(cl.op, cl.const)
            keep.append(np.nonzero(mask)[0].astype(np.int64) + lo)
        idx = (np.concatenate(keep) if keep else np.empty(0, dtype=np.int64))
        return VertexListHandle(vt, idx, len(idx))

    def edge_scan(self) -> Tuple[int, int]:
        """Native scan contract: decode chunks lazily, then visit each
        vertex's neighbor segment (same granularity as the other stores)."""
        total = 0
        checksum = 0
        s = self._s
        for et, decl in enumerate(self.schema.edge_types):
            src_ord = self.schema.vtype_ordinal(decl.src_type)
            for ci in range(s.nchunks_vertex(src_ord)):
                offs = np.asarray(s.chunk(f"edge/{decl.name}/offsets.c{ci}"),
                                  dtype=np.int64).tolist()
                tgts = np.asarray(s.chunk(f"edge/{decl.name}/targets.c{ci}"),
                                  dtype=np.int64)
                prev = offs[0] if offs else 0
                for hi in offs[1:]:
                    if hi > prev:
                        total += hi - prev
                        checksum += int(tgts[prev:hi].sum())
                    prev = hi
        return total, checksum


_EMPTY = np.empty(0, dtype=np.int64)


def _scalar(pdt: DataType, v) -> Value:
    if pdt == BOOL:
        return bool(v)
    if pdt == INT64:
        return int(v)
    if pdt == FLOAT64:
        return float(v)
    return v


def open_archive(directory: Union[str, Path], shards: int = 1,
                 cache_chunks: int = 1024) -> ArchiveStore:
    root = Path(directory)
    meta = root / "graph.meta"
    if not meta.is_file():
        raise CorruptChunk("graph.meta", "missing")
    manifest = json.loads(meta.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise UnsupportedVersion(str(manifest.get("format_version")))
    return ArchiveStore(root, manifest, shards=shards, cache_chunks=cache_chunks)


# --- converters -----------------------------------------------------------------

def convert_csv_to_archive(
    csv_spec: Union[dict, str, Path],
    schema: PropertyGraphSchema,
    directory: Union[str, Path],
    base_dir: Optional[Path] = None,
    chunk_size: int = 4096,
    codec: str = "deflate",
) -> dict:
    from .immutable import build_immutable
    from .tables import load_csv_tables

    vtabs, etabs = load_csv_tables(csv_spec, schema, base_dir)
    store = build_immutable(schema, vtabs, etabs)
    return write_archive(store.snapshot_latest(), directory,
                         chunk_size=chunk_size, codec=codec)


def archive_tables(store: ArchiveStore) -> Tuple[Dict[str, VertexTable], Dict[str, EdgeTable]]:
    """Reconstruct loader tables (ids preserved) from an archive."""
    snap = store.snapshot_latest()
    schema = store.schema
    vtabs: Dict[str, VertexTable] = {}
    for vt, decl in enumerate(schema.vertex_types):
        n = snap.vertex_count(vt)
        table = VertexTable()
        for pname, _ in decl.properties:
            table.columns[pname] = [
                snap.vertex_property(VertexRef(vt, i), pname) for i in range(n)
            ]
        vtabs[decl.name] = table
    etabs: Dict[str, EdgeTable] = {}
    for et, decl in enumerate(schema.edge_types):
        src_ord = schema.vtype_ordinal(decl.src_type)
        src_decl = schema.vertex_types[src_ord]
        dst_decl = schema.vertex_decl(decl.dst_type)
        src_pkcol = vtabs[src_decl.name].columns[src_decl.primary_key]
        dst_pkcol = vtabs[dst_decl.name].columns[dst_decl.primary_key]
        table = EdgeTable()
        prop_names = [p for p, _ in decl.properties]
        table.columns = {p: [] for p in prop_names}
        for i in range(snap.vertex_count(src_ord)):
            for nbr, e in snap.adjacency(VertexRef(src_ord, i), Direction.OUT, et):
                table.src_pk.append(src_pkcol[i])
                table.dst_pk.append(dst_pkcol[nbr.idx])
                for p in prop_names:
                    table.columns[p].append(snap.edge_property(e, p))
        etabs[decl.name] = table
    return vtabs, etabs


def build_store_from_archive(directory: Union[str, Path], kind: str = "immutable",
                             shards: int = 1) -> GraphStore:
    """Materialize an in-memory store from an archive. The immutable path
    reuses the archive's already-sorted arrays wholesale (no pk resolution
    or re-sort), which is what makes archive loads beat CSV reparses."""
    arch = open_archive(directory)
    schema = arch.schema
    if kind == "mvcc":
        from .mvcc import MvccStore

        vtabs, etabs = archive_tables(arch)
        store = MvccStore(schema, shards=shards)
        store.bulk_load(vtabs, etabs)
        return store
    if kind != "immutable":
        raise ValueError(f"unknown store kind {kind!r}")

    out = ImmutableStore(schema, shards=shards)
    for vt, decl in enumerate(schema.vertex_types):
        n = arch._vcount[vt]
        cols: Dict[str, Column] = {}
        for pname, pdt in decl.properties:
            parts = [arch.chunk(f"vertex/{decl.name}/{pname}.c{ci}")
                     for ci in range(arch.nchunks_vertex(vt))]
            if pdt == STRING:
                data: object = [v for part in parts for v in part]
            else:
                data = (np.concatenate(parts) if parts
                        else np.empty(0, dtype=np.int64))
                if pdt == INT64:
                    data = data.astype(np.int64)
                elif pdt == FLOAT64:
                    data = data.astype(np.float64)
                else:
                    data = data.astype(bool)
            cols[pname] = Column(pdt, data, None)
        pk_col = cols[decl.primary_key]
        pk_index = {pk_col.get(i): i for i in range(n)}
        if len(pk_index) != n:
            from ..errors import DuplicatePk

            raise DuplicatePk(decl.name, "<archive pk column>")
        out._vcount.append(n)
        out._vcols.append(cols)
        out._pk_index.append(pk_index)

    for et, decl in enumerate(schema.edge_types):
        src_ord = schema.vtype_ordinal(decl.src_type)
        dst_ord = schema.vtype_ordinal(decl.dst_type)
        nsrc, ndst = arch._vcount[src_ord], arch._vcount[dst_ord]
        deg_parts, tgt_parts = [], []
        for ci in range(arch.nchunks_vertex(src_ord)):
            offs = np.asarray(arch.chunk(f"edge/{decl.name}/offsets.c{ci}"),
                              dtype=np.int64)
            deg_parts.append(np.diff(offs))
            tgt_parts.append(np.asarray(
                arch.chunk(f"edge/{decl.name}/targets.c{ci}"), dtype=np.int64))
        degrees = (np.concatenate(deg_parts) if deg_parts
                   else np.zeros(nsrc, dtype=np.int64))
        targets = (np.concatenate(tgt_parts) if tgt_parts
                   else np.empty(0, dtype=np.int64))
        m = len(targets)
        offsets = np.zeros(nsrc + 1, dtype=np.int64)
        np.cumsum(degrees, out=offsets[1:])
        rows = np.arange(m, dtype=np.int64)
        src = np.repeat(np.arange(nsrc, dtype=np.int64), degrees)
        order2 = np.lexsort((rows, src, targets))
        dcounts = (np.bincount(targets, minlength=ndst) if m
                   else np.zeros(ndst, dtype=np.int64))
        doffsets = np.zeros(ndst + 1, dtype=np.int64)
        np.cumsum(dcounts, out=doffsets[1:])
        ecols: Dict[str, Column] = {}
        for pname, pdt in decl.properties:
            parts = [arch.chunk(f"edge/{decl.name}/{pname}.c{ci}")
                     for ci in range(arch.nchunks_rows(m))]
            if pdt == STRING:
                data = [v for part in parts for v in part]
            else:
                data = (np.concatenate(parts) if parts
                        else np.empty(0, dtype=np.int64))
                if pdt == INT64:
                    data = data.astype(np.int64)
                elif pdt == FLOAT64:
                    data = data.astype(np.float64)
                else:
                    data = data.astype(bool)
            ecols[pname] = Column(pdt, data, None)
        out._csr.append(Csr(offsets, targets, rows))
        out._csc.append(Csr(doffsets, src[order2], rows[order2]))
        out._ecols.append(ecols)
        out._ecount.append(m)
    return out
