"""Reference analytics kernels written only against the retrieval surface.

Both kernels first extract the topology through the capability-negotiated
interface into canonical arrays (all edge types unified, vertices indexed
globally in (type, idx) order, edges sorted by (src, dst)), then iterate
with vectorized arithmetic. The canonical array form makes results
bit-identical across storage backends regardless of each store's
adjacency enumeration order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import InvalidVertex
from .model import Direction, VertexRef
from .retrieval import ArrayAdjList, GraphSnapshot

UNREACHED = -1


@dataclass
class GraphArrays:
    """Unified-topology view: global dense vertex ids and a (src, dst)
    sorted edge list."""

    type_offsets: np.ndarray  # global id of each type's first vertex
    n: int
    src: np.ndarray
    dst: np.ndarray

    def global_id(self, v: VertexRef) -> int:
        return int(self.type_offsets[v.vtype]) + v.idx

    def of_global(self, g: int) -> VertexRef:
        vt = int(np.searchsorted(self.type_offsets, g, side="right")) - 1
        return VertexRef(vt, g - int(self.type_offsets[vt]))


def extract_arrays(snap: GraphSnapshot) -> GraphArrays:
    """Pull the whole topology through vertex_list/adjacency/degree.
    Array-capable stores hand over zero-copy neighbor slices; iterator-only
    stores walk handles. The result is canonicalized by sorting."""
    schema = snap.schema
    counts = [snap.vertex_count(vt) for vt in range(len(schema.vertex_types))]
    type_offsets = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=type_offsets[1:])
    n = int(type_offsets[-1])

    use_arrays = snap.capabilities().adjacency_array
    src_parts: List[np.ndarray] = []
    dst_parts: List[np.ndarray] = []
    sorted_input = True
    for et, decl in enumerate(schema.edge_types):
        s_ord = schema.vtype_ordinal(decl.src_type)
        d_ord = schema.vtype_ordinal(decl.dst_type)
        s_base = int(type_offsets[s_ord])
        d_base = int(type_offsets[d_ord])
        nsrc = snap.vertex_count(s_ord)
        degs = np.zeros(nsrc, dtype=np.int64)
        parts: List[np.ndarray] = []
        for i in range(nsrc):
            adj = snap.adjacency(VertexRef(s_ord, i), Direction.OUT, et)
            if use_arrays and isinstance(adj, ArrayAdjList):
                nbr = adj.neighbor_indices()  # zero-copy store view
            else:
                nbr = np.asarray([nb.idx for nb, _e in adj], dtype=np.int64)
                sorted_input = False
            if len(nbr):
                degs[i] = len(nbr)
                parts.append(nbr)
        if parts:
            src_parts.append(
                np.repeat(np.arange(nsrc, dtype=np.int64) + s_base, degs))
            dst_parts.append(
                np.concatenate(parts).astype(np.int64) + d_base)
    if src_parts:
        src = np.concatenate(src_parts)
        dst = np.concatenate(dst_parts)
    else:
        src = np.empty(0, dtype=np.int64)
        dst = np.empty(0, dtype=np.int64)
    if len(schema.edge_types) > 1 or not sorted_input:
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
    return GraphArrays(type_offsets[:-1], n, src, dst)


@dataclass
class RankVector:
    type_offsets: np.ndarray
    scores: np.ndarray
    iterations: int

    def score(self, v: VertexRef) -> float:
        return float(self.scores[int(self.type_offsets[v.vtype]) + v.idx])

    def items(self):
        bounds = list(self.type_offsets) + [len(self.scores)]
        for vt in range(len(self.type_offsets)):
            for idx, g in enumerate(range(int(bounds[vt]), int(bounds[vt + 1]))):
                yield vt, idx, float(self.scores[g])


def pagerank(snap: GraphSnapshot, damping: float = 0.85,
             max_iters: int = 100, tol: float = 1e-6,
             arrays: Optional[GraphArrays] = None) -> RankVector:
    """Power iteration over the unified graph; dangling mass redistributes
    uniformly; stops when the L1 delta drops below tol."""
    g = arrays if arrays is not None else extract_arrays(snap)
    n = g.n
    if n == 0:
        return RankVector(g.type_offsets, np.empty(0), 0)
    outdeg = np.bincount(g.src, minlength=n).astype(np.float64)
    has_out = outdeg > 0
    scores = np.full(n, 1.0 / n)
    iters = 0
    for iters in range(1, max_iters + 1):
        contrib = np.where(has_out, scores / np.maximum(outdeg, 1.0), 0.0)
        flowed = np.bincount(g.dst, weights=contrib[g.src], minlength=n)
        dangling = float(scores[~has_out].sum())
        fresh = damping * (flowed + dangling / n) + (1.0 - damping) / n
        delta = float(np.abs(fresh - scores).sum())
        scores = fresh
        if delta < tol:
            break
    return RankVector(g.type_offsets, scores, iters)


@dataclass
class BfsResult:
    type_offsets: np.ndarray
    depth: np.ndarray  # int64; UNREACHED where unreached

    def depth_of(self, v: VertexRef) -> int:
        return int(self.depth[int(self.type_offsets[v.vtype]) + v.idx])


def bfs(snap: GraphSnapshot, src: VertexRef,
        arrays: Optional[GraphArrays] = None) -> BfsResult:
    """Level-synchronous BFS over Out edges of every type."""
    snap.check_vertex(src)
    g = arrays if arrays is not None else extract_arrays(snap)
    depth = np.full(g.n, UNREACHED, dtype=np.int64)
    start = g.global_id(src)
    depth[start] = 0
    frontier = np.array([start], dtype=np.int64)
    level = 0
    # CSR-style offsets over the sorted edge list for frontier expansion
    starts = np.searchsorted(g.src, np.arange(g.n))
    ends = np.searchsorted(g.src, np.arange(g.n), side="right")
    while len(frontier):
        level += 1
        outs = [g.dst[starts[u]:ends[u]] for u in frontier]
        if not outs:
            break
        nxt = np.unique(np.concatenate(outs)) if outs else frontier[:0]
        nxt = nxt[depth[nxt] == UNREACHED]
        depth[nxt] = level
        frontier = nxt
    return BfsResult(g.type_offsets, depth)
