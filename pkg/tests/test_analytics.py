"""PageRank and BFS: dense oracle, backend independence, invariants."""

from __future__ import annotations

import random

import numpy as np
import pytest

from flexgraph.analytics import UNREACHED, bfs, extract_arrays, pagerank
from flexgraph.model import (
    Direction,
    EdgeTypeDecl,
    INT64,
    VertexRef,
    VertexTypeDecl,
    make_schema,
)
from flexgraph.stores import MvccStore, build_immutable, open_archive, write_archive
from flexgraph.stores.tables import EdgeTable, VertexTable
from conftest import g0_tables, random_graph_tables


def _single_type_store(edges, n):
    schema = make_schema(
        [VertexTypeDecl("N", (("id", INT64),), "id")],
        [EdgeTypeDecl("E", "N", "N")],
    )
    vt = {"N": VertexTable({"id": list(range(n))})}
    et = {"E": EdgeTable(src_pk=[a for a, _ in edges],
                         dst_pk=[b for _, b in edges])}
    return build_immutable(schema, vt, et)


def _dense_pagerank(edges, n, damping=0.85, iters=200, tol=1e-6):
    """Independent dense-matrix power iteration."""
    A = np.zeros((n, n))
    outdeg = np.zeros(n)
    for a, b in edges:
        A[b, a] += 1.0
        outdeg[a] += 1.0
    cols = outdeg > 0
    A[:, cols] /= outdeg[cols]
    x = np.full(n, 1.0 / n)
    for _ in range(iters):
        dangling = x[~cols].sum()
        fresh = damping * (A @ x + dangling / n) + (1 - damping) / n
        if np.abs(fresh - x).sum() < tol:
            x = fresh
            break
        x = fresh
    return x


def test_three_cycle_uniform():
    store = _single_type_store([(0, 1), (1, 2), (2, 0)], 3)
    pr = pagerank(store.snapshot_latest())
    assert np.allclose(pr.scores, 1 / 3, atol=1e-9)


def test_pagerank_matches_dense_oracle():
    rng = random.Random(4)
    for _ in range(5):
        n = rng.randint(3, 12)
        edges = sorted({(rng.randrange(n), rng.randrange(n))
                        for _ in range(rng.randint(2, 30))})
        store = _single_type_store(edges, n)
        pr = pagerank(store.snapshot_latest(), tol=1e-12, max_iters=500)
        want = _dense_pagerank(edges, n, iters=500, tol=1e-12)
        assert np.abs(pr.scores - want).max() < 1e-9


def test_pagerank_normalized_each_iteration(g0):
    pr = pagerank(g0)
    assert abs(pr.scores.sum() - 1.0) < 1e-9


def test_pagerank_backend_independent(tmp_path, schema_g0, g0):
    vt, et = g0_tables()
    mv = MvccStore(schema_g0)
    mv.bulk_load(vt, et)
    write_archive(g0, tmp_path / "a")
    arch = open_archive(tmp_path / "a")
    base = pagerank(g0).scores
    for snap in (mv.snapshot_latest(), arch.snapshot_latest()):
        other = pagerank(snap).scores
        assert np.abs(base - other).max() <= 1e-12


def test_bfs_g0_trace(g0, schema_g0):
    b1 = g0.lookup_by_pk("Buyer", "A1")
    res = bfs(g0, b1)
    buyer = schema_g0.vtype_ordinal("Buyer")
    item = schema_g0.vtype_ordinal("Item")
    seller = schema_g0.vtype_ordinal("Seller")
    assert res.depth_of(VertexRef(buyer, 0)) == 0
    assert res.depth_of(VertexRef(buyer, 1)) == 1
    assert res.depth_of(VertexRef(item, 0)) == 1
    assert res.depth_of(VertexRef(buyer, 2)) == 2
    assert res.depth_of(VertexRef(item, 1)) == 2
    assert res.depth_of(VertexRef(seller, 0)) == UNREACHED


def test_bfs_depth_is_min_plus_one(g0, schema_g0):
    """depth(v) = 1 + min over in-neighbors' depths, for reached v."""
    b1 = g0.lookup_by_pk("Buyer", "A1")
    res = bfs(g0, b1)
    for vt in range(len(schema_g0.vertex_types)):
        for v in g0.vertex_list(vt):
            d = res.depth_of(v)
            if d <= 0:
                continue
            preds = []
            for et, decl in enumerate(schema_g0.edge_types):
                if schema_g0.vtype_ordinal(decl.dst_type) != vt:
                    continue
                for nbr, _e in g0.adjacency(v, Direction.IN, et):
                    pd = res.depth_of(nbr)
                    if pd != UNREACHED:
                        preds.append(pd)
            assert d == 1 + min(preds)


def test_bfs_isolated_source():
    store = _single_type_store([(1, 2)], 4)
    res = bfs(store.snapshot_latest(), VertexRef(0, 0))
    assert res.depth_of(VertexRef(0, 0)) == 0
    assert all(res.depth_of(VertexRef(0, i)) == UNREACHED for i in (1, 2, 3))


def test_bfs_backend_bit_identical(tmp_path, schema_g0, g0):
    vt, et = g0_tables()
    mv = MvccStore(schema_g0)
    mv.bulk_load(vt, et)
    write_archive(g0, tmp_path / "a")
    arch = open_archive(tmp_path / "a")
    b1 = g0.lookup_by_pk("Buyer", "A1")
    base = bfs(g0, b1).depth
    for snap in (mv.snapshot_latest(), arch.snapshot_latest()):
        assert (bfs(snap, b1).depth == base).all()


def test_invalid_source(g0):
    with pytest.raises(Exception):
        bfs(g0, VertexRef(0, 99))


def test_extract_arrays_canonical_multi_backend(schema_g0):
    rng = random.Random(8)
    vt, et = random_graph_tables(schema_g0, rng, nv_max=15, ne_max=60)
    imm = build_immutable(schema_g0, vt, et)
    mv = MvccStore(schema_g0)
    mv.bulk_load(vt, et)
    a = extract_arrays(imm.snapshot_latest())
    b = extract_arrays(mv.snapshot_latest())
    assert (a.src == b.src).all() and (a.dst == b.dst).all()
