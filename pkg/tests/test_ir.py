"""IR: DAG wiring, schema inference, and the pattern-match oracle."""

from __future__ import annotations

import random

import pytest

from flexgraph.errors import DagCycleError, PlanTypeError
from flexgraph.ir import (
    Aggregate,
    Cmp,
    ExpandEdge,
    FieldRef,
    GetVertex,
    Group,
    Literal,
    LogicalDag,
    Match,
    PatternEdge,
    PatternGraph,
    PatternVertex,
    Project,
    PropAccess,
    ScanSpec,
    Sink,
    match_semantics,
)
from flexgraph.model import FLOAT64, INT64, VERTEX, DataKind, Direction
from flexgraph.stores import build_immutable
from conftest import random_graph_tables


def fig4_pattern(schema):
    """(a:Buyer)-[:Knows]->(b:Buyer)-[:Buy]->(c:Item)"""
    buyer = schema.vtype_ordinal("Buyer")
    item = schema.vtype_ordinal("Item")
    return PatternGraph(
        vertices=(PatternVertex("a", buyer), PatternVertex("b", buyer),
                  PatternVertex("c", item)),
        edges=(PatternEdge("a", "b", schema.etype_ordinal("Knows")),
               PatternEdge("b", "c", schema.etype_ordinal("Buy"))),
    )


def test_dag_connect_ok(schema_g0):
    dag = LogicalDag(schema_g0)
    scan = dag.add(GetVertex("a", scan=ScanSpec(schema_g0.vtype_ordinal("Buyer"))))
    ee = dag.add(ExpandEdge("a", Direction.OUT, schema_g0.etype_ordinal("Knows"), "e"))
    dag.connect(scan, ee)
    assert dag.schema_of(ee).names() == ("a", "e")


def test_dag_connect_type_error(schema_g0):
    dag = LogicalDag(schema_g0)
    scan = dag.add(GetVertex("a", scan=ScanSpec(schema_g0.vtype_ordinal("Buyer"))))
    proj = dag.add(Project(((PropAccess("b", "price"), "price"),)))
    with pytest.raises(PlanTypeError) as ei:
        dag.connect(scan, proj)
    assert ei.value.alias == "b"
    # failed connect leaves the dag usable
    ok = dag.add(Project(((PropAccess("a", "username"), "u"),)))
    dag.connect(scan, ok)


def test_dag_cycle_error(schema_g0):
    dag = LogicalDag(schema_g0)
    scan = dag.add(GetVertex("a", scan=ScanSpec(0)))
    ee = dag.add(ExpandEdge("a", Direction.OUT, 0, "e"))
    dag.connect(scan, ee)
    with pytest.raises(DagCycleError):
        dag.connect(ee, scan)


def test_infer_match_schema(schema_g0):
    dag = LogicalDag(schema_g0)
    m = dag.add(Match(fig4_pattern(schema_g0)))
    s = dag.schema_of(m)
    assert s.names() == ("a", "b", "c")
    assert all(f.dtype.kind is DataKind.VERTEX for f in s.fields)
    assert s.find("c").elem == schema_g0.vtype_ordinal("Item")


def test_infer_project_price(schema_g0):
    dag = LogicalDag(schema_g0)
    m = dag.add(Match(fig4_pattern(schema_g0)))
    p = dag.add(Project(((PropAccess("c", "price"), "price"),)))
    dag.connect(m, p)
    s = dag.schema_of(p)
    assert s.names() == ("price",)
    assert s.find("price").dtype == FLOAT64


def test_infer_group_schema(schema_g0):
    dag = LogicalDag(schema_g0)
    m = dag.add(Match(fig4_pattern(schema_g0)))
    g = dag.add(Group(keys=((FieldRef("a"), "a"),),
                      aggs=((Aggregate("count", FieldRef("c")), "cnt"),)))
    dag.connect(m, g)
    s = dag.schema_of(g)
    assert s.names() == ("a", "cnt")
    assert s.find("a").dtype == VERTEX
    assert s.find("cnt").dtype == INT64


def test_validate_full_dag(schema_g0):
    dag = LogicalDag(schema_g0)
    ids = dag.chain(
        Match(fig4_pattern(schema_g0)),
        Project(((PropAccess("c", "price"), "price"),)),
        Sink(),
    )
    dag.validate()
    assert dag.sink_id() == ids[-1]


# --- match_semantics oracle -----------------------------------------------------


def test_match_g0_fig4(g0, schema_g0):
    res = match_semantics(fig4_pattern(schema_g0), g0)
    got = sorted((b["a"].idx, b["b"].idx, b["c"].idx) for b in res)
    assert got == [(0, 1, 0), (0, 1, 1), (1, 2, 1)]


def test_match_single_vertex(g0, schema_g0):
    pat = PatternGraph((PatternVertex("x", schema_g0.vtype_ordinal("Seller")),), ())
    res = match_semantics(pat, g0)
    assert [b["x"].idx for b in res] == [0]


def test_match_no_triangles(g0, schema_g0):
    buyer = schema_g0.vtype_ordinal("Buyer")
    knows = schema_g0.etype_ordinal("Knows")
    tri = PatternGraph(
        (PatternVertex("a", buyer), PatternVertex("b", buyer),
         PatternVertex("c", buyer)),
        (PatternEdge("a", "b", knows), PatternEdge("b", "c", knows),
         PatternEdge("c", "a", knows)),
    )
    assert match_semantics(tri, g0) == []


def test_match_injective(g0, schema_g0):
    buyer = schema_g0.vtype_ordinal("Buyer")
    knows = schema_g0.etype_ordinal("Knows")
    # undirected 2-path around a middle vertex: ends must differ
    pat = PatternGraph(
        (PatternVertex("a", buyer), PatternVertex("m", buyer),
         PatternVertex("b", buyer)),
        (PatternEdge("a", "m", knows, Direction.BOTH),
         PatternEdge("m", "b", knows, Direction.BOTH)),
    )
    res = match_semantics(pat, g0)
    for b in res:
        assert len({b["a"], b["m"], b["b"]}) == 3
    got = sorted((b["a"].idx, b["m"].idx, b["b"].idx) for b in res)
    assert got == [(0, 1, 2), (2, 1, 0)]


def test_match_with_vertex_pred(g0, schema_g0):
    pat = fig4_pattern(schema_g0)
    pred = Cmp("=", PropAccess("a", "username"), Literal("A1"))
    pat = PatternGraph(
        (PatternVertex("a", schema_g0.vtype_ordinal("Buyer"), pred),)
        + pat.vertices[1:],
        pat.edges,
    )
    res = match_semantics(pat, g0)
    assert sorted(b["c"].idx for b in res) == [0, 1]


def test_match_bound_alias(g0, schema_g0):
    pat = fig4_pattern(schema_g0)
    b1 = g0.lookup_by_pk("Buyer", "A1")
    res = match_semantics(pat, g0, bound={"a": b1})
    assert len(res) == 2
    res2 = match_semantics(pat, g0, bound={"a": g0.lookup_by_pk("Buyer", "C3")})
    assert res2 == []


def test_match_edge_alias_multiplicity(schema_g0):
    """Parallel edges: one binding per edge when the alias is exported,
    one per neighbor otherwise."""
    from conftest import g0_tables
    from flexgraph.stores.tables import EdgeTable

    vtabs, etabs = g0_tables()
    etabs["Buy"] = EdgeTable(src_pk=["A1", "A1"], dst_pk=[1, 1],
                             columns={"date": [1, 2]})
    snap = build_immutable(g0_schema_local(), vtabs, etabs).snapshot_latest()
    schema = snap.schema
    base = (PatternVertex("a", schema.vtype_ordinal("Buyer")),
            PatternVertex("c", schema.vtype_ordinal("Item")))
    buy = schema.etype_ordinal("Buy")
    with_alias = PatternGraph(base, (PatternEdge("a", "c", buy, alias="e"),))
    without = PatternGraph(base, (PatternEdge("a", "c", buy),))
    assert len(match_semantics(with_alias, snap)) == 2
    assert len(match_semantics(without, snap)) == 1


def g0_schema_local():
    from conftest import g0_schema

    return g0_schema()


def test_match_oracle_vs_networkx(schema_g0):
    """Cross-check the oracle against networkx subgraph isomorphism on
    random single-type graphs (vertex-injective == induced-free
    monomorphism; use directed matching on simple graphs)."""
    nx = pytest.importorskip("networkx")
    from networkx.algorithms.isomorphism import DiGraphMatcher

    from flexgraph.model import EdgeTypeDecl, INT64, VertexTypeDecl, make_schema
    from flexgraph.stores.tables import EdgeTable, VertexTable

    schema = make_schema(
        [VertexTypeDecl("N", (("id", INT64),), "id")],
        [EdgeTypeDecl("E", "N", "N")],
    )
    rng = random.Random(5)
    for trial in range(10):
        n = rng.randint(3, 12)
        edges = set()
        for _ in range(rng.randint(2, 24)):
            edges.add((rng.randrange(n), rng.randrange(n)))
        edges = sorted(edges)
        vt = VertexTable({"id": list(range(n))})
        et = EdgeTable(src_pk=[a for a, _ in edges], dst_pk=[b for _, b in edges])
        snap = build_immutable(schema, {"N": vt}, {"E": et}).snapshot_latest()

        g = nx.DiGraph()
        g.add_nodes_from(range(n))
        g.add_edges_from(edges)
        # pattern: directed 2-path x->y->z
        pat = PatternGraph(
            (PatternVertex("x", 0), PatternVertex("y", 0), PatternVertex("z", 0)),
            (PatternEdge("x", "y", 0), PatternEdge("y", "z", 0)),
        )
        mine = {(b["x"].idx, b["y"].idx, b["z"].idx)
                for b in match_semantics(pat, snap)}
        p = nx.DiGraph()
        p.add_edges_from([("x", "y"), ("y", "z")])
        theirs = set()
        for m in DiGraphMatcher(g, p).subgraph_monomorphisms_iter():
            inv = {v: k for k, v in m.items()}
            theirs.add((inv["x"], inv["y"], inv["z"]))
        assert mine == theirs, f"trial {trial}"
