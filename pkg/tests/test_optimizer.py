"""Catalog exactness, canonical codes, CBO optimality, rewrite rules."""

from __future__ import annotations

import random

import pytest

from flexgraph.frontends import cypher_parse
from flexgraph.ir import (
    ExpandVertex,
    GetVertex,
    Match,
    PatternEdge,
    PatternGraph,
    PatternVertex,
    Select,
    match_count,
    match_semantics,
)
from flexgraph.model import Direction
from flexgraph.optimizer import (
    catalog_build,
    cbo_order,
    enumerate_order_costs,
    freq_estimate,
    optimize,
    pattern_canon,
    rule_edge_vertex_fusion,
    rule_filter_push_into_match,
)
from flexgraph.optimizer.catalog import Catalog
from flexgraph.stores import build_immutable
from conftest import random_graph_tables

FIG4 = ('MATCH (a:Buyer)-[:Knows]->(b:Buyer)-[:Buy]->(c:Item) '
        'WHERE a.username = "A1" RETURN c.price')


@pytest.fixture(scope="module")
def cat_g0(g0):
    return catalog_build(g0, k=3)


def _pat(schema, *spec):
    """tiny helper: spec = (vertices dict, edges list)"""
    vs, es = spec
    return PatternGraph(
        tuple(PatternVertex(a, schema.vtype_ordinal(t) if t else None)
              for a, t in vs),
        tuple(PatternEdge(s, d, schema.etype_ordinal(et), direction)
              for s, d, et, direction in es),
    )


def test_catalog_k1(cat_g0, schema_g0, g0):
    for name, n in (("Buyer", 3), ("Item", 2), ("Seller", 1)):
        p = _pat(schema_g0, [("x", name)], [])
        assert cat_g0.lookup(p) == n


def test_catalog_k2(cat_g0, schema_g0):
    buy = _pat(schema_g0, [("a", "Buyer"), ("b", "Item")],
               [("a", "b", "Buy", Direction.OUT)])
    knows = _pat(schema_g0, [("a", "Buyer"), ("b", "Buyer")],
                 [("a", "b", "Knows", Direction.OUT)])
    sell = _pat(schema_g0, [("a", "Seller"), ("b", "Item")],
                [("a", "b", "Sell", Direction.OUT)])
    assert cat_g0.lookup(buy) == 4
    assert cat_g0.lookup(knows) == 2
    assert cat_g0.lookup(sell) == 2


def test_catalog_k3_path(cat_g0, schema_g0):
    p = _pat(schema_g0, [("a", "Buyer"), ("b", "Buyer"), ("c", "Item")],
             [("a", "b", "Knows", Direction.OUT),
              ("b", "c", "Buy", Direction.OUT)])
    assert cat_g0.lookup(p) == 3


def test_catalog_exactness_random(schema_g0):
    rng = random.Random(11)
    for _ in range(5):
        vt, et = random_graph_tables(schema_g0, rng, nv_max=12, ne_max=30)
        snap = build_immutable(schema_g0, vt, et).snapshot_latest()
        cat = catalog_build(snap, k=3)
        for code, count in list(cat.entries.items())[:40]:
            pass  # spot-check below via independent patterns
        probes = [
            _pat(schema_g0, [("a", "Buyer"), ("b", "Item")],
                 [("a", "b", "Buy", Direction.OUT)]),
            _pat(schema_g0, [("a", "Buyer"), ("b", "Buyer"), ("c", "Item")],
                 [("a", "b", "Knows", Direction.OUT),
                  ("b", "c", "Buy", Direction.OUT)]),
            _pat(schema_g0, [("a", "Buyer"), ("b", "Buyer")],
                 [("a", "b", "Knows", Direction.BOTH)]),
        ]
        for p in probes:
            assert freq_estimate(cat, p, schema_g0) == match_count(p, snap)


def test_canon_renaming_and_direction(schema_g0):
    a = _pat(schema_g0, [("a", "Buyer"), ("b", "Buyer")],
             [("a", "b", "Knows", Direction.OUT)])
    b = _pat(schema_g0, [("x", "Buyer"), ("y", "Buyer")],
             [("x", "y", "Knows", Direction.OUT)])
    assert pattern_canon(a) == pattern_canon(b)
    rev = _pat(schema_g0, [("a", "Buyer"), ("b", "Item")],
               [("b", "a", "Buy", Direction.IN)])
    fwd = _pat(schema_g0, [("a", "Buyer"), ("b", "Item")],
               [("a", "b", "Buy", Direction.OUT)])
    assert pattern_canon(rev) == pattern_canon(fwd)  # IN is OUT reversed
    undirected = _pat(schema_g0, [("a", "Buyer"), ("b", "Buyer")],
                      [("a", "b", "Knows", Direction.BOTH)])
    assert pattern_canon(undirected) != pattern_canon(a)


def test_canon_vs_isomorphism_oracle(schema_g0):
    nx = pytest.importorskip("networkx")
    rng = random.Random(3)
    pats = []
    for _ in range(30):
        n = rng.randint(2, 4)
        names = [f"v{i}" for i in range(n)]
        types = [rng.choice(["Buyer", "Buyer", "Item", "Seller"])
                 for _ in range(n)]
        edges = []
        # random connected pattern over legal edge decls
        for i in range(1, n):
            j = rng.randrange(i)
            legal = _legal_edges(schema_g0, types[j], types[i])
            if not legal:
                types[i] = "Item" if types[j] in ("Buyer", "Seller") else "Buyer"
                legal = _legal_edges(schema_g0, types[j], types[i])
            if not legal:
                continue
            et, flip = rng.choice(legal)
            src, dst = (names[j], names[i]) if not flip else (names[i], names[j])
            edges.append((src, dst, et, Direction.OUT))
        if not edges:
            continue
        pats.append(_pat(schema_g0, list(zip(names, types)), edges))

    def to_nx(p):
        g = nx.MultiDiGraph()
        for v in p.vertices:
            g.add_node(v.alias, t=v.vtype)
        for e in p.edges:
            g.add_edge(e.src, e.dst, t=e.etype)
        return g

    for i, p1 in enumerate(pats):
        for p2 in pats[i + 1:]:
            same_code = pattern_canon(p1) == pattern_canon(p2)
            iso = nx.is_isomorphic(
                to_nx(p1), to_nx(p2),
                node_match=lambda a, b: a["t"] == b["t"],
                edge_match=lambda a, b: ({d["t"] for d in a.values()}
                                         == {d["t"] for d in b.values()}))
            assert same_code == iso


def _legal_edges(schema, t_from, t_to):
    out = []
    for et, d in enumerate(schema.edge_types):
        if d.src_type == t_from and d.dst_type == t_to:
            out.append((d.name, False))
        if d.src_type == t_to and d.dst_type == t_from:
            out.append((d.name, True))
    return out


def test_freq_estimate_above_k_bias(g0, schema_g0):
    cat = catalog_build(g0, k=2)
    p = _pat(schema_g0, [("a", "Buyer"), ("b", "Buyer"), ("c", "Item")],
             [("a", "b", "Knows", Direction.OUT),
              ("b", "c", "Buy", Direction.OUT)])
    assert freq_estimate(cat, p, schema_g0) == 2  # floor(2 * 4/3); exact is 3
    assert match_count(p, g0) == 3


def test_cbo_single_edge_starts_cheap_side(cat_g0, schema_g0):
    p = _pat(schema_g0, [("s", "Seller"), ("i", "Item")],
             [("s", "i", "Sell", Direction.OUT)])
    plan = cbo_order(p, cat_g0, schema_g0)
    assert plan.start == "s"  # freq(Seller)=1 < freq(Item)=2
    costs = enumerate_order_costs(p, cat_g0, schema_g0)
    assert plan.cost <= min(costs.values())


def test_cbo_pk_filter_starts_at_filtered_vertex(cat_g0, schema_g0, g0):
    dag = cypher_parse(FIG4, schema_g0)
    pushed = rule_filter_push_into_match(dag)
    m = next(op for op in pushed.ops.values() if isinstance(op, Match))
    plan = cbo_order(m.pattern, cat_g0, schema_g0)
    assert plan.start == "a"
    order = plan.bind_order()
    assert order == ["a", "b", "c"]


def test_cbo_dp_optimal_random(schema_g0):
    rng = random.Random(21)
    shapes = [
        # path of 3, triangle-ish with a close, star
        ([("a", "Buyer"), ("b", "Buyer"), ("c", "Item")],
         [("a", "b", "Knows", Direction.OUT), ("b", "c", "Buy", Direction.OUT)]),
        ([("a", "Buyer"), ("b", "Buyer"), ("c", "Item")],
         [("a", "b", "Knows", Direction.OUT), ("b", "c", "Buy", Direction.OUT),
          ("a", "c", "Buy", Direction.OUT)]),
        ([("a", "Seller"), ("b", "Item"), ("c", "Buyer"), ("d", "Buyer")],
         [("a", "b", "Sell", Direction.OUT), ("c", "b", "Buy", Direction.OUT),
          ("d", "c", "Knows", Direction.OUT)]),
    ]
    for trial in range(8):
        vt, et = random_graph_tables(schema_g0, rng, nv_max=25, ne_max=80)
        snap = build_immutable(schema_g0, vt, et).snapshot_latest()
        cat = catalog_build(snap, k=3)
        for vs, es in shapes:
            p = _pat(schema_g0, vs, es)
            plan = cbo_order(p, cat, schema_g0)
            costs = enumerate_order_costs(p, cat, schema_g0)
            assert plan.cost <= min(costs.values()), (trial, vs, es)


# --- rules -------------------------------------------------------------------


def test_filter_push_fig4(schema_g0):
    dag = cypher_parse(FIG4, schema_g0)
    assert any(isinstance(op, Select) for op in dag.ops.values())
    pushed = rule_filter_push_into_match(dag)
    assert not any(isinstance(op, Select) for op in pushed.ops.values())
    m = next(op for op in pushed.ops.values() if isinstance(op, Match))
    assert m.pattern.vertex("a").pred is not None


def test_filter_push_multi_alias_residual(schema_g0):
    q = ('MATCH (a:Buyer)-[b1:Buy]->(i:Item)<-[b2:Buy]-(b:Buyer) '
         'WHERE b1.date - b2.date < 5 AND a.username = "A1" RETURN i')
    dag = cypher_parse(q, schema_g0)
    pushed = rule_filter_push_into_match(dag)
    selects = [op for op in pushed.ops.values() if isinstance(op, Select)]
    assert len(selects) == 1  # the two-alias factor stays
    from flexgraph.ir.exprs import expr_aliases

    assert expr_aliases(selects[0].pred) == {"b1", "b2"}
    m = next(op for op in pushed.ops.values() if isinstance(op, Match))
    assert m.pattern.vertex("a").pred is not None


def test_filter_push_select_true_eliminated(schema_g0):
    from flexgraph.ir import Literal, LogicalDag, Project, ScanSpec, Sink
    from flexgraph.ir import FieldRef as FR

    dag = cypher_parse("MATCH (a:Buyer) RETURN a", schema_g0)
    sink = dag.sink_id()
    # wedge a trivial SELECT true before the sink
    import flexgraph.ir as ir

    proj = dag.predecessors(sink)[0]
    sel = dag.add(ir.Select(Literal(True)))
    dag.edges = [(p, c) for p, c in dag.edges if (p, c) != (proj, sink)]
    dag.edges += [(proj, sel), (sel, sink)]
    dag._recompute()
    pushed = rule_filter_push_into_match(dag)
    assert not any(isinstance(op, Select) for op in pushed.ops.values())


def test_fusion_fig4_shape(cat_g0, schema_g0):
    dag = cypher_parse(FIG4, schema_g0)
    opt, info = optimize(dag, cat_g0)
    kinds = [opt.ops[i].kind for i in opt.topo_order()]
    assert kinds == ["GET_VERTEX", "EXPAND_VERTEX", "EXPAND_VERTEX",
                     "PROJECT", "SINK"]
    scan = opt.ops[opt.topo_order()[0]]
    assert scan.scan is not None and scan.scan.pk is not None


def test_fusion_blocked_by_live_edge_alias(schema_g0, cat_g0):
    q = ('MATCH (a:Buyer)-[b1:Buy]->(i:Item) RETURN b1.date')
    dag = cypher_parse(q, schema_g0)
    opt, _ = optimize(dag, cat_g0)
    kinds = [opt.ops[i].kind for i in opt.topo_order()]
    assert "EXPAND_VERTEX" not in kinds
    assert "EXPAND_EDGE" in kinds


def test_fusion_idempotent(schema_g0, cat_g0):
    dag = cypher_parse(FIG4, schema_g0)
    opt, _ = optimize(dag, cat_g0)
    again = rule_edge_vertex_fusion(opt)
    assert again.to_json() == opt.to_json()


def test_optimize_no_match_no_select_unchanged(schema_g0, cat_g0):
    dag = cypher_parse("MATCH (a:Buyer) RETURN a.username", schema_g0)
    opt1, _ = optimize(dag, cat_g0)
    opt2, _ = optimize(opt1, cat_g0)
    assert opt1.to_json() == opt2.to_json()


def test_catalog_json_roundtrip(cat_g0):
    doc = cat_g0.to_json()
    back = Catalog.from_json(doc)
    assert back.entries == cat_g0.entries
    assert back.vertex_counts == cat_g0.vertex_counts
