"""Cypher parser, step builder, and their shared-IR equivalence."""

from __future__ import annotations

import pytest

from flexgraph.errors import Diagnostic
from flexgraph.frontends import (
    StepChain,
    cypher_parse,
    frontend_equivalence,
    parse_query,
    steps_to_dag,
    unparse,
)
from flexgraph.ir import (
    GetVertex,
    Group,
    Match,
    Order,
    PathExpand,
    Project,
    Select,
    Sink,
)

FIG4 = ('MATCH (a:Buyer)-[:Knows]->(b:Buyer)-[:Buy]->(c:Item) '
        'WHERE a.username = "A1" RETURN c.price')

FRAUD = """
MATCH (v:Buyer {username: $vid})-[b1:Buy]->(:Item)<-[b2:Buy]-(s:Buyer)
WHERE s.username IN $SEEDS AND b1.date - b2.date < 5
WITH v, COUNT(s) AS cnt1
MATCH (v)-[:Knows]-(f:Buyer), (f)-[b1:Buy]->(:Item)<-[b2:Buy]-(s:Buyer)
WHERE s.username IN $SEEDS
WITH v, cnt1, COUNT(s) AS cnt2
WHERE $w1 * cnt1 + $w2 * cnt2 > $threshold
RETURN v
"""


def _kinds(dag):
    return [dag.ops[oid].kind for oid in dag.topo_order()]


def test_fig4_shape(schema_g0):
    dag = cypher_parse(FIG4, schema_g0)
    assert _kinds(dag) == ["MATCH", "SELECT", "PROJECT", "SINK"]
    m = next(op for op in dag.ops.values() if isinstance(op, Match))
    assert sorted(m.pattern.aliases()) == ["a", "b", "c"]
    assert m.bound == ()


def test_unknown_label_diagnostic(schema_g0):
    with pytest.raises(Diagnostic) as ei:
        cypher_parse("MATCH (x:Nope) RETURN x", schema_g0)
    assert "Nope" in ei.value.message
    assert ei.value.line == 1


def test_diagnostic_position(schema_g0):
    with pytest.raises(Diagnostic) as ei:
        cypher_parse("MATCH (a:Buyer)\nRETURN a.username +", schema_g0)
    assert ei.value.line == 2


def test_fraud_query_structure(schema_g0):
    dag = cypher_parse(FRAUD, schema_g0)
    kinds = _kinds(dag)
    assert kinds == ["MATCH", "SELECT", "GROUP", "MATCH", "SELECT", "GROUP",
                     "SELECT", "PROJECT", "SINK"]
    matches = [op for op in dag.ops.values() if isinstance(op, Match)]
    assert matches[0].bound == () and len(matches[0].pattern.edges) == 2
    second = matches[1]
    assert second.bound == ("v",)
    assert len(second.pattern.edges) == 3  # Knows + two Buy edges, merged
    groups = [op for op in dag.ops.values() if isinstance(op, Group)]
    assert [len(g.keys) for g in groups] == [1, 2]


def test_anonymous_vertices_not_in_schema(schema_g0):
    dag = cypher_parse("MATCH (a:Buyer)-[:Buy]->(:Item) RETURN a", schema_g0)
    m_id = next(oid for oid, op in dag.ops.items() if isinstance(op, Match))
    assert dag.schema_of(m_id).names() == ("a",)


def test_undirected_edge(schema_g0):
    dag = cypher_parse("MATCH (a:Buyer)-[:Knows]-(b:Buyer) RETURN b", schema_g0)
    m = next(op for op in dag.ops.values() if isinstance(op, Match))
    from flexgraph.model import Direction

    assert m.pattern.edges[0].direction is Direction.BOTH


def test_var_length_path(schema_g0):
    dag = cypher_parse("MATCH (a:Buyer)-[:Knows*1..2]->(b) RETURN b", schema_g0)
    kinds = _kinds(dag)
    assert "PATH" in kinds and "GET_VERTEX" in kinds
    p = next(op for op in dag.ops.values() if isinstance(op, PathExpand))
    assert (p.min_hops, p.max_hops) == (1, 2)


def test_order_and_limit(schema_g0):
    dag = cypher_parse(
        "MATCH (a:Buyer)-[:Buy]->(c:Item) RETURN c.price AS price "
        "ORDER BY price DESC LIMIT 2", schema_g0)
    order = next(op for op in dag.ops.values() if isinstance(op, Order))
    assert order.limit == 2 and order.keys[0][1] is False


def test_inline_props_are_pattern_constraints(schema_g0):
    dag = cypher_parse('MATCH (a:Buyer {username: "A1"})-[:Buy]->(c:Item) '
                       "RETURN c", schema_g0)
    m = next(op for op in dag.ops.values() if isinstance(op, Match))
    a = m.pattern.vertex("a")
    assert a.pred is not None
    assert not any(isinstance(op, Select) for op in dag.ops.values())


def test_parse_roundtrip_fixtures(schema_g0):
    queries = [
        FIG4,
        FRAUD,
        "MATCH (a:Buyer)-[:Knows]-(b:Buyer) RETURN b.username ORDER BY "
        "b.username LIMIT 3",
        "MATCH (s:Seller)-[:Sell]->(i:Item) WHERE i.price >= 50.0 "
        "RETURN s.id AS sid, i.price AS p",
        "MATCH (a:Buyer)-[:Knows*1..2]->(b) RETURN b",
        "MATCH (a:Buyer), (s:Seller) RETURN a.username, s.id",
    ]
    for q in queries:
        dag1 = cypher_parse(q, schema_g0)
        text2 = unparse(parse_query(q))
        dag2 = cypher_parse(text2, schema_g0)
        assert frontend_equivalence(dag1, dag2), q


# --- steps ----------------------------------------------------------------------


def test_steps_fig4_equivalent(schema_g0):
    chain = (StepChain().V("Buyer").has("username", "=", "A1")
             .out("Knows").out("Buy").values("price"))
    dag_steps = steps_to_dag(chain, schema_g0)
    dag_cypher = cypher_parse(
        'MATCH (a:Buyer {username: "A1"})-[:Knows]->(b:Buyer)-[:Buy]->(c:Item) '
        "RETURN c.price", schema_g0)
    assert frontend_equivalence(dag_steps, dag_cypher)


def test_steps_edge_property_diagnostic(schema_g0):
    chain = StepChain().V("Buyer").outE("Buy").values("price")
    with pytest.raises(Diagnostic) as ei:
        steps_to_dag(chain, schema_g0)
    assert "price" in ei.value.message


def test_steps_empty_chain(schema_g0):
    with pytest.raises(Diagnostic):
        steps_to_dag(StepChain(), schema_g0)


def test_steps_must_end_value_producing(schema_g0):
    with pytest.raises(Diagnostic):
        steps_to_dag(StepChain().V("Buyer").out("Knows"), schema_g0)


def test_steps_never_prefuse(schema_g0):
    chain = StepChain().V("Buyer").out("Knows").values("username")
    dag = steps_to_dag(chain, schema_g0)
    kinds = _kinds(dag)
    assert "EXPAND_EDGE" in kinds and "EXPAND_VERTEX" not in kinds


# --- equivalence corner cases ------------------------------------------------------


def test_equivalence_alias_renaming(schema_g0):
    q1 = "MATCH (a:Buyer)-[:Buy]->(c:Item) RETURN c.price"
    q2 = "MATCH (x:Buyer)-[:Buy]->(y:Item) RETURN y.price"
    assert frontend_equivalence(cypher_parse(q1, schema_g0),
                                cypher_parse(q2, schema_g0))


def test_equivalence_detects_constant_change(schema_g0):
    q1 = 'MATCH (a:Buyer)-[:Buy]->(c:Item) WHERE c.price > 50.0 RETURN c'
    q2 = 'MATCH (a:Buyer)-[:Buy]->(c:Item) WHERE c.price > 60.0 RETURN c'
    assert not frontend_equivalence(cypher_parse(q1, schema_g0),
                                    cypher_parse(q2, schema_g0))


def test_comparison_lt_negative_literal(schema_g0):
    # '<-' must not swallow 'x < -5'
    dag = cypher_parse(
        "MATCH (a:Buyer) WHERE a.credits < -5 RETURN a", schema_g0)
    assert any(isinstance(op, Select) for op in dag.ops.values())
