"""Synthetic graphs and purpose-built fixtures for benches and acceptance
runs: uniform random graphs, a start-order-sensitive skewed graph, and the
co-purchase fraud fixture."""

from __future__ import annotations

import random
from typing import Dict, Tuple

from .model import (
    EdgeTypeDecl,
    FLOAT64,
    INT64,
    PropertyGraphSchema,
    VertexTypeDecl,
    make_schema,
)
from .stores.tables import EdgeTable, VertexTable


def single_type_schema() -> PropertyGraphSchema:
    return make_schema(
        [VertexTypeDecl("N", (("id", INT64), ("w", FLOAT64)), "id")],
        [EdgeTypeDecl("E", "N", "N")],
    )


def random_graph_single(n_vertices: int, n_edges: int, seed: int = 0,
                        skew: float = 0.0):
    """Random directed multigraph over one vertex type. skew > 1 draws
    endpoints zipf-distributed (the usual power-law benchmark shape);
    0 keeps them uniform."""
    rng = random.Random(seed)
    schema = single_type_schema()
    vt = {"N": VertexTable({
        "id": list(range(n_vertices)),
        "w": [round(rng.random(), 6) for _ in range(n_vertices)],
    })}
    if skew and skew > 1.0:
        import numpy as np

        gen = np.random.default_rng(seed)
        src = ((gen.zipf(skew, n_edges) - 1) % n_vertices).tolist()
        dst = ((gen.zipf(skew, n_edges) - 1) % n_vertices).tolist()
    else:
        src = [rng.randrange(n_vertices) for _ in range(n_edges)]
        dst = [rng.randrange(n_vertices) for _ in range(n_edges)]
    et = {"E": EdgeTable(src_pk=src, dst_pk=dst)}
    return schema, vt, et


def fraud_schema() -> PropertyGraphSchema:
    return make_schema(
        [
            VertexTypeDecl("Account", (("id", INT64),), "id"),
            VertexTypeDecl("Item", (("id", INT64),), "id"),
        ],
        [
            EdgeTypeDecl("Knows", "Account", "Account"),
            EdgeTypeDecl("Buy", "Account", "Item", (("date", INT64),)),
        ],
    )


#: the fraud query over the fixture; exactly account 1 exceeds the
#: threshold with SEEDS=[5,6], w1=2.0, w2=0.5, threshold=8.0
FRAUD_QUERY = """
MATCH (v:Account)-[b1:Buy]->(:Item)<-[b2:Buy]-(s:Account)
WHERE s.id IN $SEEDS AND b1.date - b2.date < 5
WITH v, COUNT(s) AS cnt1
MATCH (v)-[:Knows]-(f:Account), (f)-[b1:Buy]->(:Item)<-[b2:Buy]-(s:Account)
WHERE s.id IN $SEEDS
WITH v, cnt1, COUNT(s) AS cnt2
WHERE $w1 * cnt1 + $w2 * cnt2 > $threshold
RETURN v
"""

FRAUD_PARAMS = {"SEEDS": [5, 6], "w1": 2.0, "w2": 0.5, "threshold": 8.0}


def fraud_fixture_tables() -> Tuple[Dict[str, VertexTable], Dict[str, EdgeTable]]:
    """Accounts 1..6 (5 and 6 are fraud seeds), items 1..4.

    Account 1 co-purchases four (item, seed) combinations inside the date
    window and has one indirect hit through friend 2; account 2 scores
    2*1 + 0.5*4 = 4; everyone else drops out. Only account 1 crosses 8.
    """
    vtabs = {
        "Account": VertexTable({"id": [1, 2, 3, 4, 5, 6]}),
        "Item": VertexTable({"id": [1, 2, 3, 4]}),
    }
    buys = [
        # account 1 buys items 1..3
        (1, 1, 10), (1, 2, 20), (1, 3, 30),
        # seed 5 buys 1..4 just after; seed 6 buys item 1
        (5, 1, 11), (5, 2, 21), (5, 3, 31), (5, 4, 51),
        (6, 1, 13),
        # account 2 buys item 4 near seed 5's purchase
        (2, 4, 50),
        # noise: accounts 3 and 4 buy items nobody co-purchased in-window
        (3, 2, 90), (4, 3, 95),
    ]
    etabs = {
        "Knows": EdgeTable(src_pk=[1], dst_pk=[2]),
        "Buy": EdgeTable(
            src_pk=[b[0] for b in buys],
            dst_pk=[b[1] for b in buys],
            columns={"date": [b[2] for b in buys]},
        ),
    }
    return vtabs, etabs


def skewed_schema() -> PropertyGraphSchema:
    return make_schema(
        [
            VertexTypeDecl("A", (("id", INT64),), "id"),
            VertexTypeDecl("B", (("id", INT64),), "id"),
            VertexTypeDecl("C", (("id", INT64),), "id"),
        ],
        [
            EdgeTypeDecl("AB", "A", "B"),
            EdgeTypeDecl("BC", "B", "C"),
        ],
    )


def skewed_fixture_tables(n_a: int = 800, n_b: int = 40, n_c: int = 4,
                          ab_edges: int = 4000, bc_edges: int = 6,
                          seed: int = 9):
    """Many A-B edges, few B-C edges: a plan scanning A first drags a huge
    intermediate; starting from C keeps it tiny."""
    rng = random.Random(seed)
    vtabs = {
        "A": VertexTable({"id": list(range(n_a))}),
        "B": VertexTable({"id": list(range(n_b))}),
        "C": VertexTable({"id": list(range(n_c))}),
    }
    etabs = {
        "AB": EdgeTable(
            src_pk=[rng.randrange(n_a) for _ in range(ab_edges)],
            dst_pk=[rng.randrange(n_b) for _ in range(ab_edges)],
        ),
        "BC": EdgeTable(
            src_pk=[rng.randrange(n_b) for _ in range(bc_edges)],
            dst_pk=[rng.randrange(n_c) for _ in range(bc_edges)],
        ),
    }
    return vtabs, etabs


def fig4_style_schema() -> PropertyGraphSchema:
    """Buyer/Item schema for selective-query benches at scale."""
    return make_schema(
        [
            VertexTypeDecl("Buyer", (("username", INT64), ("credits", INT64)),
                           "username"),
            VertexTypeDecl("Item", (("id", INT64), ("price", FLOAT64)), "id"),
        ],
        [
            EdgeTypeDecl("Knows", "Buyer", "Buyer"),
            EdgeTypeDecl("Buy", "Buyer", "Item", (("date", INT64),)),
        ],
    )


def fig4_style_tables(n_buyers: int = 2000, n_items: int = 500,
                      knows_edges: int = 20000, buy_edges: int = 80000,
                      seed: int = 17):
    rng = random.Random(seed)
    vtabs = {
        "Buyer": VertexTable({
            "username": list(range(n_buyers)),
            "credits": [rng.randrange(100) for _ in range(n_buyers)],
        }),
        "Item": VertexTable({
            "id": list(range(n_items)),
            "price": [round(rng.uniform(1, 500), 2) for _ in range(n_items)],
        }),
    }
    etabs = {
        "Knows": EdgeTable(
            src_pk=[rng.randrange(n_buyers) for _ in range(knows_edges)],
            dst_pk=[rng.randrange(n_buyers) for _ in range(knows_edges)],
        ),
        "Buy": EdgeTable(
            src_pk=[rng.randrange(n_buyers) for _ in range(buy_edges)],
            dst_pk=[rng.randrange(n_items) for _ in range(buy_edges)],
            columns={"date": [rng.randrange(1000) for _ in range(buy_edges)]},
        ),
    }
    return vtabs, etabs
