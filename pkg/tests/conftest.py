"""Shared fixtures: the G0 graph (the normative fixture every hand-derived
expectation in the suite refers to) plus random-graph helpers."""

from __future__ import annotations

import random

import pytest

from flexgraph.model import (
    FLOAT64,
    INT64,
    STRING,
    EdgeTypeDecl,
    PropertyGraphSchema,
    VertexTypeDecl,
    make_schema,
)
from flexgraph.stores import build_immutable
from flexgraph.stores.tables import EdgeTable, VertexTable


def g0_schema() -> PropertyGraphSchema:
    return make_schema(
        [
            VertexTypeDecl("Buyer", (("username", STRING), ("credits", INT64)),
                           "username"),
            VertexTypeDecl("Item", (("id", INT64), ("price", FLOAT64),
                                    ("discount", FLOAT64)), "id"),
            VertexTypeDecl("Seller", (("id", INT64), ("rating", FLOAT64)), "id"),
        ],
        [
            EdgeTypeDecl("Knows", "Buyer", "Buyer"),
            EdgeTypeDecl("Buy", "Buyer", "Item", (("date", INT64),)),
            EdgeTypeDecl("Sell", "Seller", "Item"),
        ],
    )


def g0_tables():
    vtabs = {
        "Buyer": VertexTable({
            "username": ["A1", "B2", "C3"],
            "credits": [10, 5, 8],
        }),
        "Item": VertexTable({
            "id": [1, 2],
            "price": [100.0, 50.0],
            "discount": [0.1, 0.0],
        }),
        "Seller": VertexTable({
            "id": [1],
            "rating": [4.5],
        }),
    }
    etabs = {
        "Knows": EdgeTable(src_pk=["A1", "B2"], dst_pk=["B2", "C3"]),
        "Buy": EdgeTable(
            src_pk=["A1", "B2", "B2", "C3"],
            dst_pk=[1, 1, 2, 2],
            columns={"date": [1, 2, 3, 9]},
        ),
        "Sell": EdgeTable(src_pk=[1, 1], dst_pk=[1, 2]),
    }
    return vtabs, etabs


@pytest.fixture(scope="session")
def schema_g0():
    return g0_schema()


@pytest.fixture(scope="session")
def g0_store(schema_g0):
    vtabs, etabs = g0_tables()
    return build_immutable(schema_g0, vtabs, etabs)


@pytest.fixture(scope="session")
def g0(g0_store):
    return g0_store.snapshot_latest()


def random_graph_tables(schema: PropertyGraphSchema, rng: random.Random,
                        nv_max: int = 40, ne_max: int = 120):
    """Random tables for any schema whose pks are Int64 or String."""
    vtabs = {}
    counts = {}
    for decl in schema.vertex_types:
        n = rng.randint(1, nv_max)
        counts[decl.name] = n
        cols = {}
        for pname, pdt in decl.properties:
            if pname == decl.primary_key:
                if pdt == STRING:
                    cols[pname] = [f"{decl.name[:2]}{i}" for i in range(n)]
                else:
                    cols[pname] = list(range(n))
            elif pdt == INT64:
                cols[pname] = [rng.randint(0, 100) for _ in range(n)]
            elif pdt == FLOAT64:
                cols[pname] = [round(rng.uniform(0, 200), 2) for _ in range(n)]
            elif pdt == STRING:
                cols[pname] = [rng.choice("abcdef") * rng.randint(1, 3)
                               for _ in range(n)]
            else:
                cols[pname] = [rng.random() < 0.5 for _ in range(n)]
        vtabs[decl.name] = VertexTable(cols)
    etabs = {}
    for decl in schema.edge_types:
        m = rng.randint(0, ne_max)
        spk = vtabs[decl.src_type].columns[schema.vertex_decl(decl.src_type).primary_key]
        dpk = vtabs[decl.dst_type].columns[schema.vertex_decl(decl.dst_type).primary_key]
        table = EdgeTable()
        cols = {p: [] for p, _ in decl.properties}
        for _ in range(m):
            table.src_pk.append(rng.choice(spk))
            table.dst_pk.append(rng.choice(dpk))
            for pname, pdt in decl.properties:
                if pdt == INT64:
                    cols[pname].append(rng.randint(0, 50))
                elif pdt == FLOAT64:
                    cols[pname].append(round(rng.uniform(0, 10), 2))
                elif pdt == STRING:
                    cols[pname].append(rng.choice("xyz"))
                else:
                    cols[pname].append(rng.random() < 0.5)
        table.columns = cols
        etabs[decl.name] = table
    return vtabs, etabs
