"""Cross-backend agreement helper: identical retrieval results across
stores built from the same tables (internal ids agree by construction)."""

from __future__ import annotations

from flexgraph.errors import NotFound
from flexgraph.model import Direction


def assert_same_graph(a, b, ordered_adjacency: bool = True) -> None:
    schema = a.schema
    assert schema.vertex_types == b.schema.vertex_types
    assert schema.edge_types == b.schema.edge_types
    for vt, decl in enumerate(schema.vertex_types):
        assert a.vertex_count(vt) == b.vertex_count(vt), decl.name
        for v in a.vertex_list(vt):
            for pname, _ in decl.properties:
                assert a.vertex_property(v, pname) == b.vertex_property(v, pname)
            pk = a.vertex_property(v, decl.primary_key)
            assert a.lookup_by_pk(vt, pk) == b.lookup_by_pk(vt, pk) == v
    for et, decl in enumerate(schema.edge_types):
        for dirn, anchor_type in ((Direction.OUT, decl.src_type),
                                  (Direction.IN, decl.dst_type)):
            ord_ = schema.vtype_ordinal(anchor_type)
            for v in a.vertex_list(ord_):
                ea = [(n.key(), e.key()) for n, e in a.adjacency(v, dirn, et)]
                eb = [(n.key(), e.key()) for n, e in b.adjacency(v, dirn, et)]
                if not ordered_adjacency:
                    ea, eb = sorted(ea), sorted(eb)
                assert ea == eb, f"{decl.name} {dirn} of {v}"
                assert a.degree(v, dirn, et) == b.degree(v, dirn, et)
        prop_names = [p for p, _ in decl.properties]
        src_ord = schema.vtype_ordinal(decl.src_type)
        for v in a.vertex_list(src_ord):
            for _, e in a.adjacency(v, Direction.OUT, et):
                for p in prop_names:
                    assert a.edge_property(e, p) == b.edge_property(e, p)


def missing_pk_agrees(a, b, vtype, key) -> None:
    for snap in (a, b):
        try:
            snap.lookup_by_pk(vtype, key)
            raise AssertionError("expected NotFound")
        except NotFound:
            pass
