"""Archive format: determinism, roundtrip, zone maps, converters."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import pytest

from flexgraph.errors import CorruptChunk, CsvParseError, NonEmptyDir
from flexgraph.model import Direction
from flexgraph.retrieval import PropertyPredicate, emulate_filtered_scan
from flexgraph.stores import (
    build_immutable,
    build_store_from_archive,
    convert_csv_to_archive,
    open_archive,
    write_archive,
)
from flexgraph.stores.archive import encode_chunk, DT_I64
from flexgraph.stores.tables import load_csv_tables
from backends import assert_same_graph, missing_pk_agrees
from conftest import g0_schema, g0_tables


def _tree_bytes(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_writer_chunking(tmp_path, g0):
    write_archive(g0, tmp_path / "a", chunk_size=2, codec="raw")
    names = {p.name for p in (tmp_path / "a" / "vertex" / "Buyer").iterdir()}
    assert {"username.c0", "username.c1"} <= names  # ceil(3/2) chunks


def test_write_deterministic(tmp_path, g0):
    write_archive(g0, tmp_path / "a", chunk_size=2)
    write_archive(g0, tmp_path / "b", chunk_size=2)
    ta, tb = _tree_bytes(tmp_path / "a"), _tree_bytes(tmp_path / "b")
    assert ta == tb


def test_zone_map_values(tmp_path, g0):
    write_archive(g0, tmp_path / "a", chunk_size=4096, codec="raw")
    arch = open_archive(tmp_path / "a")
    _codec, code, _n, zmin, zmax = arch.chunk_header("vertex/Item/price.c0")
    assert struct.unpack("<d", zmin)[0] == 50.0
    assert struct.unpack("<d", zmax)[0] == 100.0


def test_roundtrip_equals_immutable(tmp_path, g0):
    write_archive(g0, tmp_path / "a", chunk_size=2)
    arch = open_archive(tmp_path / "a").snapshot_latest()
    assert_same_graph(g0, arch)
    missing_pk_agrees(g0, arch, "Buyer", "ZZ")


def test_nonempty_dir_refused(tmp_path, g0):
    d = tmp_path / "a"
    d.mkdir()
    (d / "junk").write_text("x")
    with pytest.raises(NonEmptyDir):
        write_archive(g0, d)


def test_truncated_chunk(tmp_path, g0):
    write_archive(g0, tmp_path / "a", codec="raw")
    victim = tmp_path / "a" / "vertex" / "Item" / "price.c0"
    victim.write_bytes(victim.read_bytes()[:-3])
    arch = open_archive(tmp_path / "a").snapshot_latest()
    i1 = arch.lookup_by_pk("Item", 1)
    with pytest.raises(CorruptChunk):
        arch.vertex_property(i1, "price")


def test_zone_skip_counts_no_decodes(tmp_path, g0):
    write_archive(g0, tmp_path / "a")
    store = open_archive(tmp_path / "a")
    snap = store.snapshot_latest()
    got = list(snap.filtered_vertex_list("Item", PropertyPredicate([("price", ">", 200.0)])))
    assert got == []
    assert store.decode_counts.get("price", 0) == 0
    assert store.decode_counts.get("targets", 0) == 0


def test_zone_skip_never_changes_results(tmp_path, g0):
    write_archive(g0, tmp_path / "a", chunk_size=1)
    snap = open_archive(tmp_path / "a").snapshot_latest()
    for op, const in [(">", 60.0), ("<", 60.0), ("=", 50.0), ("!=", 50.0),
                      (">=", 100.0), ("<=", 0.0)]:
        pred = PropertyPredicate([("price", op, const)])
        a = [v.idx for v in snap.filtered_vertex_list("Item", pred)]
        b = [v.idx for v in emulate_filtered_scan(snap, "Item", pred)]
        assert a == b, (op, const)
    pred = PropertyPredicate([("username", "=", "B2")])
    a = [v.idx for v in snap.filtered_vertex_list("Buyer", pred)]
    assert a == [v.idx for v in emulate_filtered_scan(snap, "Buyer", pred)] == [1]


def test_golden_chunk_bytes():
    """The chunk layout is normative; pin the exact bytes of a tiny
    raw-codec int64 chunk."""
    raw = encode_chunk(DT_I64, __import__("numpy").array([3, -1, 7]), 0)
    expect = (
        b"GARL"                    # magic
        + b"\x01\x00"              # format_version 1, u16 LE
        + b"\x00"                  # codec raw
        + b"\x01"                  # dtype int64
        + b"\x03\x00\x00\x00"      # row_count 3
        + struct.pack("<q", -1)    # zone_min
        + struct.pack("<q", 7)     # zone_max
        + struct.pack("<3q", 3, -1, 7)
    )
    assert raw == expect


def test_header_golden_on_disk(tmp_path, g0):
    write_archive(g0, tmp_path / "a", chunk_size=4096, codec="raw")
    raw = (tmp_path / "a" / "vertex" / "Item" / "id.c0").read_bytes()
    assert raw[:4] == b"GARL"
    assert raw[4:6] == b"\x01\x00"
    assert raw[6] == 0 and raw[7] == 1
    assert struct.unpack("<I", raw[8:12])[0] == 2
    assert struct.unpack("<q", raw[12:20])[0] == 1
    assert struct.unpack("<q", raw[20:28])[0] == 2


def _write_g0_csvs(d: Path) -> dict:
    (d / "buyer.csv").write_text(
        "username,credits\nA1,10\nB2,5\nC3,8\n")
    (d / "item.csv").write_text(
        "id,price,discount\n1,100.0,0.1\n2,50.0,0.0\n")
    (d / "seller.csv").write_text("id,rating\n1,4.5\n")
    (d / "knows.csv").write_text("src,dst\nA1,B2\nB2,C3\n")
    (d / "buy.csv").write_text(
        "src,dst,date\nA1,1,1\nB2,1,2\nB2,2,3\nC3,2,9\n")
    (d / "sell.csv").write_text("src,dst\n1,1\n1,2\n")
    return {
        "vertices": [
            {"file": "buyer.csv", "type": "Buyer", "columns": ["username", "credits"]},
            {"file": "item.csv", "type": "Item", "columns": ["id", "price", "discount"]},
            {"file": "seller.csv", "type": "Seller", "columns": ["id", "rating"]},
        ],
        "edges": [
            {"file": "knows.csv", "type": "Knows", "src_col": "src", "dst_col": "dst",
             "columns": []},
            {"file": "buy.csv", "type": "Buy", "src_col": "src", "dst_col": "dst",
             "columns": ["date"]},
            {"file": "sell.csv", "type": "Sell", "src_col": "src", "dst_col": "dst",
             "columns": []},
        ],
    }


def test_csv_to_archive_composition(tmp_path, g0):
    schema = g0_schema()
    spec = _write_g0_csvs(tmp_path)
    convert_csv_to_archive(spec, schema, tmp_path / "arch", base_dir=tmp_path)
    # archive == write_archive(build_immutable(csv))
    vtabs, etabs = load_csv_tables(spec, schema, tmp_path)
    direct = build_immutable(schema, vtabs, etabs)
    write_archive(direct.snapshot_latest(), tmp_path / "arch2")
    assert _tree_bytes(tmp_path / "arch") == _tree_bytes(tmp_path / "arch2")
    # and it round-trips into stores equal to the direct build
    imm = build_store_from_archive(tmp_path / "arch", "immutable")
    assert_same_graph(direct.snapshot_latest(), imm.snapshot_latest())
    assert_same_graph(g0, imm.snapshot_latest())
    mv = build_store_from_archive(tmp_path / "arch", "mvcc")
    assert_same_graph(g0, mv.snapshot_latest())


def test_csv_bad_column_count(tmp_path):
    schema = g0_schema()
    spec = _write_g0_csvs(tmp_path)
    (tmp_path / "buy.csv").write_text(
        "src,dst,date\nA1,1,1\nB2,1,2\nB2,2,3\nC3,2,9\nA1,1\nB2,2,4\n")
    # bad row is data line 5 -> file line 6... make it line 7 exactly:
    (tmp_path / "buy.csv").write_text(
        "src,dst,date\nA1,1,1\nB2,1,2\nB2,2,3\nC3,2,9\nA1,2,4\nB2,1\n")
    with pytest.raises(CsvParseError) as ei:
        load_csv_tables(spec, schema, tmp_path)
    assert ei.value.line == 7


def test_in_direction_from_reverse_index(tmp_path, g0):
    write_archive(g0, tmp_path / "a", chunk_size=2)
    arch = open_archive(tmp_path / "a").snapshot_latest()
    i2 = arch.lookup_by_pk("Item", 2)
    buyers = sorted(n.idx for n, _ in arch.adjacency(i2, Direction.IN, "Buy"))
    assert buyers == [1, 2]
