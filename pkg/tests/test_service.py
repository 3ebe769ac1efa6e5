"""Profile loading, CLI exit codes, HTTP endpoints, REPL."""

from __future__ import annotations

import io
import json
import urllib.error
import urllib.request
from pathlib import Path

import pytest

from flexgraph.errors import ConfigError
from flexgraph.service import GraphSession, load_profile
from flexgraph.service.cli import main as cli_main
from flexgraph.service.http import GraphServer
from flexgraph.service.profile import Profile

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures" / "g0"
FIG4_NOWHERE = "MATCH (a:Buyer)-[:Knows]->(b:Buyer)-[:Buy]->(c:Item) RETURN c.price"
FIG4 = ('MATCH (a:Buyer)-[:Knows]->(b:Buyer)-[:Buy]->(c:Item) '
        'WHERE a.username = "A1" RETURN c.price')


@pytest.fixture(scope="module")
def g0_session():
    return GraphSession.from_profile(load_profile(FIXTURES / "profile.json"))


@pytest.fixture(scope="module")
def g0_server(g0_session):
    with GraphServer(g0_session, port=0).start_background() as server:
        yield server


def _post(server, path, doc):
    host, port = server.address
    req = urllib.request.Request(
        f"http://{host}:{port}{path}", data=json.dumps(doc).encode(),
        headers={"Content-Type": "application/json"}, method="POST")
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def _get(server, path):
    host, port = server.address
    with urllib.request.urlopen(f"http://{host}:{port}{path}") as resp:
        return resp.status, json.loads(resp.read())


# --- profiles ---------------------------------------------------------------


def test_profile_validation():
    with pytest.raises(ConfigError):
        Profile(store_kind="archive", archive_dir="x", allow_updates=True)
    with pytest.raises(ConfigError):
        Profile(store_kind="immutable")  # no source
    with pytest.raises(ConfigError):
        Profile(store_kind="nope", csv_spec="x")


def test_profile_updates_default_mvcc():
    p = Profile(store_kind="mvcc", csv_spec="x")
    assert p.allow_updates is True
    p2 = Profile(store_kind="immutable", csv_spec="x")
    assert p2.allow_updates is False


# --- CLI ---------------------------------------------------------------------


def test_cli_query_three_rows(capsys):
    rc = cli_main(["query", "--config", str(FIXTURES / "profile.json"),
                   "-q", FIG4_NOWHERE])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.count("50.0") == 2 and out.count("100.0") == 1
    assert "(3 rows)" in out


def test_cli_query_typo_exit4(capsys):
    rc = cli_main(["query", "--config", str(FIXTURES / "profile.json"),
                   "-q", "MATCH (a:Nope RETURN a"])
    assert rc == 4
    assert "error" in capsys.readouterr().err


def test_cli_usage_exit1(capsys):
    assert cli_main(["query"]) == 1
    assert cli_main(["frobnicate"]) == 1


def test_cli_config_error_exit2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "store": {"kind": "immutable",
                  "source": {"csv_spec": "csvspec.json"}},
        "server": {"allow_updates": True},
    }))
    rc = cli_main(["query", "--config", str(bad), "-q", "MATCH (a:B) RETURN a"])
    assert rc == 2


def test_cli_data_error_exit3(tmp_path, capsys):
    spec = {
        "schema": "schema.json",
        "vertices": [{"file": "v.csv", "type": "Buyer",
                      "columns": ["username", "credits"]}],
        "edges": [],
    }
    (tmp_path / "schema.json").write_text(
        (FIXTURES / "schema.json").read_text())
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    (tmp_path / "v.csv").write_text("username,credits\nA1,10\nA1,11\n")
    profile = {"store": {"kind": "immutable",
                         "source": {"csv_spec": "spec.json"}}}
    (tmp_path / "p.json").write_text(json.dumps(profile))
    rc = cli_main(["query", "--config", str(tmp_path / "p.json"),
                   "-q", "MATCH (a:Buyer) RETURN a"])
    assert rc == 3


def test_cli_query_json_format(capsys):
    rc = cli_main(["query", "--config", str(FIXTURES / "profile.json"),
                   "-q", FIG4, "--format", "json", "--explain"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"] == [[100.0], [50.0]] or doc["rows"] == [[50.0], [100.0]]
    assert "plan" in doc and "optimized" in doc["plan"]


def test_cli_analyze_pagerank(tmp_path, capsys):
    out = tmp_path / "scores.csv"
    rc = cli_main(["analyze", "--config", str(FIXTURES / "profile.json"),
                   "pagerank", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "vtype,idx,score"
    assert len(lines) == 1 + 6  # 3 buyers + 2 items + 1 seller


def test_cli_convert_and_archive_profile(tmp_path, capsys):
    rc = cli_main(["convert", "--csv-spec", str(FIXTURES / "csvspec.json"),
                   "--out", str(tmp_path / "arch")])
    assert rc == 0
    profile = {"store": {"kind": "archive",
                         "source": {"archive_dir": "arch"}},
               "catalog": {"k": 2}}
    (tmp_path / "p.json").write_text(json.dumps(profile))
    rc = cli_main(["query", "--config", str(tmp_path / "p.json"),
                   "-q", FIG4_NOWHERE])
    assert rc == 0
    assert "(3 rows)" in capsys.readouterr().out


# --- HTTP ----------------------------------------------------------------------


def test_http_healthz_and_schema(g0_server):
    status, doc = _get(g0_server, "/healthz")
    assert status == 200 and doc == {"ok": True}
    status, doc = _get(g0_server, "/schema")
    assert status == 200
    assert [v["name"] for v in doc["vertex_types"]] == ["Buyer", "Item", "Seller"]


def test_http_catalog_stats(g0_server):
    status, doc = _get(g0_server, "/catalog/stats")
    assert status == 200
    assert doc["k"] == 3 and doc["pattern_count"] > 0
    assert isinstance(doc["sample"], dict)


def test_http_query_explain_shows_pushed_and_fused(g0_server):
    status, doc = _post(g0_server, "/query",
                        {"lang": "cypher", "text": FIG4, "explain": True})
    assert status == 200
    assert sorted(map(tuple, doc["rows"])) == [(50.0,), (100.0,)]
    optimized = doc["plan"]["optimized"]
    kinds = [op["kind"] for op in optimized["ops"]]
    assert kinds.count("EXPAND_VERTEX") == 2
    scan = next(op for op in optimized["ops"] if op["kind"] == "GET_VERTEX")
    assert scan["mode"] == "scan" and scan.get("pk")
    assert "SELECT" not in kinds


def test_http_query_diagnostic_422(g0_server):
    status, doc = _post(g0_server, "/query",
                        {"lang": "cypher", "text": "MATCH (x:Nope) RETURN x"})
    assert status == 422
    assert doc["diagnostic"]["line"] == 1


def test_http_malformed_400(g0_server):
    host, port = g0_server.address
    req = urllib.request.Request(f"http://{host}:{port}/query",
                                 data=b"{not json", method="POST")
    try:
        urllib.request.urlopen(req)
        raise AssertionError("expected 400")
    except urllib.error.HTTPError as e:
        assert e.code == 400


def test_http_update_on_readonly_409(g0_server):
    status, doc = _post(g0_server, "/update", {"ops": [
        {"op": "insert_edge", "type": "Buy", "src_pk": "C3", "dst_pk": 1},
    ]})
    assert status == 409


def test_http_update_mvcc_roundtrip():
    session = GraphSession.from_profile(
        load_profile(FIXTURES / "profile-mvcc.json"))
    with GraphServer(session, port=0).start_background() as server:
        status, doc = _post(server, "/query",
                            {"lang": "cypher", "text": FIG4_NOWHERE})
        assert status == 200 and len(doc["rows"]) == 3
        status, doc = _post(server, "/update", {"ops": [
            {"op": "insert_edge", "type": "Buy", "src_pk": "C3", "dst_pk": 1,
             "props": {"date": 12}},
        ]})
        assert status == 200 and doc["version"] == 2
        status, doc = _post(server, "/query",
                            {"lang": "cypher", "text": FIG4_NOWHERE})
        assert len(doc["rows"]) == 4
        status, doc = _post(server, "/query",
                            {"lang": "cypher", "text": FIG4_NOWHERE,
                             "snapshot_version": 1})
        assert len(doc["rows"]) == 3


def test_http_steps_lang(g0_server):
    steps = [["V", "Buyer"], ["has", "username", "=", "A1"],
             ["out", "Knows"], ["out", "Buy"], ["values", "price"]]
    status, doc = _post(g0_server, "/query", {"lang": "steps", "steps": steps})
    assert status == 200
    assert sorted(map(tuple, doc["rows"])) == [(50.0,), (100.0,)]


def test_http_cli_byte_identical_rows(g0_server, capsys):
    status, doc = _post(g0_server, "/query",
                        {"lang": "cypher", "text": FIG4})
    rc = cli_main(["query", "--config", str(FIXTURES / "profile.json"),
                   "-q", FIG4, "--format", "json"])
    assert rc == 0
    cli_doc = json.loads(capsys.readouterr().out)
    assert json.dumps(doc["rows"]) == json.dumps(cli_doc["rows"])


# --- REPL -----------------------------------------------------------------------


def test_repl_basic(g0_session):
    from flexgraph.service.repl import repl

    stdin = io.StringIO(FIG4_NOWHERE + "\n:snapshot latest\n:quit\n")
    stdout = io.StringIO()
    repl(g0_session, stdin=stdin, stdout=stdout)
    out = stdout.getvalue()
    assert "(3 rows)" in out
    assert "100.0" in out
