"""The flexgraph command line.

Subcommands: load | convert | catalog | query | repl | serve | analyze |
bench. Exit codes: 0 ok, 1 usage, 2 config, 3 data, 4 query error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import (
    ConfigError,
    CorruptChunk,
    CsvParseError,
    DanglingEdge,
    Diagnostic,
    DuplicatePk,
    ExecError,
    FlexgraphError,
    ParamUnbound,
    SchemaError,
    SchemaMismatch,
)

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_DATA, EXIT_QUERY = 0, 1, 2, 3, 4

_DATA_ERRORS = (CsvParseError, SchemaMismatch, SchemaError, DanglingEdge,
                DuplicatePk, CorruptChunk)
_QUERY_ERRORS = (Diagnostic, ExecError, ParamUnbound)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    p = _Parser(prog="flexgraph",
                description="modular property-graph stack")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", required=True,
                        help="profile JSON path")
        return sp

    with_config(sub.add_parser("load", help="build the profile's store and "
                                            "report element counts"))

    conv = sub.add_parser("convert", help="CSVs -> archive directory")
    conv.add_argument("--csv-spec", required=True)
    conv.add_argument("--out", required=True)
    conv.add_argument("--chunk-size", type=int, default=4096)
    conv.add_argument("--codec", choices=["raw", "deflate"], default="deflate")

    cat = with_config(sub.add_parser("catalog",
                                     help="build and save catalog.json"))
    cat.add_argument("--out", help="output path (defaults to profile's "
                                   "catalog.path)")

    q = with_config(sub.add_parser("query", help="run one query"))
    q.add_argument("-q", "--query", help="cypher text")
    q.add_argument("--steps", help="JSON step list")
    q.add_argument("--params", default="{}", help="JSON parameter map")
    q.add_argument("--backend", choices=["batch", "oltp"])
    q.add_argument("--snapshot", type=int)
    q.add_argument("--explain", action="store_true")
    q.add_argument("--format", choices=["json", "table"], default="table")

    with_config(sub.add_parser("repl", help="interactive loop"))

    srv = with_config(sub.add_parser("serve", help="HTTP service"))
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int)

    an = with_config(sub.add_parser("analyze", help="run an analytics kernel"))
    an.add_argument("kernel", choices=["pagerank", "bfs"])
    an.add_argument("--out", required=True, help="CSV output path")
    an.add_argument("--damping", type=float, default=0.85)
    an.add_argument("--tol", type=float, default=1e-6)
    an.add_argument("--src-type", help="bfs source vertex type")
    an.add_argument("--src-pk", help="bfs source primary key")

    b = sub.add_parser("bench", help="benchmark suites")
    b.add_argument("--suite", required=True,
                   choices=["edge_scan", "qps", "rbo_cbo", "grin_overhead",
                            "acceptance"])
    b.add_argument("--vertices", type=int)
    b.add_argument("--edges", type=int)
    b.add_argument("--shards", type=int, nargs="*")
    b.add_argument("--queries", type=int)
    b.add_argument("--mode", choices=["threads", "processes"],
                   default="processes")
    b.add_argument("--out", help="write the JSON report here")
    return p


def _session(args):
    from .profile import load_profile
    from .session import GraphSession

    profile = load_profile(args.config)
    return profile, GraphSession.from_profile(profile)


def cmd_load(args) -> int:
    from ..model import Direction

    _profile, session = _session(args)
    snap = session.store.snapshot_latest()
    counts = {
        "vertices": {d.name: snap.vertex_count(i)
                     for i, d in enumerate(session.schema.vertex_types)},
        "edges": {d.name: sum(snap.degree(v, Direction.OUT, i)
                              for v in snap.vertex_list(
                                  session.schema.vtype_ordinal(d.src_type)))
                  for i, d in enumerate(session.schema.edge_types)},
    }
    print(json.dumps(counts, indent=2))
    return EXIT_OK


def cmd_convert(args) -> int:
    from ..stores import convert_csv_to_archive
    from .session import _load_schema_for_csv

    spec_path = Path(args.csv_spec)
    schema = _load_schema_for_csv(spec_path)
    manifest = convert_csv_to_archive(spec_path, schema, args.out,
                                      chunk_size=args.chunk_size,
                                      codec=args.codec)
    print(json.dumps({"files": len(manifest["files"]),
                      "counts": manifest["counts"]}, indent=2))
    return EXIT_OK


def cmd_catalog(args) -> int:
    from ..optimizer import catalog_build

    profile, session = _session(args)
    out = args.out or profile.catalog_path
    if not out:
        raise ConfigError("no catalog output path (profile catalog.path "
                          "or --out)")
    catalog = (session.catalog
               or catalog_build(session.store.snapshot_latest(),
                                profile.catalog_k))
    Path(profile.base_dir / out).write_text(catalog.dumps() + "\n")
    print(json.dumps({"k": catalog.k,
                      "pattern_count": len(catalog.entries),
                      "path": str(profile.base_dir / out)}, indent=2))
    return EXIT_OK


def cmd_query(args) -> int:
    _profile, session = _session(args)
    if (args.query is None) == (args.steps is None):
        print("error: exactly one of -q/--steps", file=sys.stderr)
        return EXIT_USAGE
    request = {
        "lang": "cypher" if args.query else "steps",
        "text": args.query,
        "params": json.loads(args.params),
        "explain": args.explain,
    }
    if args.steps:
        request["steps"] = json.loads(args.steps)
    if args.backend:
        request["backend"] = args.backend
    if args.snapshot is not None:
        request["snapshot_version"] = args.snapshot
    response = session.query(request)
    if args.format == "json":
        print(json.dumps(response, indent=2))
    else:
        from .repl import format_table

        if args.explain and "plan" in response:
            print(json.dumps(response["plan"], indent=2))
        if "error" in response:
            print(f"error: {response['error']}", file=sys.stderr)
            return EXIT_QUERY
        print(format_table(response["columns"], response["rows"]))
    return EXIT_OK


def cmd_repl(args) -> int:
    from .repl import repl

    _profile, session = _session(args)
    repl(session)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .http import GraphServer

    profile, session = _session(args)
    port = args.port if args.port is not None else profile.port
    server = GraphServer(session, host=args.host, port=port)
    host, actual = server.address
    print(f"serving on http://{host}:{actual}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_analyze(args) -> int:
    from ..analytics import UNREACHED, bfs, pagerank

    _profile, session = _session(args)
    snap = session.store.snapshot_latest()
    lines = []
    if args.kernel == "pagerank":
        pr = pagerank(snap, damping=args.damping, tol=args.tol)
        lines.append("vtype,idx,score")
        for vt, idx, score in pr.items():
            name = session.schema.vertex_types[vt].name
            lines.append(f"{name},{idx},{score!r}")
    else:
        if not args.src_type or args.src_pk is None:
            print("error: bfs needs --src-type and --src-pk", file=sys.stderr)
            return EXIT_USAGE
        decl = session.schema.vertex_decl(args.src_type)
        from ..model import INT64

        key = (int(args.src_pk)
               if decl.property_dtype(decl.primary_key) == INT64
               else args.src_pk)
        src = snap.lookup_by_pk(args.src_type, key)
        res = bfs(snap, src)
        lines.append("vtype,idx,depth")
        for vt, decl_ in enumerate(session.schema.vertex_types):
            for v in snap.vertex_list(vt):
                d = res.depth_of(v)
                lines.append(f"{decl_.name},{v.idx},{d}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from . import bench

    kw = {}
    if args.vertices:
        kw["n_vertices"] = args.vertices
    if args.edges:
        kw["n_edges"] = args.edges
    if args.suite == "edge_scan":
        report = bench.bench_edge_scan(**kw)
    elif args.suite == "qps":
        if args.shards:
            kw["shard_counts"] = args.shards
        if args.queries:
            kw["queries_per_run"] = args.queries
        kw["mode"] = args.mode
        report = bench.bench_qps(**kw)
    elif args.suite == "rbo_cbo":
        report = bench.bench_rbo_cbo()
    elif args.suite == "grin_overhead":
        report = bench.bench_grin_overhead(**kw)
    else:
        return bench.run_acceptance()
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    handlers = {
        "load": cmd_load,
        "convert": cmd_convert,
        "catalog": cmd_catalog,
        "query": cmd_query,
        "repl": cmd_repl,
        "serve": cmd_serve,
        "analyze": cmd_analyze,
        "bench": cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except _QUERY_ERRORS as e:
        print(f"query error: {e}", file=sys.stderr)
        return EXIT_QUERY
    except FlexgraphError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_QUERY


if __name__ == "__main__":
    sys.exit(main())
