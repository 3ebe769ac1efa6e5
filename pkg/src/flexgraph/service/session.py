"""A loaded stack: store + catalog + compile/execute entry points.

The session realizes the query request/response contract used by the CLI,
the REPL, and the HTTP layer, so all of them return byte-identical rows
for the same request.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from ..errors import ConfigError, Diagnostic, ExecError, FlexgraphError
from ..frontends import StepChain, cypher_parse, steps_to_dag
from ..ir import LogicalDag
from ..model import (
    EdgeRef,
    PathValue,
    PropertyGraphSchema,
    Value,
    VertexRef,
    schema_from_json,
    schema_to_json,
)
from ..optimizer import Catalog, catalog_build, optimize
from ..runtime import apply_updates, execute_batch, execute_oltp, lower
from ..stores import (
    MvccStore,
    build_immutable,
    build_store_from_archive,
    load_csv_tables,
    open_archive,
)
from .profile import Profile


def encode_value(v: Value, schema: PropertyGraphSchema):
    if v is None or isinstance(v, (bool, int, float, str)):
        return v
    if isinstance(v, VertexRef):
        return {"kind": "vertex",
                "type": schema.vertex_types[v.vtype].name, "idx": v.idx}
    if isinstance(v, EdgeRef):
        return {"kind": "edge", "type": schema.edge_types[v.etype].name,
                "src": encode_value(v.src, schema),
                "dst": encode_value(v.dst, schema), "row": v.row}
    if isinstance(v, PathValue):
        return {"kind": "path",
                "elements": [encode_value(e, schema) for e in v.elements],
                "hops": v.hops}
    if isinstance(v, list):
        return [encode_value(x, schema) for x in v]
    raise ExecError("encode", f"unencodable value {v!r}")


def _load_schema_for_csv(spec_path: Path) -> PropertyGraphSchema:
    doc = json.loads(spec_path.read_text())
    schema_ref = doc.get("schema")
    if schema_ref is None:
        raise ConfigError(f"{spec_path}: csv spec needs a \"schema\" path")
    return schema_from_json(json.loads((spec_path.parent / schema_ref).read_text()))


def build_store(profile: Profile):
    if profile.store_kind == "archive":
        if profile.archive_dir is None:
            raise ConfigError("archive store needs store.source.archive_dir")
        return open_archive(profile.base_dir / profile.archive_dir,
                            shards=profile.shards)
    if profile.csv_spec is not None:
        spec_path = profile.base_dir / profile.csv_spec
        schema = _load_schema_for_csv(spec_path)
        vtabs, etabs = load_csv_tables(spec_path, schema)
        if profile.store_kind == "immutable":
            return build_immutable(schema, vtabs, etabs, shards=profile.shards)
        store = MvccStore(schema, shards=profile.shards)
        store.bulk_load(vtabs, etabs)
        return store
    return build_store_from_archive(profile.base_dir / profile.archive_dir,
                                    profile.store_kind, shards=profile.shards)


class GraphSession:
    def __init__(self, store, catalog: Optional[Catalog] = None,
                 engine: str = "batch", shards: int = 1,
                 allow_updates: Optional[bool] = None):
        self.store = store
        self.schema = store.schema
        self.catalog = catalog
        self.engine = engine
        self.shards = max(1, shards)
        if allow_updates is None:
            allow_updates = isinstance(store, MvccStore)
        self.allow_updates = allow_updates

    @staticmethod
    def from_profile(profile: Profile) -> "GraphSession":
        store = build_store(profile)
        catalog = None
        if profile.catalog_path:
            path = profile.base_dir / profile.catalog_path
            if path.exists():
                catalog = Catalog.from_json(json.loads(path.read_text()))
        if catalog is None and profile.build_catalog:
            catalog = catalog_build(store.snapshot_latest(), profile.catalog_k)
        return GraphSession(store, catalog, profile.engine, profile.shards,
                            profile.allow_updates)

    # -- compile --

    def parse(self, request: dict) -> LogicalDag:
        lang = request.get("lang", "cypher")
        if lang == "cypher":
            text = request.get("text") or request.get("query")
            if not isinstance(text, str):
                raise Diagnostic(1, 1, "request.text must be a string")
            return cypher_parse(text, self.schema)
        if lang == "steps":
            steps = request.get("steps")
            if not isinstance(steps, list):
                raise Diagnostic(0, 0, "request.steps must be a list")
            chain = StepChain()
            for item in steps:
                if not (isinstance(item, list) and item
                        and isinstance(item[0], str)):
                    raise Diagnostic(0, 0, f"bad step {item!r}")
                name, *args = item
                method = {"in": "in_"}.get(name, name)
                if not hasattr(chain, method) or method.startswith("_"):
                    raise Diagnostic(0, 0, f"unknown step {name!r}")
                getattr(chain, method)(*args)
            return steps_to_dag(chain, self.schema)
        raise Diagnostic(0, 0, f"unknown lang {lang!r}")

    def snapshot(self, version: Optional[int] = None):
        if version is not None:
            return self.store.snapshot_at(version)
        return self.store.snapshot_latest()

    # -- execute --

    def query(self, request: dict) -> dict:
        explain = bool(request.get("explain"))
        backend = request.get("backend") or self.engine
        params = request.get("params") or {}
        dag = self.parse(request)
        plans: dict = {}
        if explain:
            plans["logical"] = dag.to_json()
        shards = self.shards
        optimized, info = optimize(dag, self.catalog, shards=shards,
                                   use_cbo=self.catalog is not None)
        if explain:
            plans["optimized"] = dict(optimized.to_json(), **info)
        physical = lower(optimized, backend, shards)
        if explain:
            plans["physical"] = physical.to_json()
        snap_version = request.get("snapshot_version")
        try:
            if backend == "oltp":
                result = execute_oltp(physical, self.store, shards, params,
                                      snapshot_version=snap_version)
            else:
                snap = self.snapshot(snap_version)
                result = execute_batch(physical, snap, shards, params)
        except FlexgraphError as e:
            if explain:
                return {"error": str(e), "plan": plans}
            raise
        response = {
            "columns": result.columns,
            "dtypes": result.dtypes,
            "rows": [[encode_value(v, self.schema) for v in row]
                     for row in result.rows],
            "stats": result.stats,
        }
        if explain:
            response["plan"] = plans
        return response

    def update(self, ops: list) -> int:
        if not self.allow_updates or not isinstance(self.store, MvccStore):
            raise ConfigError("store is read-only")
        return apply_updates(self.store, ops)

    def schema_json(self) -> dict:
        return schema_to_json(self.schema)

    def catalog_stats(self) -> dict:
        if self.catalog is None:
            return {"k": None, "pattern_count": 0, "sample": {}}
        sample = dict(sorted(self.catalog.entries.items())[:10])
        return {"k": self.catalog.k,
                "pattern_count": len(self.catalog.entries),
                "sample": sample}
