"""Batched dataflow backend: one worker per shard, stages separated by
EXCHANGE, pipeline breakers after a gather. Result multisets are
independent of the shard count; intermediate-tuple stats are deterministic
for a fixed plan and shard count."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional

from ..errors import ExecError, ParamUnbound
from ..ir.ops import FieldSchema
from ..retrieval import GraphSnapshot
from . import interp
from .physical import (
    BREAKERS,
    Exchange,
    FilterP,
    FlatMap,
    GroupByP,
    JoinP,
    LimitP,
    MapP,
    PhysicalPlan,
    QueryResult,
    SinkP,
    SortP,
    SourceP,
)

BATCH_ROWS = 1024


class _Stats:
    def __init__(self):
        self.rows_in: Dict[int, int] = {}
        self.seconds: Dict[int, float] = {}

    def count(self, op_idx: int, n: int, secs: float) -> None:
        self.rows_in[op_idx] = self.rows_in.get(op_idx, 0) + n
        self.seconds[op_idx] = self.seconds.get(op_idx, 0.0) + secs


def _apply_streaming(plan: PhysicalPlan, idx: int, rows: List[tuple],
                     snap: GraphSnapshot, params: dict,
                     stats: _Stats) -> List[tuple]:
    op = plan.ops[idx]
    schema_in = plan.schemas[idx - 1] if idx > 0 else FieldSchema(())
    t0 = time.perf_counter()
    n_in = len(rows)
    if isinstance(op, FlatMap):
        out = interp.expand_rows(op, rows, schema_in, snap, params)
    elif isinstance(op, MapP):
        if op.op == "from_edge":
            out = interp.from_edge_rows(op, rows, schema_in, snap)
        else:
            out = interp.project_rows(op, rows, schema_in, snap, params)
    elif isinstance(op, FilterP):
        out = interp.filter_rows(op.pred, rows, schema_in, snap, params)
    elif isinstance(op, SinkP):
        out = rows
    else:
        raise ExecError(op.kind, "not a streaming op")
    stats.count(idx, n_in, time.perf_counter() - t0)
    return out


def execute_batch(plan: PhysicalPlan, snap: GraphSnapshot,
                  shards: Optional[int] = None,
                  params: Optional[dict] = None) -> QueryResult:
    if plan.backend != "batch":
        raise ExecError("plan", "not a batch plan")
    shards = shards or plan.shards or 1
    params = params or {}
    _check_params(plan, params)
    t_start = time.perf_counter()
    stats = _Stats()

    # split the spine into stages at exchanges / breakers
    stages: List[tuple] = []  # ("stream", [op idx...]) | ("exchange", idx) | ("breaker", idx)
    current: List[int] = []
    for i, op in enumerate(plan.ops):
        if isinstance(op, Exchange):
            if current:
                stages.append(("stream", current))
                current = []
            stages.append(("exchange", i))
        elif isinstance(op, BREAKERS):
            if current:
                stages.append(("stream", current))
                current = []
            stages.append(("breaker", i))
        else:
            current.append(i)
    if current:
        stages.append(("stream", current))

    src = plan.ops[0]
    assert isinstance(src, SourceP)
    t0 = time.perf_counter()
    per_worker: List[List[tuple]] = [
        interp.scan_rows(src, snap, params, shard=w, shards=shards)
        for w in range(shards)
    ]
    stats.count(0, 0, time.perf_counter() - t0)
    gathered = False

    def run_stream(ops_idx: List[int], rows: List[tuple]) -> List[tuple]:
        for idx in ops_idx:
            rows = _apply_streaming(plan, idx, rows, snap, params, stats)
        return rows

    pool = ThreadPoolExecutor(max_workers=shards) if shards > 1 else None
    try:
        for kind, payload in stages:
            if kind == "stream":
                ops_idx = [i for i in payload if i != 0]
                if not ops_idx:
                    continue
                if gathered:
                    per_worker = [run_stream(ops_idx, per_worker[0])]
                elif pool is not None:
                    per_worker = list(pool.map(
                        lambda rows: run_stream(ops_idx, rows), per_worker))
                else:
                    per_worker = [run_stream(ops_idx, per_worker[0])]
            elif kind == "exchange":
                op = plan.ops[payload]
                n = sum(len(r) for r in per_worker)
                t0 = time.perf_counter()
                if op.route == "gather" or gathered:
                    merged: List[tuple] = []
                    for rows in per_worker:
                        merged.extend(rows)
                    per_worker = [merged]
                    gathered = True
                else:
                    schema_in = plan.schemas[payload - 1]
                    pos = schema_in.index(op.alias)
                    buckets: List[List[tuple]] = [[] for _ in range(shards)]
                    for rows in per_worker:
                        for row in rows:
                            v = row[pos]
                            buckets[interp._owner(snap, v, shards)].append(row)
                    per_worker = buckets
                stats.count(payload, n, time.perf_counter() - t0)
            else:  # breaker (implicitly gathered when single worker)
                op = plan.ops[payload]
                merged = []
                for rows in per_worker:
                    merged.extend(rows)
                gathered = True
                schema_in = plan.schemas[payload - 1]
                t0 = time.perf_counter()
                n = len(merged)
                if isinstance(op, SortP):
                    merged = interp.sort_rows(op, merged, schema_in, snap, params)
                elif isinstance(op, GroupByP):
                    merged = interp.group_rows(op, merged, schema_in, snap, params)
                elif isinstance(op, LimitP):
                    merged = merged[:op.n]
                else:  # join
                    right = execute_batch(op.right, snap, shards=1,
                                          params=params)
                    stats.rows_in["join_right"] = \
                        stats.rows_in.get("join_right", 0) \
                        + right.stats["intermediate_tuples"]
                    merged = interp.join_rows(
                        op, merged, schema_in,
                        right.rows, op.right.out_schema)
                stats.count(payload, n, time.perf_counter() - t0)
                per_worker = [merged]
    finally:
        if pool is not None:
            pool.shutdown()

    final: List[tuple] = []
    for rows in per_worker:
        final.extend(rows)
    out_schema = plan.out_schema
    elapsed = time.perf_counter() - t_start
    intermediate = sum(v for k, v in stats.rows_in.items())
    return QueryResult(
        columns=[f.name for f in out_schema.fields],
        dtypes=[repr(f.dtype) for f in out_schema.fields],
        rows=final,
        stats={
            "latency_ms": elapsed * 1000.0,
            "rows_emitted": len(final),
            "intermediate_tuples": intermediate,
            "per_op": [
                {"op": plan.ops[i].kind, "rows_in": stats.rows_in.get(i, 0),
                 "seconds": round(stats.seconds.get(i, 0.0), 6)}
                for i in range(len(plan.ops))
            ],
            "shards": shards,
            "backend": "batch",
        },
    )


def _check_params(plan: PhysicalPlan, params: dict) -> None:
    from ..ir.exprs import expr_params

    need = set()
    for op in plan.ops:
        for attr in ("pred", "vpred", "pk"):
            e = getattr(op, attr, None)
            if e is not None:
                need |= expr_params(e)
        for e, _n in getattr(op, "items", ()) or ():
            need |= expr_params(e)
        for e, _a in getattr(op, "keys", ()) or ():
            need |= expr_params(e)
        for a, _n in getattr(op, "aggs", ()) or ():
            need |= expr_params(a)
    missing = need - set(params)
    if missing:
        raise ParamUnbound(sorted(missing)[0])
