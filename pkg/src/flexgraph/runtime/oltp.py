"""Shared-nothing low-latency backend.

Each shard owns its vertex partition and processes its mailbox strictly
serially; a query travels as messages hopping from shard to shard (no
global barrier): the coordinator seeds SOURCE work at the owning shards,
every FLATMAP's outputs route directly to the next anchor's owner, and
SINK rows flow back to the coordinator, which runs any pipeline-breaker
suffix (sort/group/join/limit) locally.

Completion uses per-stage counting: each processed message reports
(stage, consumed=1, produced=k); stage s is complete when its counts match
and stage s-1 is complete, so production counts are final by induction.

Transports: 'threads' shares the store under the GIL (the default,
correct for mvcc snapshots); 'processes' forks shard workers for real
parallelism on static stores (the throughput benches).
"""

from __future__ import annotations

import itertools
import queue
import threading
import time
from typing import Dict, List, Optional, Tuple

from ..errors import ExecError
from ..ir.ops import FieldSchema
from ..retrieval import GraphSnapshot, GraphStore
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


class _Segments:
    """Prefix hop segments + coordinator suffix for one plan."""

    def __init__(self, plan: PhysicalPlan):
        if plan.backend != "oltp":
            raise ExecError("plan", "not an oltp plan")
        if any(isinstance(op, Exchange) for op in plan.ops):
            raise ExecError("plan", "EXCHANGE is forbidden in oltp plans")
        self.plan = plan
        split = len(plan.ops)
        for i, op in enumerate(plan.ops):
            if isinstance(op, BREAKERS):
                split = i
                break
        prefix = list(range(split))
        self.suffix: List[int] = list(range(split, len(plan.ops)))
        # hop boundaries: a flatmap whose anchor is not the current location
        self.segments: List[Tuple[List[int], Optional[str]]] = []
        current: List[int] = []
        location: Optional[str] = None
        for idx in prefix:
            op = plan.ops[idx]
            if isinstance(op, SourceP):
                current.append(idx)
                location = op.alias
                continue
            if isinstance(op, FlatMap) and op.in_alias != location:
                self.segments.append((current, op.in_alias))
                current = []
                location = op.in_alias
            current.append(idx)
        self.segments.append((current, None))

    def route_schema(self, seg_idx: int) -> FieldSchema:
        ops_idx = self.segments[seg_idx][0]
        return self.plan.schemas[ops_idx[-1]]


def _run_segment(plan: PhysicalPlan, ops_idx: List[int], rows: List[tuple],
                 snap: GraphSnapshot, params: dict, shard: int, shards: int,
                 counters: Dict[int, int]) -> List[tuple]:
    for idx in ops_idx:
        op = plan.ops[idx]
        counters[idx] = counters.get(idx, 0) + len(rows)
        schema_in = plan.schemas[idx - 1] if idx > 0 else FieldSchema(())
        if isinstance(op, SourceP):
            rows = interp.scan_rows(op, snap, params, shard=shard,
                                    shards=shards)
        elif isinstance(op, FlatMap):
            rows = interp.expand_rows(op, rows, schema_in, snap, params)
        elif isinstance(op, MapP):
            rows = (interp.from_edge_rows(op, rows, schema_in, snap)
                    if op.op == "from_edge"
                    else interp.project_rows(op, rows, schema_in, snap, params))
        elif isinstance(op, FilterP):
            rows = interp.filter_rows(op.pred, rows, schema_in, snap, params)
        elif isinstance(op, SinkP):
            pass
        else:
            raise ExecError(op.kind, "not executable on a shard")
    return rows


def _worker_loop(store, plans: Dict[str, "_Segments"], shard: int, shards: int,
                 inboxes, event_q) -> None:
    """One shard executor: strictly serial mailbox processing.

    Messages travel in batches: each drain cycle processes everything
    queued, then sends at most one message per destination shard and one
    event bundle to the coordinator, so transport costs amortize across
    concurrent queries."""
    snap_cache: Dict[int, GraphSnapshot] = {}
    inbox = inboxes[shard]
    stop = False
    drain_cap = 64  # keep cycles short so peers stay fed
    while not stop:
        batch = inbox.get()
        if batch is None:
            break
        work = list(batch)
        while len(work) < drain_cap:
            try:
                nxt = inbox.get_nowait()
            except queue.Empty:
                break
            if nxt is None:
                stop = True
                break
            work.extend(nxt)
        outbound: Dict[int, list] = {}
        events: list = []
        while work:
            qid, plan_name, seg_idx, version, params, rows = work.pop(0)
            segs = plans[plan_name]
            snap = snap_cache.get(version)
            if snap is None:
                snap = _open_snapshot(store, version)
                snap_cache[version] = snap
            try:
                ops_idx, route_alias = segs.segments[seg_idx]
                counters: Dict[int, int] = {}
                out = _run_segment(segs.plan, ops_idx, rows or [], snap,
                                   params, shard, shards, counters)
                if route_alias is None:
                    events.append((qid, seg_idx, 1, 0, out, counters, None))
                else:
                    schema = segs.route_schema(seg_idx)
                    pos = schema.index(route_alias)
                    buckets: Dict[int, List[tuple]] = {}
                    for row in out:
                        owner = interp._owner(snap, row[pos], shards)
                        buckets.setdefault(owner, []).append(row)
                    for owner, group in buckets.items():
                        item = (qid, plan_name, seg_idx + 1, version, params,
                                group)
                        if owner == shard:
                            work.append(item)  # local hop: no transport
                        else:
                            outbound.setdefault(owner, []).append(item)
                    events.append((qid, seg_idx, 1, len(buckets), None,
                                   counters, None))
            except Exception as e:  # surface to the coordinator
                events.append((qid, seg_idx, 1, 0, None, {}, repr(e)))
        for owner, items in outbound.items():
            inboxes[owner].put(items)
        if events:
            event_q.put(events)


def _open_snapshot(store, version: int) -> GraphSnapshot:
    if isinstance(store, GraphSnapshot):
        return store
    if store.capabilities().snapshot_versions:
        return store.snapshot_at(version)
    return store.snapshot_latest()


class _QueryState:
    __slots__ = ("nseg", "produced", "consumed", "rows", "counters", "done",
                 "error", "result", "t0", "params", "plan_name", "version")

    def __init__(self, nseg: int, seeds: int, params: dict, plan_name: str,
                 version: int):
        self.nseg = nseg
        self.produced = [0] * (nseg + 1)
        self.consumed = [0] * (nseg + 1)
        self.produced[0] = seeds
        self.rows: List[tuple] = []
        self.counters: Dict[int, int] = {}
        self.done = threading.Event()
        self.error: Optional[str] = None
        self.result: Optional[QueryResult] = None
        self.t0 = time.perf_counter()
        self.params = params
        self.plan_name = plan_name
        self.version = version

    def complete(self) -> bool:
        for s in range(self.nseg):
            if self.consumed[s] != self.produced[s]:
                return False
        return True


class OltpEngine:
    """Shard executors + coordinator; serves many concurrent queries."""

    def __init__(self, store, plans: Dict[str, PhysicalPlan], shards: int,
                 mode: str = "threads"):
        self.store = store
        self.shards = max(1, shards)
        self.mode = mode
        self.segments = {name: _Segments(plan) for name, plan in plans.items()}
        self._qid = itertools.count(1)
        self._states: Dict[int, _QueryState] = {}
        self._states_lock = threading.Lock()
        if mode == "threads":
            self._inboxes = [queue.Queue() for _ in range(self.shards)]
            self._event_q: "queue.Queue" = queue.Queue()
            self._workers = [
                threading.Thread(
                    target=_worker_loop,
                    args=(store, self.segments, w, self.shards, self._inboxes,
                          self._event_q),
                    daemon=True)
                for w in range(self.shards)
            ]
            for t in self._workers:
                t.start()
        elif mode == "processes":
            import multiprocessing as mp

            # fork shares the loaded store; Queue (with its feeder thread)
            # rather than SimpleQueue, whose put() blocks on a full pipe and
            # can deadlock two shards routing to each other under bursts
            ctx = mp.get_context("fork")
            self._inboxes = [ctx.Queue() for _ in range(self.shards)]
            self._event_q = ctx.Queue()
            self._workers = [
                ctx.Process(
                    target=_worker_loop,
                    args=(store, self.segments, w, self.shards, self._inboxes,
                          self._event_q),
                    daemon=True)
                for w in range(self.shards)
            ]
            for p in self._workers:
                p.start()
        else:
            raise ValueError(f"unknown oltp mode {mode!r}")
        self._collector = threading.Thread(target=self._collect, daemon=True)
        self._collector.start()

    # -- submission --

    def submit(self, plan_name: str, params: Optional[dict] = None,
               snapshot_version: Optional[int] = None) -> int:
        segs = self.segments[plan_name]
        params = params or {}
        if snapshot_version is None:
            snapshot_version = getattr(self.store, "committed_version", 0)
        src = segs.plan.ops[0]
        qid = next(self._qid)
        if isinstance(src, SourceP) and src.pk is not None:
            snap = _open_snapshot(self.store, snapshot_version)
            from ..errors import NotFound
            from ..ir.exprs import EvalContext, eval_expr

            try:
                key = eval_expr(src.pk, (),
                                EvalContext(FieldSchema(()), snap, params))
                v = snap.lookup_by_pk(src.vtype, key)
                owners = [interp._owner(snap, v, self.shards)]
            except NotFound:
                owners = [0]  # still runs; scan finds nothing
        else:
            owners = list(range(self.shards))
        state = _QueryState(len(segs.segments), len(owners), params, plan_name,
                            snapshot_version)
        with self._states_lock:
            self._states[qid] = state
        for w in owners:
            self._inboxes[w].put([(qid, plan_name, 0, snapshot_version,
                                   params, None)])
        return qid

    def result(self, qid: int, timeout: Optional[float] = None) -> QueryResult:
        state = self._states[qid]
        if not state.done.wait(timeout):
            raise ExecError("oltp", f"query {qid} timed out")
        with self._states_lock:
            self._states.pop(qid, None)
        if state.error:
            raise ExecError("oltp", state.error)
        return state.result

    def run(self, plan_name: str, params: Optional[dict] = None,
            snapshot_version: Optional[int] = None,
            timeout: Optional[float] = 60.0) -> QueryResult:
        return self.result(self.submit(plan_name, params, snapshot_version),
                           timeout)

    # -- coordinator --

    def _collect(self) -> None:
        while True:
            ev_batch = self._event_q.get()
            if ev_batch is None:
                break
            for ev in ev_batch:
                qid, seg_idx, consumed, produced, rows, counters, error = ev
                with self._states_lock:
                    state = self._states.get(qid)
                if state is None:
                    continue
                state.consumed[seg_idx] += consumed
                state.produced[seg_idx + 1] += produced
                if rows:
                    state.rows.extend(rows)
                for k, v in counters.items():
                    state.counters[k] = state.counters.get(k, 0) + v
                if error and state.error is None:
                    state.error = error
                if not state.complete():
                    continue
                if state.error:
                    state.done.set()
                    continue
                try:
                    state.result = self._finish(state)
                except Exception as e:
                    state.error = repr(e)
                state.done.set()

    def _finish(self, state: _QueryState) -> QueryResult:
        """Run the coordinator suffix (breakers plus anything after them)
        single-threaded over the query's pinned snapshot."""
        segs = self.segments[state.plan_name]
        plan = segs.plan
        rows = state.rows
        snap = _open_snapshot(self.store, state.version)
        for idx in segs.suffix:
            op = plan.ops[idx]
            schema_in = plan.schemas[idx - 1]
            state.counters[idx] = state.counters.get(idx, 0) + len(rows)
            if isinstance(op, SortP):
                rows = interp.sort_rows(op, rows, schema_in, snap, state.params)
            elif isinstance(op, GroupByP):
                rows = interp.group_rows(op, rows, schema_in, snap, state.params)
            elif isinstance(op, LimitP):
                rows = rows[:op.n]
            elif isinstance(op, JoinP):
                from .batch import execute_batch

                right = execute_batch(op.right, snap, shards=1,
                                      params=state.params)
                rows = interp.join_rows(op, rows, schema_in, right.rows,
                                        op.right.out_schema)
            elif isinstance(op, FlatMap):
                rows = interp.expand_rows(op, rows, schema_in, snap,
                                          state.params)
            elif isinstance(op, FilterP):
                rows = interp.filter_rows(op.pred, rows, schema_in, snap,
                                          state.params)
            elif isinstance(op, MapP):
                rows = (interp.from_edge_rows(op, rows, schema_in, snap)
                        if op.op == "from_edge"
                        else interp.project_rows(op, rows, schema_in, snap,
                                                 state.params))
            elif isinstance(op, SinkP):
                pass
            else:
                raise ExecError(op.kind, "unexpected suffix op")
        out_schema = plan.out_schema
        elapsed = time.perf_counter() - state.t0
        return QueryResult(
            columns=[f.name for f in out_schema.fields],
            dtypes=[repr(f.dtype) for f in out_schema.fields],
            rows=rows,
            stats={
                "latency_ms": elapsed * 1000.0,
                "rows_emitted": len(rows),
                "intermediate_tuples": sum(state.counters.values()),
                "shards": self.shards,
                "backend": "oltp",
            },
        )

    def close(self) -> None:
        for inbox in self._inboxes:
            inbox.put(None)
        if self.mode == "processes":
            for p in self._workers:
                p.join(timeout=5)
                if p.is_alive():
                    p.terminate()
        else:
            for t in self._workers:
                t.join(timeout=5)
        self._event_q.put(None)
        self._collector.join(timeout=5)

    def __enter__(self) -> "OltpEngine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def execute_oltp(plan: PhysicalPlan, store, shards: Optional[int] = None,
                 params: Optional[dict] = None,
                 snapshot_version: Optional[int] = None) -> QueryResult:
    """One-shot convenience wrapper around a transient engine."""
    shards = shards or plan.shards or 1
    with OltpEngine(store, {"q": plan}, shards) as engine:
        return engine.run("q", params, snapshot_version)
