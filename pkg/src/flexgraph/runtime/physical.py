"""Physical operators and plan lowering.

Lowering maps the optimized logical DAG one-to-one onto general-purpose
dataflow operators: the entry scan becomes SOURCE, expansions become
FLATMAP (one-to-many), endpoint extraction and projection become MAP,
SELECT becomes FILTER, ORDER/GROUP become the pipeline breakers SORT and
GROUPBY. The batch backend additionally places EXCHANGE in front of
flatmaps whose anchor vertex may live on another shard and in front of
pipeline breakers; the low-latency backend forbids EXCHANGE and instead
routes messages per hop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..errors import UnloweredOp
from ..ir import (
    ExpandEdge,
    ExpandVertex,
    Expr,
    GetVertex,
    Group,
    Join,
    LimitOp,
    LogicalDag,
    Match,
    Order,
    PathExpand,
    Project,
    Select,
    Sink,
)
from ..ir.ops import FieldSchema
from ..model import Direction


@dataclass(frozen=True)
class PhysicalOp:
    kind = "?"

    def to_json(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class SourceP(PhysicalOp):
    alias: str
    vtype: Optional[int]
    pred: Optional[Expr]
    pk: Optional[Expr]
    kind = "SOURCE"

    def to_json(self):
        return {"kind": self.kind, "alias": self.alias, "vtype": self.vtype,
                "pk": repr(self.pk) if self.pk else None,
                "pred": repr(self.pred) if self.pred else None}


@dataclass(frozen=True)
class FlatMap(PhysicalOp):
    """expand_edge | expand_vertex | path."""

    op: str
    in_alias: str
    direction: Direction
    etype: int
    out_alias: str
    pred: Optional[Expr] = None       # edge predicate
    vpred: Optional[Expr] = None      # fused endpoint predicate
    min_hops: int = 0
    max_hops: int = 0
    kind = "FLATMAP"

    def to_json(self):
        out = {"kind": self.kind, "op": self.op, "in": self.in_alias,
               "out": self.out_alias, "etype": self.etype,
               "direction": self.direction.value}
        if self.pred is not None:
            out["pred"] = repr(self.pred)
        if self.vpred is not None:
            out["vpred"] = repr(self.vpred)
        if self.op == "path":
            out["hops"] = [self.min_hops, self.max_hops]
        return out


@dataclass(frozen=True)
class MapP(PhysicalOp):
    """from_edge endpoint extraction or projection."""

    op: str  # from_edge | project
    edge_alias: Optional[str] = None
    which: str = "other"
    anchor: Optional[str] = None
    out_alias: Optional[str] = None
    items: Tuple[Tuple[Expr, str], ...] = ()
    kind = "MAP"

    def to_json(self):
        if self.op == "from_edge":
            return {"kind": self.kind, "op": self.op, "edge": self.edge_alias,
                    "which": self.which, "out": self.out_alias}
        return {"kind": self.kind, "op": self.op,
                "items": [{"expr": repr(e), "as": n} for e, n in self.items]}


@dataclass(frozen=True)
class FilterP(PhysicalOp):
    pred: Expr
    kind = "FILTER"

    def to_json(self):
        return {"kind": self.kind, "pred": repr(self.pred)}


@dataclass(frozen=True)
class SortP(PhysicalOp):
    keys: Tuple[Tuple[Expr, bool], ...]
    limit: Optional[int] = None
    kind = "SORT"

    def to_json(self):
        return {"kind": self.kind, "limit": self.limit,
                "keys": [{"expr": repr(e), "asc": a} for e, a in self.keys]}


@dataclass(frozen=True)
class GroupByP(PhysicalOp):
    keys: Tuple[Tuple[Expr, str], ...]
    aggs: Tuple[Tuple[object, str], ...]
    kind = "GROUPBY"

    def to_json(self):
        return {"kind": self.kind,
                "keys": [n for _e, n in self.keys],
                "aggs": [n for _a, n in self.aggs]}


@dataclass(frozen=True)
class JoinP(PhysicalOp):
    on: Tuple[str, ...]
    right: "PhysicalPlan" = None
    kind = "JOIN"

    def to_json(self):
        return {"kind": self.kind, "on": list(self.on),
                "right": self.right.to_json() if self.right else None}


@dataclass(frozen=True)
class Exchange(PhysicalOp):
    route: str  # "shard" | "gather"
    alias: Optional[str] = None
    kind = "EXCHANGE"

    def to_json(self):
        return {"kind": self.kind, "route": self.route, "alias": self.alias}


@dataclass(frozen=True)
class LimitP(PhysicalOp):
    n: int
    kind = "LIMIT"

    def to_json(self):
        return {"kind": self.kind, "n": self.n}


@dataclass(frozen=True)
class SinkP(PhysicalOp):
    kind = "SINK"


BREAKERS = (SortP, GroupByP, JoinP, LimitP)


@dataclass
class PhysicalPlan:
    ops: List[PhysicalOp]
    backend: str  # batch | oltp
    shards: int
    schemas: List[FieldSchema] = field(default_factory=list)  # output of each op

    def to_json(self) -> dict:
        return {"backend": self.backend, "shards": self.shards,
                "ops": [op.to_json() for op in self.ops]}

    @property
    def out_schema(self) -> FieldSchema:
        return self.schemas[-1]


@dataclass
class QueryResult:
    columns: List[str]
    dtypes: List[str]
    rows: List[tuple]
    stats: dict

    def to_json(self) -> dict:
        return {"columns": self.columns, "dtypes": self.dtypes,
                "rows": [list(r) for r in self.rows], "stats": self.stats}


def _spine(dag: LogicalDag) -> List[int]:
    """Operator ids from source to sink along the left spine (JOIN right
    branches hang off separately)."""
    order: List[int] = []
    cur = dag.sink_id()
    while True:
        order.append(cur)
        preds = dag.predecessors(cur)
        if not preds:
            break
        cur = preds[0]
    order.reverse()
    return order


def lower(dag: LogicalDag, backend: str = "batch",
          shards: int = 1) -> PhysicalPlan:
    """Map the optimized DAG to physical operators; MATCH must be gone."""
    for op in dag.ops.values():
        if isinstance(op, Match):
            raise UnloweredOp("MATCH survived optimization")
    if backend not in ("batch", "oltp"):
        raise ValueError(f"unknown backend {backend!r}")

    spine = _spine(dag)
    ops: List[PhysicalOp] = []
    schemas: List[FieldSchema] = []
    partition_alias: Optional[str] = None
    gathered = backend == "oltp"  # oltp never inserts exchanges

    def emit(pop: PhysicalOp, schema: FieldSchema) -> None:
        ops.append(pop)
        schemas.append(schema)

    for oid in spine:
        op = dag.ops[oid]
        schema = dag.schema_of(oid)
        if isinstance(op, GetVertex) and op.scan is not None:
            if ops:
                raise UnloweredOp("mid-stream scan is not executable")
            emit(SourceP(op.out_alias, op.scan.vtype, op.scan.pred,
                         op.scan.pk), schema)
            partition_alias = op.out_alias
            if op.vpred is not None:
                emit(FilterP(op.vpred), schema)
            continue
        if isinstance(op, (ExpandEdge, ExpandVertex, PathExpand)):
            in_alias = op.in_alias
            if backend == "batch" and not gathered and shards > 1 \
                    and partition_alias != in_alias:
                emit(Exchange("shard", in_alias), schemas[-1])
                partition_alias = in_alias
            if isinstance(op, ExpandEdge):
                emit(FlatMap("expand_edge", in_alias, op.direction, op.etype,
                             op.out_alias, pred=op.pred), schema)
            elif isinstance(op, ExpandVertex):
                emit(FlatMap("expand_vertex", in_alias, op.direction,
                             op.etype, op.out_alias, pred=op.edge_pred,
                             vpred=op.vpred), schema)
            else:
                emit(FlatMap("path", in_alias, op.direction, op.etype,
                             op.out_alias, min_hops=op.min_hops,
                             max_hops=op.max_hops), schema)
            continue
        if isinstance(op, GetVertex) and op.from_edge is not None:
            emit(MapP("from_edge", edge_alias=op.from_edge.edge_alias,
                      which=op.from_edge.which, anchor=op.from_edge.anchor,
                      out_alias=op.out_alias), schema)
            if op.vpred is not None:
                emit(FilterP(op.vpred), schema)
            continue
        if isinstance(op, Project):
            emit(MapP("project", items=op.items), schema)
            continue
        if isinstance(op, Select):
            emit(FilterP(op.pred), schema)
            continue
        if isinstance(op, (Order, Group, Join, LimitOp)):
            if backend == "batch" and not gathered and shards > 1:
                emit(Exchange("gather"), schemas[-1] if schemas else schema)
            gathered = True
            if isinstance(op, Order):
                emit(SortP(op.keys, op.limit), schema)
            elif isinstance(op, Group):
                emit(GroupByP(op.keys, op.aggs), schema)
            elif isinstance(op, LimitOp):
                emit(LimitP(op.n), schema)
            else:
                preds = dag.predecessors(oid)
                right_plan = _lower_branch(dag, preds[1], backend)
                emit(JoinP(op.on, right_plan), schema)
            continue
        if isinstance(op, Sink):
            emit(SinkP(), schema)
            continue
        raise UnloweredOp(f"no physical mapping for {op.kind}")
    return PhysicalPlan(ops, backend, shards, schemas)


def _lower_branch(dag: LogicalDag, top: int, backend: str) -> PhysicalPlan:
    """Lower a JOIN's right input as an independent single-shard sub-plan."""
    sub_ids: List[int] = []
    cur = top
    while True:
        sub_ids.append(cur)
        preds = dag.predecessors(cur)
        if not preds:
            break
        cur = preds[0]
    sub_ids.reverse()
    branch = LogicalDag(dag.gschema)
    branch.ops = {i: dag.ops[i] for i in sub_ids}
    branch.edges = [(a, b) for a, b in zip(sub_ids, sub_ids[1:])]
    branch._next_id = max(sub_ids) + 1
    sink_id = branch._next_id
    branch.ops[sink_id] = Sink()
    branch._next_id += 1
    branch.edges.append((sub_ids[-1], sink_id))
    branch._recompute()
    return lower(branch, backend="batch", shards=1)
