"""The validated logical DAG: id-indexed ops, typed connections, schemas."""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from ..errors import DagCycleError, PlanTypeError
from ..model import PropertyGraphSchema
from .ops import FieldSchema, GetVertex, Join, LogicalOp, Match, Sink


class LogicalDag:
    """Ops plus dataflow edges; every connection is schema-checked and the
    output schema of each op is fully inferred after each mutation."""

    def __init__(self, gschema: PropertyGraphSchema):
        self.gschema = gschema
        self.ops: Dict[int, LogicalOp] = {}
        self.edges: List[Tuple[int, int]] = []
        self._next_id = 0
        self._schemas: Dict[int, FieldSchema] = {}

    # -- construction --

    def add(self, op: LogicalOp) -> int:
        oid = self._next_id
        self._next_id += 1
        self.ops[oid] = op
        self._schemas.pop(oid, None)
        if not op.required_aliases() and self._is_source_kind(op):
            self._schemas[oid] = op.infer((), self.gschema)
        return oid

    @staticmethod
    def _is_source_kind(op: LogicalOp) -> bool:
        if isinstance(op, GetVertex) and op.scan is not None:
            return True
        if isinstance(op, Match) and not op.bound:
            return True
        return False

    def connect(self, producer: int, consumer: int) -> None:
        if producer not in self.ops or consumer not in self.ops:
            raise PlanTypeError(str((producer, consumer)), expected="known op ids")
        if self._reaches(consumer, producer):
            raise DagCycleError(f"{producer}->{consumer} closes a cycle")
        self.edges.append((producer, consumer))
        try:
            self._recompute()
        except Exception:
            self.edges.pop()
            self._recompute()
            raise

    def chain(self, *ops: LogicalOp) -> List[int]:
        """Add ops and connect them linearly; returns their ids."""
        ids = [self.add(op) for op in ops]
        for a, b in zip(ids, ids[1:]):
            self.connect(a, b)
        return ids

    def predecessors(self, oid: int) -> List[int]:
        return [p for p, c in self.edges if c == oid]

    def successors(self, oid: int) -> List[int]:
        return [c for p, c in self.edges if p == oid]

    def _reaches(self, start: int, goal: int) -> bool:
        stack = [start]
        seen = set()
        while stack:
            cur = stack.pop()
            if cur == goal:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self.successors(cur))
        return False

    def topo_order(self) -> List[int]:
        indeg = {oid: 0 for oid in self.ops}
        for _p, c in self.edges:
            indeg[c] += 1
        ready = sorted(oid for oid, d in indeg.items() if d == 0)
        out: List[int] = []
        while ready:
            cur = ready.pop(0)
            out.append(cur)
            for c in self.successors(cur):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
            ready.sort()
        if len(out) != len(self.ops):
            raise DagCycleError("cycle detected")
        return out

    def _recompute(self) -> None:
        self._schemas = {}
        for oid in self.topo_order():
            op = self.ops[oid]
            preds = self.predecessors(oid)
            if not preds and not self._is_source_kind(op):
                continue  # not wired yet; validate() insists on sources
            if len(preds) < op.min_inputs and not self._is_source_kind(op):
                continue  # partially wired (e.g. one side of a JOIN)
            if any(p not in self._schemas for p in preds):
                continue  # downstream of an unwired op
            inputs = tuple(self._schemas[p] for p in preds)
            need = op.required_aliases()
            if preds:
                avail = set()
                for s in inputs:
                    avail |= set(s.names())
                missing = need - avail
                if missing:
                    raise PlanTypeError(sorted(missing)[0],
                                        expected="provided by an input")
            self._schemas[oid] = op.infer(inputs, self.gschema)

    def schema_of(self, oid: int) -> FieldSchema:
        if oid not in self._schemas:
            self._recompute()
        if oid not in self._schemas:
            raise PlanTypeError(self.ops[oid].kind, expected="a wired op")
        return self._schemas[oid]

    # -- validation --

    def sink_id(self) -> int:
        sinks = [oid for oid, op in self.ops.items() if isinstance(op, Sink)]
        if len(sinks) != 1:
            raise PlanTypeError("<sink>", expected="exactly one SINK",
                                found=str(len(sinks)))
        return sinks[0]

    def validate(self) -> None:
        self.topo_order()
        self._recompute()
        sink = self.sink_id()
        sources = [oid for oid in self.ops if not self.predecessors(oid)]
        for s in sources:
            op = self.ops[s]
            if not self._is_source_kind(op):
                raise PlanTypeError(op.kind, expected="a source scan or match")
        reachable = set(sources)
        frontier = list(sources)
        while frontier:
            cur = frontier.pop()
            for c in self.successors(cur):
                if c not in reachable:
                    reachable.add(c)
                    frontier.append(c)
        if set(self.ops) - reachable:
            raise PlanTypeError("<dag>", expected="all ops reachable from a source")
        if sink not in reachable:
            raise PlanTypeError("<sink>", expected="reachable sink")

    # -- serialization --

    def to_json(self) -> dict:
        return {
            "ops": [dict(self.ops[oid].to_json(), id=oid)
                    for oid in sorted(self.ops)],
            "edges": sorted([p, c] for p, c in self.edges),
        }

    def clone(self) -> "LogicalDag":
        fresh = LogicalDag(self.gschema)
        fresh.ops = dict(self.ops)
        fresh.edges = list(self.edges)
        fresh._next_id = self._next_id
        fresh._recompute()
        return fresh

    def single_consumer(self, oid: int) -> Optional[int]:
        succ = self.successors(oid)
        return succ[0] if len(succ) == 1 else None

    # -- surgery (optimizer rewrites) --

    def replace(self, oid: int, op: LogicalOp) -> None:
        self.ops[oid] = op
        self._recompute()

    def remove_unary(self, oid: int) -> None:
        """Drop a pass-through op, bridging its producer to its consumers."""
        preds = self.predecessors(oid)
        succs = self.successors(oid)
        if len(preds) > 1:
            raise PlanTypeError(self.ops[oid].kind, expected="one input")
        self.edges = [(p, c) for p, c in self.edges if oid not in (p, c)]
        for c in succs:
            for p in preds:
                self.edges.append((p, c))
        del self.ops[oid]
        self._recompute()

    def splice(self, oid: int, ops_chain: List[LogicalOp]) -> List[int]:
        """Replace one op with a linear chain (first inherits the
        predecessors, last feeds the successors)."""
        preds = self.predecessors(oid)
        succs = self.successors(oid)
        self.edges = [(p, c) for p, c in self.edges if oid not in (p, c)]
        del self.ops[oid]
        ids = []
        for op in ops_chain:
            nid = self._next_id
            self._next_id += 1
            self.ops[nid] = op
            ids.append(nid)
        for a, b in zip(ids, ids[1:]):
            self.edges.append((a, b))
        for p in preds:
            self.edges.append((p, ids[0]))
        for c in succs:
            self.edges.append((ids[-1], c))
        self._recompute()
        return ids
