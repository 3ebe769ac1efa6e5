"""Cost-based match-order search.

Cost of a plan = sum of frequency estimates of every prefix subpattern,
including the full pattern. Plans are canonicalized: after each new vertex
joins, every uncovered pattern edge inside the bound set closes
immediately (cheapest-estimate expansion edge first, the rest in a fixed
lexicographic order), so a plan is fully determined by its vertex order.
The DP over connected vertex subsets is therefore exact under the cost
model; the exhaustive enumerator in tests walks the same canonical form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

from ..ir import PatternEdge, PatternGraph
from ..model import PropertyGraphSchema
from .catalog import Catalog, freq_estimate

DP_MAX_VERTICES = 8


@dataclass(frozen=True)
class ExpandStep:
    from_alias: str
    pedge: PatternEdge
    to_alias: str
    kind: str  # "new" | "close"
    estimate: int  # prefix frequency estimate after this step


@dataclass
class MatchPlan:
    start: Optional[str]  # scan alias; None when the pattern starts bound
    bound: Tuple[str, ...]
    steps: List[ExpandStep]
    cost: int
    start_estimate: int

    def bind_order(self) -> List[str]:
        order = list(self.bound) if self.bound else [self.start]
        for s in self.steps:
            if s.kind == "new":
                order.append(s.to_alias)
        return order

    def to_json(self) -> dict:
        return {
            "start": self.start,
            "bound": list(self.bound),
            "cost": self.cost,
            "steps": [
                {"kind": s.kind, "from": s.from_alias, "to": s.to_alias,
                 "etype": s.pedge.etype, "direction": s.pedge.direction.value,
                 "estimate": s.estimate}
                for s in self.steps
            ],
        }


class _Search:
    def __init__(self, pattern: PatternGraph, catalog: Catalog,
                 schema: PropertyGraphSchema, bound: Tuple[str, ...]):
        self.pattern = pattern
        self.catalog = catalog
        self.schema = schema
        self.bound = tuple(sorted(bound))
        self.aliases = [v.alias for v in pattern.vertices]
        self.by_alias = {v.alias: v for v in pattern.vertices}
        self.edges = list(pattern.edges)
        self._est_cache: Dict[Tuple[FrozenSet[str], FrozenSet[int]], int] = {}
        self.adj: Dict[str, List[int]] = {a: [] for a in self.aliases}
        for i, e in enumerate(self.edges):
            self.adj[e.src].append(i)
            self.adj[e.dst].append(i)

    def est(self, vset: FrozenSet[str], eset: FrozenSet[int]) -> int:
        key = (vset, eset)
        hit = self._est_cache.get(key)
        if hit is None:
            sub = PatternGraph(
                tuple(v for v in self.pattern.vertices if v.alias in vset),
                tuple(self.edges[i] for i in sorted(eset)),
            )
            hit = freq_estimate(self.catalog, sub, self.schema,
                                tuple(a for a in self.bound if a in vset))
            self._est_cache[key] = hit
        return hit

    def induced(self, vset: FrozenSet[str]) -> FrozenSet[int]:
        return frozenset(i for i, e in enumerate(self.edges)
                         if e.src in vset and e.dst in vset)

    def edge_sort_key(self, i: int) -> tuple:
        e = self.edges[i]
        return (e.src, e.dst, e.etype, e.direction.value)

    def transition(self, base_v: FrozenSet[str], base_e: FrozenSet[int],
                   new_alias: str):
        """Cost and steps of binding new_alias next (closes applied in
        canonical order). Returns (delta_cost, steps)."""
        vset = base_v | {new_alias}
        incident = [i for i in self.adj[new_alias]
                    if self._other(i, new_alias) in base_v]
        if not incident and base_v:
            return None  # disconnected extension
        steps: List[ExpandStep] = []
        cost = 0
        eset = base_e
        if incident:
            # cheapest expansion edge first
            def first_est(i: int) -> tuple:
                return (self.est(vset, eset | {i}), self.edge_sort_key(i))

            expand = min(incident, key=first_est)
            rest = sorted((i for i in incident if i != expand),
                          key=self.edge_sort_key)
            order = [expand] + rest
            for pos, i in enumerate(order):
                eset = eset | {i}
                estimate = self.est(vset, eset)
                cost += estimate
                e = self.edges[i]
                frm = self._other(i, new_alias)
                steps.append(ExpandStep(frm, e, new_alias,
                                        "new" if pos == 0 else "close",
                                        estimate))
        return cost, steps, vset, eset

    def _other(self, edge_idx: int, alias: str) -> str:
        e = self.edges[edge_idx]
        return e.dst if e.src == alias else e.src

    # close edges already inside the initial bound set
    def initial(self, vset: FrozenSet[str]):
        eset: FrozenSet[int] = frozenset()
        steps: List[ExpandStep] = []
        cost = 0
        for i in sorted(self.induced(vset), key=self.edge_sort_key):
            eset = eset | {i}
            estimate = self.est(vset, eset)
            cost += estimate
            e = self.edges[i]
            steps.append(ExpandStep(e.src, e, e.dst, "close", estimate))
        return cost, steps, eset


def cbo_order(pattern: PatternGraph, catalog: Catalog,
              schema: PropertyGraphSchema,
              bound: Tuple[str, ...] = ()) -> MatchPlan:
    """Optimal vertex order under the cost model (exact subset DP up to 8
    vertices, greedy beyond)."""
    s = _Search(pattern, catalog, schema, bound)
    if len(s.aliases) > DP_MAX_VERTICES:
        return _greedy(s)
    return _dp(s)


def _dp(s: _Search) -> MatchPlan:
    # state: frozenset of bound aliases -> (cost, bind order, steps, eset)
    best: Dict[FrozenSet[str], tuple] = {}
    if s.bound:
        v0 = frozenset(s.bound)
        cost0, steps0, eset0 = s.initial(v0)
        best[v0] = (cost0, tuple(s.bound), steps0, eset0)
        start_alias = None
        start_est = 0
    else:
        for a in s.aliases:
            v0 = frozenset([a])
            est0 = s.est(v0, frozenset())
            cand = (est0, (a,), [], frozenset())
            cur = best.get(v0)
            if cur is None or (cand[0], cand[1]) < (cur[0], cur[1]):
                best[v0] = cand
        start_alias = "?"
        start_est = 0

    frontier = dict(best)
    n = len(s.aliases)
    while frontier:
        nxt: Dict[FrozenSet[str], tuple] = {}
        for vset, (cost, order, steps, eset) in frontier.items():
            if len(vset) == n:
                continue
            for a in s.aliases:
                if a in vset:
                    continue
                t = s.transition(vset, eset, a)
                if t is None:
                    continue
                dcost, dsteps, v2, e2 = t
                cand = (cost + dcost, order + (a,), steps + dsteps, e2)
                cur = best.get(v2)
                if cur is None or (cand[0], cand[1]) < (cur[0], cur[1]):
                    best[v2] = cand
                    nxt[v2] = cand
        frontier = nxt

    full = frozenset(s.aliases)
    cost, order, steps, _eset = best[full]
    if s.bound:
        return MatchPlan(None, s.bound, steps, cost, 0)
    start = order[0]
    start_est = s.est(frozenset([start]), frozenset())
    return MatchPlan(start, (), steps, cost, start_est)


def _greedy(s: _Search) -> MatchPlan:
    if s.bound:
        vset = frozenset(s.bound)
        cost, steps, eset = s.initial(vset)
        start = None
    else:
        start = min(s.aliases,
                    key=lambda a: (s.est(frozenset([a]), frozenset()), a))
        vset = frozenset([start])
        cost = s.est(vset, frozenset())
        steps = []
        eset = frozenset()
    while len(vset) < len(s.aliases):
        cands = []
        for a in s.aliases:
            if a in vset:
                continue
            t = s.transition(vset, eset, a)
            if t is not None:
                cands.append((t[0], a, t))
        dcost, _a, (d, dsteps, v2, e2) = min(cands, key=lambda c: (c[0], c[1]))
        cost += d
        steps += dsteps
        vset, eset = v2, e2
    return MatchPlan(start, s.bound, steps, cost,
                     s.est(frozenset([start]), frozenset()) if start else 0)


def plan_for_order(pattern: PatternGraph, catalog: Catalog,
                   schema: PropertyGraphSchema, order: Tuple[str, ...],
                   bound: Tuple[str, ...] = ()) -> MatchPlan:
    """Materialize the canonical plan for a specific vertex order (used to
    execute deliberately bad orders in benchmarks)."""
    s = _Search(pattern, catalog, schema, bound)
    steps: List[ExpandStep] = []
    if bound:
        vset = frozenset(bound)
        cost, steps0, eset = s.initial(vset)
        steps.extend(steps0)
        start = None
        rest = [a for a in order if a not in bound]
        start_est = 0
    else:
        start = order[0]
        vset = frozenset([start])
        eset = frozenset()
        start_est = s.est(vset, frozenset())
        cost = start_est
        rest = list(order[1:])
    for a in rest:
        t = s.transition(vset, eset, a)
        if t is None:
            raise ValueError(f"order {order} disconnects at {a!r}")
        d, dsteps, vset, eset = t
        cost += d
        steps.extend(dsteps)
    return MatchPlan(start, tuple(bound), steps, cost, start_est)


def enumerate_order_costs(pattern: PatternGraph, catalog: Catalog,
                          schema: PropertyGraphSchema,
                          bound: Tuple[str, ...] = ()) -> Dict[tuple, int]:
    """Cost of every valid vertex order under the same canonicalization;
    the oracle for DP optimality."""
    s = _Search(pattern, catalog, schema, bound)
    free = [a for a in s.aliases if a not in bound]
    out: Dict[tuple, int] = {}
    for perm in itertools.permutations(free):
        if bound:
            vset = frozenset(bound)
            cost, _steps, eset = s.initial(vset)
            rest = perm
        else:
            vset = frozenset([perm[0]])
            cost = s.est(vset, frozenset())
            eset = frozenset()
            rest = perm[1:]
        ok = True
        for a in rest:
            t = s.transition(vset, eset, a)
            if t is None:
                ok = False
                break
            d, _steps, vset, eset = t
            cost += d
        if ok:
            out[tuple(bound) + perm] = cost
    return out
