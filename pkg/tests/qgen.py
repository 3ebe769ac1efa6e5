"""Random supported-Cypher generator over a schema (for the oracle
properties: anything it emits must parse, optimize, and execute)."""

from __future__ import annotations

import random
from typing import List, Tuple

from flexgraph.model import FLOAT64, INT64, STRING, PropertyGraphSchema


def _walkable_edges(schema: PropertyGraphSchema, from_type: str):
    out = []
    for d in schema.edge_types:
        if d.src_type == from_type:
            out.append((d.name, d.dst_type, ">"))
        if d.dst_type == from_type:
            out.append((d.name, d.src_type, "<"))
        if d.src_type == from_type == d.dst_type:
            out.append((d.name, from_type, "-"))
    return out


def random_query(schema: PropertyGraphSchema, rng: random.Random) -> str:
    """A MATCH chain with optional WHERE / aggregate / ORDER / LIMIT."""
    vt = rng.choice(schema.vertex_types)
    aliases = ["a"]
    parts = [f"(a:{vt.name})"]
    cur = vt.name
    n_hops = rng.randint(1, 3)
    for i in range(n_hops):
        options = _walkable_edges(schema, cur)
        if not options:
            break
        ename, nxt, sym = rng.choice(options)
        alias = chr(ord("a") + len(aliases))
        aliases.append(alias)
        if sym == ">":
            parts.append(f"-[:{ename}]->({alias}:{nxt})")
        elif sym == "<":
            parts.append(f"<-[:{ename}]-({alias}:{nxt})")
        else:
            parts.append(f"-[:{ename}]-({alias}:{nxt})")
        cur = nxt
    match = "MATCH " + "".join(parts)

    where = ""
    if rng.random() < 0.6:
        preds = []
        for _ in range(rng.randint(1, 2)):
            alias = rng.choice(aliases)
            decl = _decl_of(schema, alias, parts)
            props = [(n, d) for n, d in decl.properties if d in (INT64, FLOAT64)]
            if not props:
                continue
            pname, pdt = rng.choice(props)
            op = rng.choice(["<", "<=", ">", ">=", "=", "!="])
            const = (rng.randint(0, 100) if pdt == INT64
                     else round(rng.uniform(0, 200), 1))
            preds.append(f"{alias}.{pname} {op} {const}")
        if preds:
            where = " WHERE " + " AND ".join(preds)

    tail = ""
    if rng.random() < 0.3:
        key = rng.choice(aliases)
        decl = _decl_of(schema, key, parts)
        pname = decl.properties[0][0]
        ret = f"RETURN {key}.{pname} AS k, COUNT({aliases[-1]}) AS cnt"
        if rng.random() < 0.5:
            tail = " ORDER BY k, cnt"
    else:
        items = []
        for alias in rng.sample(aliases, k=min(len(aliases), rng.randint(1, 2))):
            decl = _decl_of(schema, alias, parts)
            pname, _ = rng.choice(list(decl.properties))
            items.append(f"{alias}.{pname} AS {alias}_{pname}")
        ret = "RETURN " + ", ".join(items)
        if rng.random() < 0.4:
            keys = ", ".join(i.split(" AS ")[1] for i in items)
            tail = f" ORDER BY {keys}"
            if rng.random() < 0.5:
                tail += f" LIMIT {rng.randint(1, 5)}"
    return match + where + " " + ret + tail


def _decl_of(schema: PropertyGraphSchema, alias: str, parts: List[str]):
    for p in parts:
        if p.startswith(f"({alias}:") or f"({alias}:" in p:
            label = p.split(f"({alias}:", 1)[1].split(")")[0]
            return schema.vertex_decl(label)
    raise AssertionError(alias)
