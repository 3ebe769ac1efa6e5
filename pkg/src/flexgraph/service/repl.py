"""Line-oriented interactive loop.

Commands: :snapshot <v> pins a version (:snapshot latest unpins),
:params {json}, :backend batch|oltp, :explain on|off, :schema, :quit.
Anything else is a Cypher query; each statement takes a fresh snapshot
unless pinned.
"""

from __future__ import annotations

import json
import sys
from typing import Optional

from ..errors import FlexgraphError
from .session import GraphSession


def format_table(columns, rows, limit: int = 200) -> str:
    shown = rows[:limit]
    cells = [[_cell(v) for v in row] for row in shown]
    widths = [len(c) for c in columns]
    for row in cells:
        for i, c in enumerate(row):
            widths[i] = max(widths[i], len(c))
    sep = "+".join("-" * (w + 2) for w in widths)
    out = [" | ".join(c.ljust(w) for c, w in zip(columns, widths)), sep]
    out.extend(" | ".join(c.ljust(w) for c, w in zip(row, widths))
               for row in cells)
    if len(rows) > limit:
        out.append(f"... ({len(rows) - limit} more rows)")
    out.append(f"({len(rows)} row{'s' if len(rows) != 1 else ''})")
    return "\n".join(out)


def _cell(v) -> str:
    if isinstance(v, dict) and v.get("kind") == "vertex":
        return f"{v['type']}#{v['idx']}"
    if isinstance(v, dict) and v.get("kind") == "edge":
        return f"{v['type']}[{v['row']}]"
    if isinstance(v, dict) and v.get("kind") == "path":
        return f"path({v['hops']} hops)"
    return json.dumps(v) if isinstance(v, (dict, list)) else str(v)


def repl(session: GraphSession, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    params: dict = {}
    pinned: Optional[int] = None
    backend = session.engine
    explain = False

    def emit(text: str) -> None:
        print(text, file=stdout)

    emit("flexgraph repl - :quit to exit, :help for commands")
    while True:
        print("flexgraph> ", end="", file=stdout, flush=True)
        line = stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line:
            continue
        if line.startswith(":"):
            cmd, _, arg = line.partition(" ")
            if cmd in (":quit", ":exit", ":q"):
                break
            if cmd == ":help":
                emit(":snapshot <v>|latest  :params {json}  "
                     ":backend batch|oltp  :explain on|off  :schema  :quit")
            elif cmd == ":snapshot":
                pinned = None if arg.strip() in ("", "latest") else int(arg)
                emit(f"snapshot: {'latest' if pinned is None else pinned}")
            elif cmd == ":params":
                try:
                    params = json.loads(arg or "{}")
                    emit(f"params: {params}")
                except json.JSONDecodeError as e:
                    emit(f"bad JSON: {e}")
            elif cmd == ":backend":
                if arg in ("batch", "oltp"):
                    backend = arg
                    emit(f"backend: {backend}")
                else:
                    emit("usage: :backend batch|oltp")
            elif cmd == ":explain":
                explain = arg != "off"
                emit(f"explain: {'on' if explain else 'off'}")
            elif cmd == ":schema":
                emit(json.dumps(session.schema_json(), indent=2))
            else:
                emit(f"unknown command {cmd}")
            continue
        request = {"lang": "cypher", "text": line, "params": params,
                   "backend": backend, "explain": explain}
        if pinned is not None:
            request["snapshot_version"] = pinned
        try:
            response = session.query(request)
        except FlexgraphError as e:
            emit(f"error: {e}")
            continue
        if "error" in response:
            emit(f"error: {response['error']}")
        if explain and "plan" in response:
            emit(json.dumps(response["plan"], indent=2))
        if "columns" in response:
            emit(format_table(response["columns"], response["rows"]))
            stats = response.get("stats", {})
            emit(f"[{stats.get('latency_ms', 0):.1f} ms, "
                 f"{stats.get('intermediate_tuples', 0)} intermediate tuples]")
