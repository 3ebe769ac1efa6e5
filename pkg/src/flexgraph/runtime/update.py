"""Update-stream entry point: one atomic batch against the mutable store."""

from __future__ import annotations

from typing import List

from ..errors import ExecError
from ..stores.mvcc import MvccStore


def apply_updates(store: MvccStore, ops: List[dict]) -> int:
    """Apply a list of mutation documents as one commit; returns the new
    version. Op shapes:

      {"op":"insert_vertex","type":T,"pk":K,"props":{...}}
      {"op":"insert_edge","type":T,"src_pk":K,"dst_pk":K,"props":{...}}
      {"op":"delete_edge","type":T,"src_pk":K,"dst_pk":K,"ordinal":0}
      {"op":"set_vertex_prop","type":T,"pk":K,"prop":P,"value":V}
      {"op":"set_edge_prop","type":T,"src_pk":K,"dst_pk":K,"prop":P,
       "value":V,"ordinal":0}
    """
    if not isinstance(store, MvccStore):
        raise ExecError("update", "store is read-only")
    with store.begin_batch() as batch:
        for doc in ops:
            kind = doc.get("op")
            if kind == "insert_vertex":
                batch.insert_vertex(doc["type"], doc["pk"],
                                    doc.get("props") or {})
            elif kind == "insert_edge":
                batch.insert_edge(doc["type"], doc["src_pk"], doc["dst_pk"],
                                  doc.get("props") or {})
            elif kind == "delete_edge":
                batch.delete_edge(doc["type"], doc["src_pk"], doc["dst_pk"],
                                  doc.get("ordinal", 0))
            elif kind == "set_vertex_prop":
                batch.set_vertex_prop(doc["type"], doc["pk"], doc["prop"],
                                      doc["value"])
            elif kind == "set_edge_prop":
                batch.set_edge_prop(doc["type"], doc["src_pk"], doc["dst_pk"],
                                    doc["prop"], doc["value"],
                                    doc.get("ordinal", 0))
            else:
                raise ExecError("update", f"unknown op {kind!r}")
        return batch.commit()
