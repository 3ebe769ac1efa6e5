"""Storage backends implementing the retrieval surface."""

from .immutable import ImmutableStore, build_immutable, edge_scan_throughput
from .mvcc import MvccStore, WriteBatch
from .archive import (
    ArchiveStore,
    build_store_from_archive,
    convert_csv_to_archive,
    open_archive,
    write_archive,
)
from .tables import EdgeTable, VertexTable, load_csv_tables

__all__ = [
    "ImmutableStore",
    "build_immutable",
    "edge_scan_throughput",
    "MvccStore",
    "WriteBatch",
    "ArchiveStore",
    "write_archive",
    "open_archive",
    "convert_csv_to_archive",
    "build_store_from_archive",
    "VertexTable",
    "EdgeTable",
    "load_csv_tables",
]
